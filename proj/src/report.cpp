/*
 * Copyright 2026 The mia-audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mia/report.hpp"

#include <fstream>
#include <map>

#include "mia/ingest.hpp"
#include "mia/text.hpp"

namespace mia {

Json metadata_json(const std::string& command, std::uint64_t seed, const Json& config) {
  Json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config;
  return j;
}

namespace {

Json pp_or_null(const std::optional<double>& v) { return v ? Json(percent2(*v)) : Json(nullptr); }

std::string name_of(const std::vector<std::string>& names, int z) {
  return static_cast<std::size_t>(z) < names.size() ? names[z] : "z" + std::to_string(z);
}

}  // namespace

Json adversary_report_json(const AdversaryReport& r, const std::vector<std::string>& names) {
  Json j;
  j["kind"] = std::string(to_string(r.kind));
  j["vulnerability"] = percent2(r.vulnerability);
  Json by = Json::object();
  for (std::size_t z = 0; z < r.by_subgroup.size(); ++z) {
    by[name_of(names, static_cast<int>(z))] = pp_or_null(r.by_subgroup[z]);
  }
  j["by_subgroup"] = by;
  Json m = Json::array();
  for (const auto& row : r.disparity) {
    Json jr = Json::array();
    for (const auto& v : row) jr.push_back(pp_or_null(v));
    m.push_back(jr);
  }
  j["disparity"] = m;
  j["max_disparity"] = percent2(r.max_disparity);
  return j;
}

Json vulnerability_report_json(const VulnerabilityReport& r, const std::vector<std::string>& names) {
  Json j;
  j["units"] = "percentage points";
  j["regular"] = adversary_report_json(r.regular, names);
  j["discriminating"] = adversary_report_json(r.discriminating, names);
  return j;
}

Json mean_std_json(const MeanStd& v) {
  Json j;
  j["mean"] = percent2(v.mean);
  j["std"] = percent2(v.std);
  j["n"] = v.count;
  return j;
}

Json aggregate_json(const StudyAggregate& a, const std::vector<std::string>& names) {
  Json j;
  j["units"] = "percentage points";
  j["train_accuracy"] = mean_std_json(a.train_accuracy);
  j["test_accuracy"] = mean_std_json(a.test_accuracy);
  j["overfitting"] = mean_std_json(a.overfitting);
  auto adversary = [&](const MeanStd& v, const MeanStd& md, const std::vector<MeanStd>& by) {
    Json x;
    x["vulnerability"] = mean_std_json(v);
    x["max_disparity"] = mean_std_json(md);
    Json jb = Json::object();
    for (std::size_t z = 0; z < by.size(); ++z) jb[name_of(names, static_cast<int>(z))] = mean_std_json(by[z]);
    x["by_subgroup"] = jb;
    return x;
  };
  j["regular"] = adversary(a.regular, a.regular_max_disparity, a.regular_by_subgroup);
  j["discriminating"] =
      adversary(a.discriminating, a.discriminating_max_disparity, a.discriminating_by_subgroup);
  return j;
}

Json cell_counts_json(const EvaluationSet& set) {
  std::map<std::tuple<int, int, int>, int> counts;
  for (const auto& r : set.records()) ++counts[{r.label, r.subgroup, r.member}];
  Json j = Json::array();
  for (const auto& [key, n] : counts) {
    const auto [y, z, m] = key;
    j.push_back({{"y", y}, {"z", z}, {"m", m}, {"count", n}});
  }
  return j;
}

Json identities_json(const std::vector<IdentityResult>& ids) {
  Json j = Json::array();
  for (const auto& r : ids) {
    Json x;
    x["name"] = r.name;
    x["residual"] = r.residual;
    x["tolerance"] = r.tolerance;
    x["passed"] = r.passed;
    if (!r.detail.empty()) x["detail"] = r.detail;
    j.push_back(x);
  }
  return j;
}

Json profile_json(const FrequencyTable& table, const std::vector<IdentityResult>& identities) {
  const auto gaps = compute_gaps(table);
  const auto prof = compute_profile(table, gaps);
  const int p = table.num_classes(), k = table.num_subgroups(), bins = table.bins();
  Json j;
  Json gamma = Json::array(), gamma_z = Json::array();
  for (int b = 0; b < bins; ++b) {
    Json row = Json::array(), rowz = Json::array();
    for (int y = 0; y < p; ++y) {
      row.push_back(gaps.at(b, y));
      Json per_z = Json::array();
      for (int z = 0; z < k; ++z) per_z.push_back(gaps.at(b, y, z));
      rowz.push_back(per_z);
    }
    gamma.push_back(row);
    gamma_z.push_back(rowz);
  }
  j["gamma"] = gamma;      // [b][y]
  j["gamma_z"] = gamma_z;  // [b][y][z]
  j["tau"] = prof.tau;
  Json tz = Json::array(), rz = Json::array();
  for (int y = 0; y < p; ++y) {
    Json a = Json::array(), c = Json::array();
    for (int z = 0; z < k; ++z) {
      a.push_back(prof.tau_at(y, z));
      c.push_back(prof.rho_at(y, z));
    }
    tz.push_back(a);
    rz.push_back(c);
  }
  j["tau_z"] = tz;  // [y][z]
  j["rho_z"] = rz;  // [y][z]
  j["pr_y"] = prof.pr_y;
  j["pr_z"] = prof.pr_z;
  j["undefined_class_cells"] = prof.undefined_class_cells;
  j["undefined_subgroup_cells"] = prof.undefined_subgroup_cells;
  const auto cf = closed_form_vulnerability(prof);
  j["closed_form"] = {{"regular", cf.regular}, {"discriminating", cf.discriminating}};
  j["identities"] = identities_json(identities);
  return j;
}

void write_study_csv(const std::string& path, const ShuffleStudy& study) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "shuffle,seed,subgroup,adversary,vulnerability,test_accuracy,overfitting\n";
  for (const auto& s : study.shuffles) {
    for (const auto* r : {&s.report.regular, &s.report.discriminating}) {
      for (std::size_t z = 0; z < r->by_subgroup.size(); ++z) {
        out << s.index << ',' << s.seed << ',' << csv_escape(name_of(study.subgroup_names, static_cast<int>(z)))
            << ',' << to_string(r->kind) << ','
            << (r->by_subgroup[z] ? fixed2(percent2(*r->by_subgroup[z])) : std::string()) << ','
            << fixed2(percent2(s.test_accuracy)) << ',' << fixed2(percent2(s.overfitting)) << '\n';
      }
    }
  }
}

void write_records_csv(const std::string& path, const ShuffleStudy& study) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "shuffle,id,y,z,m,bin\n";
  for (const auto& s : study.shuffles) {
    for (const auto& r : s.set.records()) {
      out << s.index << ',' << csv_escape(r.id) << ',' << r.label << ',' << r.subgroup << ','
          << r.member << ',' << r.bin << '\n';
    }
  }
}

std::vector<EvaluationSet> read_records_csv(const std::string& path, int bins, int num_classes,
                                            int num_subgroups) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line != "shuffle,id,y,z,m,bin") throw DataError(path + ": unexpected header");
  std::map<int, std::vector<AuditRecord>> by_shuffle;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw DataError(path + " line " + std::to_string(lineno) + ": expected 6 fields");
    try {
      by_shuffle[std::stoi(f[0])].push_back(
          {f[1], std::stoi(f[2]), std::stoi(f[3]), std::stoi(f[4]), std::stoi(f[5])});
    } catch (const std::logic_error&) {
      throw DataError(path + " line " + std::to_string(lineno) + ": malformed integer");
    }
  }
  std::vector<EvaluationSet> sets;
  for (auto& [shuffle, recs] : by_shuffle) {
    sets.emplace_back(std::move(recs), bins, num_classes, num_subgroups,
                      static_cast<std::uint64_t>(shuffle));
  }
  return sets;
}

void append_profile_csv(std::ostream& out, const GapTensor& gaps, int shuffle) {
  for (int y = 0; y < gaps.num_classes; ++y)
    for (int z = 0; z < gaps.num_subgroups; ++z)
      for (int b = 0; b < gaps.bins; ++b) {
        if (shuffle >= 0) out << shuffle << ',';
        out << y << ',' << z << ',' << b << ',' << format_double(gaps.at(b, y, z)) << '\n';
      }
}

void write_sweep_csv(const std::string& path, const SweepResult& sweep,
                     const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << sweep.variable << ",spec_hash,subgroup,adversary,mean,std,count\n";
  for (const auto& pt : sweep.points) {
    for (int adv = 0; adv < 2; ++adv) {
      const auto& by = adv == 0 ? pt.aggregate.regular_by_subgroup : pt.aggregate.discriminating_by_subgroup;
      for (std::size_t z = 0; z < by.size(); ++z) {
        out << pt.value << ',' << pt.spec_hash << ',' << csv_escape(name_of(names, static_cast<int>(z)))
            << ',' << (adv == 0 ? "regular" : "discriminating") << ',' << fixed2(percent2(by[z].mean))
            << ',' << fixed2(percent2(by[z].std)) << ',' << by[z].count << '\n';
      }
    }
  }
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace mia
