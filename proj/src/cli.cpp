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

#include "mia/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mia/experiments.hpp"
#include "mia/ingest.hpp"
#include "mia/report.hpp"
#include "mia/tables.hpp"
#include "mia/text.hpp"

namespace mia {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

struct DataFlags {
  std::string dataset;
  std::string synthetic;
  std::string input;
  std::string data_dir;
  std::string model = "logreg";
  std::optional<double> epsilon;
  int bins = 10;
  int shuffles = 35;
  std::uint64_t seed = 0;
  double train_fraction = 0.5;
  std::string out_dir;
};

void add_data_flags(CLI::App* cmd, DataFlags& f, bool with_model) {
  cmd->add_option("--dataset", f.dataset, "adult, compas, or a canonical population CSV");
  cmd->add_option("--synthetic", f.synthetic, "synthetic population spec (JSON)");
  cmd->add_option("--input", f.input, "audit input CSV id,y,z,m,conf_0..");
  cmd->add_option("--data-dir", f.data_dir, "directory with the raw dataset files");
  if (with_model) {
    cmd->add_option("--model", f.model, "logreg | mlp6 | mlp100 | mlp500 | dp-logreg | eo-logreg");
    cmd->add_option("--epsilon", f.epsilon, "privacy level for dp-logreg");
    cmd->add_option("--train-fraction", f.train_fraction, "share of each (y, z) cell used for training");
  }
  cmd->add_option("--bins", f.bins, "confidence bins");
  cmd->add_option("--shuffles", f.shuffles, "train/test shuffles");
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--out", f.out_dir, "output directory");
}

void check_common(const DataFlags& f) {
  if (f.bins < 2) throw UsageError("--bins must be at least 2");
  if (f.shuffles < 1) throw UsageError("--shuffles must be at least 1");
  if (!(f.train_fraction > 0.0 && f.train_fraction < 1.0)) {
    throw UsageError("--train-fraction must lie in (0, 1)");
  }
}

ModelRecipe recipe_from(const DataFlags& f) {
  const auto& names = recipe_names();
  if (std::find(names.begin(), names.end(), f.model) == names.end()) {
    throw UsageError("unknown --model '" + f.model + "'");
  }
  if (f.model == "dp-logreg" && !f.epsilon) throw UsageError("dp-logreg needs --epsilon");
  if (f.model != "dp-logreg" && f.epsilon) throw UsageError("--epsilon only applies to dp-logreg");
  if (f.epsilon && *f.epsilon <= 0.0) throw UsageError("--epsilon must be positive");
  return make_recipe(f.model, f.epsilon);
}

Json config_json(const DataFlags& f) {
  Json c;
  if (!f.dataset.empty()) c["dataset"] = f.dataset;
  if (!f.synthetic.empty()) c["synthetic"] = f.synthetic;
  if (!f.input.empty()) c["input"] = f.input;
  c["model"] = f.model;
  c["epsilon"] = f.epsilon ? Json(*f.epsilon) : Json(nullptr);
  c["bins"] = f.bins;
  c["shuffles"] = f.shuffles;
  c["seed"] = f.seed;
  c["train_fraction"] = f.train_fraction;
  return c;
}

std::string prepare_out(const std::string& dir) {
  const auto d = dir.empty() ? env_or("MIA_AUDIT_OUT", "mia-out") : dir;
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw DataError("cannot create output directory " + d + ": " + ec.message());
  return d;
}

std::string data_dir(const DataFlags& f) {
  return f.data_dir.empty() ? env_or("MIA_DATA_DIR", "data") : f.data_dir;
}

// Population for --dataset or --synthetic.
LoadedDataset population_from(const DataFlags& f) {
  if (!f.synthetic.empty()) {
    LoadedDataset d;
    d.population = synth_generate(load_synthetic_spec(f.synthetic));
    d.manifest.name = "synthetic";
    d.manifest.raw_rows = d.population.size();
    d.manifest.feature_count = d.population.feature_count();
    d.manifest.subgroup_names = d.population.subgroup_names;
    return d;
  }
  return load_dataset(f.dataset, data_dir(f));
}

int count_sources(const DataFlags& f) {
  return (f.dataset.empty() ? 0 : 1) + (f.synthetic.empty() ? 0 : 1) + (f.input.empty() ? 0 : 1);
}

// Balanced evaluation set from an audit input CSV with an m column.
EvaluationSet set_from_input(const DataFlags& f) {
  const auto in = read_audit_csv(f.input);
  if (in.membership.empty()) throw DataError(f.input + ": audit input needs an m column");
  std::vector<ScoredExample> members, nonmembers;
  for (std::size_t i = 0; i < in.records.size(); ++i) {
    (in.membership[i] == 1 ? members : nonmembers).push_back(in.records[i]);
  }
  return build_evaluation_set(members, nonmembers, in.num_classes, in.num_subgroups, f.bins, f.seed)
      .set;
}

std::vector<std::string> default_names(int k) {
  std::vector<std::string> n;
  for (int z = 0; z < k; ++z) n.push_back("z" + std::to_string(z));
  return n;
}

// ---------------------------------------------------------------------------

int cmd_audit(const DataFlags& f, std::ostream& out) {
  check_common(f);
  if (count_sources(f) != 1) throw UsageError("audit needs exactly one of --dataset, --synthetic, --input");
  const auto dir = prepare_out(f.out_dir);
  if (!f.input.empty()) {
    const auto set = set_from_input(f);
    const auto table = estimate_tables(set);
    const auto cmp = compare_adversaries(table, set);
    const auto names = default_names(set.num_subgroups());
    Json j;
    j["metadata"] = metadata_json("audit", f.seed, config_json(f));
    j["bins"] = set.bins();
    j["num_classes"] = set.num_classes();
    j["num_subgroups"] = set.num_subgroups();
    j["records"] = set.size();
    j["cell_counts"] = cell_counts_json(set);
    j["report"] = vulnerability_report_json({cmp.regular, cmp.discriminating}, names);
    write_json(dir + "/report.json", j);
    Json prof;
    prof["metadata"] = metadata_json("audit", f.seed, config_json(f));
    prof["profile"] = profile_json(table, verify_identities(set, table, 1e-9));
    write_json(dir + "/profile.json", prof);
    std::ofstream csv(dir + "/profile.csv");
    csv << "y,z,b,gamma_z\n";
    append_profile_csv(csv, compute_gaps(table), -1);
    write_evaluation_set_csv(dir + "/evaluation_set.csv", set);
    out << "records " << set.size() << "  V^R " << fixed2(percent2(cmp.regular.vulnerability))
        << "  V^D " << fixed2(percent2(cmp.discriminating.vulnerability)) << "  max-disparity R "
        << fixed2(percent2(cmp.regular.max_disparity)) << " D "
        << fixed2(percent2(cmp.discriminating.max_disparity)) << "\n";
    return kExitOk;
  }

  const auto recipe = recipe_from(f);
  const auto data = population_from(f);
  StudyOptions opt{f.shuffles, f.seed, f.bins, f.train_fraction};
  const auto study = run_shuffle_study(data.population, recipe, opt, data.manifest.name);
  const auto& names = study.subgroup_names;

  Json j;
  j["metadata"] = metadata_json("audit", f.seed, config_json(f));
  j["dataset"] = {{"name", data.manifest.name},
                  {"examples", data.population.size()},
                  {"features", data.population.feature_count()},
                  {"num_classes", data.population.num_classes},
                  {"num_subgroups", data.population.num_subgroups},
                  {"subgroups", names}};
  j["aggregate"] = aggregate_json(study.aggregate, names);
  Json shuffles = Json::array();
  Json profiles = Json::array();
  std::ofstream pcsv(dir + "/profile.csv");
  pcsv << "shuffle,y,z,b,gamma_z\n";
  for (const auto& s : study.shuffles) {
    Json x;
    x["shuffle"] = s.index;
    x["seed"] = s.seed;
    x["train_accuracy"] = percent2(s.train_accuracy);
    x["test_accuracy"] = percent2(s.test_accuracy);
    x["overfitting"] = percent2(s.overfitting);
    x["records"] = s.set.size();
    x["cell_counts"] = cell_counts_json(s.set);
    x["report"] = vulnerability_report_json(s.report, names);
    shuffles.push_back(x);
    const auto table = estimate_tables(s.set);
    Json p;
    p["shuffle"] = s.index;
    p["profile"] = profile_json(table, verify_identities(s.set, table, 1e-9));
    profiles.push_back(p);
    append_profile_csv(pcsv, compute_gaps(table), s.index);
  }
  j["shuffles"] = shuffles;
  write_json(dir + "/aggregate.json", j);
  Json pj;
  pj["metadata"] = metadata_json("audit", f.seed, config_json(f));
  pj["profiles"] = profiles;
  write_json(dir + "/profile.json", pj);
  write_study_csv(dir + "/study.csv", study);
  write_records_csv(dir + "/records.csv", study);

  const auto& a = study.aggregate;
  out << data.manifest.name << " / " << recipe.name << " over " << f.shuffles << " shuffles (pp)\n"
      << "  test accuracy " << fixed2(percent2(a.test_accuracy.mean)) << "  overfitting "
      << fixed2(percent2(a.overfitting.mean)) << "\n"
      << "  regular        V " << fixed2(percent2(a.regular.mean)) << "  max-disparity "
      << fixed2(percent2(a.regular_max_disparity.mean)) << "\n"
      << "  discriminating V " << fixed2(percent2(a.discriminating.mean)) << "  max-disparity "
      << fixed2(percent2(a.discriminating_max_disparity.mean)) << "\n";
  return kExitOk;
}

int cmd_verify(const DataFlags& f, bool corrupt, int geo_tables, std::ostream& out) {
  check_common(f);
  if (count_sources(f) != 1) {
    throw UsageError("verify-identities needs exactly one of --dataset, --synthetic, --input");
  }
  if (geo_tables < 0) throw UsageError("--geo-tables must be nonnegative");
  constexpr double kTol = 1e-9;
  std::vector<EvaluationSet> sets;
  if (!f.input.empty()) {
    sets.push_back(set_from_input(f));
  } else {
    const auto recipe = recipe_from(f);
    const auto data = population_from(f);
    StudyOptions opt{f.shuffles, f.seed, f.bins, f.train_fraction};
    auto study = run_shuffle_study(data.population, recipe, opt, data.manifest.name);
    for (auto& s : study.shuffles) sets.push_back(std::move(s.set));
  }

  bool all_ok = true;
  auto print = [&](const std::string& scope, const IdentityResult& r) {
    out << scope << "  " << r.name << "  residual " << format_double(r.residual) << "  "
        << (r.passed ? "PASS" : "FAIL");
    if (!r.detail.empty()) out << "  (" << r.detail << ")";
    out << "\n";
    all_ok &= r.passed;
  };
  for (std::size_t i = 0; i < sets.size(); ++i) {
    auto table = estimate_tables(sets[i]);
    if (corrupt) {
      // Negative control: move one member record to another bin.
      const auto& r = sets[i].records().front();
      const int m = r.member;
      table.add_count(m, r.label, r.subgroup, r.bin, -1);
      table.add_count(m, r.label, r.subgroup, (r.bin + 1) % table.bins(), 1);
    }
    for (const auto& r : verify_identities(sets[i], table, kTol)) print("set " + std::to_string(i), r);
  }

  auto rng = make_rng(f.seed, {0x67656f});
  for (int t = 0; t < geo_tables; ++t) {
    const int p = 2 + t % 3, k = 2 + t % 4;
    const auto table = geo_table(p, k, f.bins, true, rng);
    const auto set = materialize(table);
    for (const auto& r : verify_identities(set, table, kTol)) {
      if (r.name.rfind("geo", 0) == 0) print("geo " + std::to_string(t), r);
    }
    IdentityResult no_bias{"geo.no_class_bias_zero_disparity", 0.0, kTol, true, {}};
    try {
      no_bias.passed = geo_no_bias_implication_check(table);
      no_bias.residual = no_bias.passed ? 0.0 : 1.0;
    } catch (const GeoPreconditionError& e) {
      no_bias.passed = false;
      no_bias.detail = e.what();
    }
    print("geo " + std::to_string(t), no_bias);
  }
  out << (all_ok ? "all identities hold\n" : "identity check FAILED\n");
  return all_ok ? kExitOk : kExitDomain;
}

std::vector<int> parse_grid(const std::string& text) {
  std::vector<int> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      grid.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("--grid: not an integer: '" + item + "'");
    }
  }
  if (grid.empty()) throw UsageError("--grid must list at least one value");
  return grid;
}

int cmd_sweep(const DataFlags& f, const std::string& kind, int target, const std::string& grid_text,
              std::ostream& out) {
  check_common(f);
  if (f.synthetic.empty()) throw UsageError("sweep needs --synthetic");
  if (kind != "size" && kind != "equal") throw UsageError("--kind must be size or equal");
  const auto grid = parse_grid(grid_text);
  const auto recipe = recipe_from(f);
  auto spec = load_synthetic_spec(f.synthetic);
  const auto dir = prepare_out(f.out_dir);
  StudyOptions opt{f.shuffles, f.seed, f.bins, f.train_fraction};
  const auto sweep = kind == "size" ? subgroup_size_sweep(spec, target, grid, recipe, opt)
                                    : equal_representation_sweep(spec, grid, recipe, opt);
  std::vector<std::string> names;
  for (int z = 0; z < spec.num_subgroups; ++z) names.push_back("g" + std::to_string(z));
  write_sweep_csv(dir + "/sweep.csv", sweep, names);
  Json j;
  auto cfg = config_json(f);
  cfg["kind"] = kind;
  cfg["target"] = target;
  cfg["grid"] = grid;
  j["metadata"] = metadata_json("sweep", f.seed, cfg);
  j["variable"] = sweep.variable;
  Json pts = Json::array();
  for (const auto& p : sweep.points) {
    pts.push_back({{"value", p.value}, {"spec_hash", p.spec_hash}, {"aggregate", aggregate_json(p.aggregate, names)}});
  }
  j["points"] = pts;
  write_json(dir + "/sweep.json", j);
  for (const auto& p : sweep.points) {
    out << sweep.variable << "=" << p.value << "  V^D by subgroup:";
    for (const auto& v : p.aggregate.discriminating_by_subgroup) out << " " << fixed2(percent2(v.mean));
    out << "\n";
  }
  return kExitOk;
}

int cmd_significance(const std::string& study_dir, const std::string& pair, bool max_only,
                     const std::string& adversary, int n_perm, std::uint64_t seed, double alpha,
                     const std::string& out_dir, std::ostream& out) {
  if (n_perm < 99) throw UsageError("--permutations must be at least 99");
  if (adversary != "regular" && adversary != "discriminating") {
    throw UsageError("--adversary must be regular or discriminating");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
  if (!pair.empty() && max_only) throw UsageError("--pair and --max are exclusive");
  const auto agg_path = study_dir + "/aggregate.json";
  const auto rec_path = study_dir + "/records.csv";
  if (!fs::exists(agg_path) || !fs::exists(rec_path)) {
    throw DataError("study directory " + study_dir + " lacks aggregate.json or records.csv");
  }
  const auto agg = read_json(agg_path);
  int bins = 0, p = 0, k = 0;
  std::vector<std::string> names;
  try {
    bins = agg.at("metadata").at("config").at("bins").get<int>();
    p = agg.at("dataset").at("num_classes").get<int>();
    k = agg.at("dataset").at("num_subgroups").get<int>();
    names = agg.at("dataset").at("subgroups").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw DataError(agg_path + ": " + e.what());
  }
  const auto sets = read_records_csv(rec_path, bins, p, k);
  const auto kind = adversary == "regular" ? AdversaryKind::kRegular : AdversaryKind::kDiscriminating;
  auto index_of = [&](const std::string& s) {
    const auto it = std::find(names.begin(), names.end(), s);
    if (it != names.end()) return static_cast<int>(it - names.begin());
    try {
      const int v = std::stoi(s);
      if (v >= 0 && v < k) return v;
    } catch (const std::logic_error&) {
    }
    throw UsageError("unknown subgroup '" + s + "'");
  };

  Json j;
  Json cfg;
  cfg["study"] = study_dir;
  cfg["adversary"] = adversary;
  cfg["permutations"] = n_perm;
  cfg["alpha"] = alpha;
  if (!pair.empty()) cfg["pair"] = pair;
  if (max_only) cfg["max"] = true;
  j["metadata"] = metadata_json("significance", seed, cfg);
  Json pairs = Json::array();
  if (!pair.empty()) {
    const auto comma = pair.find(',');
    if (comma == std::string::npos) throw UsageError("--pair expects a,b");
    const int a = index_of(pair.substr(0, comma)), b = index_of(pair.substr(comma + 1));
    const auto r = permutation_disparity_test(sets, kind, {a, b}, n_perm, seed);
    pairs.push_back({{"pair", {names[a], names[b]}},
                     {"observed", percent2(r.observed)},
                     {"p_value", r.p_value},
                     {"threshold", alpha},
                     {"decision", r.p_value < alpha ? 1 : 0}});
    out << names[a] << " vs " << names[b] << "  p = " << format_double(r.p_value) << "\n";
  } else if (!max_only) {
    for (const auto& t : pairwise_permutation_tests(sets, kind, n_perm, seed, alpha)) {
      pairs.push_back({{"pair", {names[t.subgroup], names[t.other_subgroup]}},
                       {"observed", percent2(t.observed)},
                       {"p_value", t.p_value},
                       {"threshold", t.threshold},
                       {"decision", t.significant ? 1 : 0}});
      out << names[t.subgroup] << " vs " << names[t.other_subgroup] << "  p = "
          << format_double(t.p_value) << (t.significant ? "  *" : "") << "\n";
    }
  }
  j["pairs"] = pairs;
  if (pair.empty()) {
    const auto r = permutation_disparity_test(sets, kind, {}, n_perm, derive_seed(seed, {0x6d6178}));
    j["max_disparity"] = {{"observed", percent2(r.observed)},
                          {"p_value", r.p_value},
                          {"threshold", alpha},
                          {"decision", r.p_value < alpha ? 1 : 0}};
    out << "max-disparity  p = " << format_double(r.p_value) << "\n";
  }
  const auto dir = prepare_out(out_dir.empty() ? study_dir : out_dir);
  write_json(dir + "/significance.json", j);
  return kExitOk;
}

int cmd_ingest(const DataFlags& f, std::ostream& out) {
  if (f.dataset.empty()) throw UsageError("ingest needs --dataset");
  const auto data = load_dataset(f.dataset, data_dir(f));
  const auto dir = prepare_out(f.out_dir);
  write_population_csv(dir + "/" + data.manifest.name + ".csv", data.population);
  const auto& m = data.manifest;
  Json j;
  j["metadata"] = metadata_json("ingest", 0, {{"dataset", f.dataset}});
  j["manifest"] = {{"name", m.name},
                   {"expected_rows", m.expected_rows},
                   {"raw_rows", m.raw_rows},
                   {"dropped_rows", m.dropped_rows},
                   {"examples", data.population.size()},
                   {"feature_count", m.feature_count},
                   {"label_column", m.label_column},
                   {"subgroup_column", m.subgroup_column},
                   {"subgroups", m.subgroup_names},
                   {"feature_names", data.population.feature_names}};
  write_json(dir + "/" + m.name + ".manifest.json", j);
  out << m.name << ": " << data.population.size() << " examples, " << m.feature_count
      << " features, " << m.dropped_rows << " rows dropped\n";
  return kExitOk;
}

int cmd_datagen(const std::string& spec_path, const std::string& out_dir, std::ostream& out) {
  if (spec_path.empty()) throw UsageError("datagen needs --spec");
  const auto spec = load_synthetic_spec(spec_path);
  const auto pop = synth_generate(spec);
  const auto dir = prepare_out(out_dir);
  write_population_csv(dir + "/synthetic.csv", pop);
  Json j;
  j["metadata"] = metadata_json("datagen", spec.seed, {{"spec", spec_path}});
  j["spec"] = Json::parse(synthetic_spec_to_json(spec));
  j["fingerprint"] = spec_fingerprint(spec);
  write_json(dir + "/synthetic.spec.json", j);
  out << "synthetic: " << pop.size() << " examples\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Membership-inference vulnerability auditing", "mia-audit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  DataFlags audit_f, verify_f, sweep_f, ingest_f;
  auto* audit = app.add_subcommand("audit", "train, attack and report over shuffles");
  add_data_flags(audit, audit_f, true);

  auto* verify = app.add_subcommand("verify-identities", "check the closed-form identities");
  verify_f.shuffles = 1;
  add_data_flags(verify, verify_f, true);
  bool corrupt = false;
  int geo_tables = 20;
  verify->add_flag("--corrupt", corrupt, "perturb the estimated table (negative control)");
  verify->add_option("--geo-tables", geo_tables, "constructed GEO tables to check");

  auto* sweep = app.add_subcommand("sweep", "subgroup-size or equal-representation sweep");
  add_data_flags(sweep, sweep_f, true);
  std::string kind, grid;
  int target = 0;
  sweep->add_option("--kind", kind, "size | equal")->required();
  sweep->add_option("--target", target, "target subgroup (size sweep)");
  sweep->add_option("--grid", grid, "comma-separated grid values")->required();

  auto* sig = app.add_subcommand("significance", "permutation test on a stored study");
  std::string study_dir, pair, adversary = "discriminating", sig_out;
  bool max_only = false;
  int n_perm = 9999;
  std::uint64_t sig_seed = 0;
  double alpha = 0.005;
  sig->add_option("--study", study_dir, "directory written by audit")->required();
  sig->add_option("--pair", pair, "subgroup pair a,b (names or indices)");
  sig->add_flag("--max", max_only, "test the max-disparity statistic only");
  sig->add_option("--adversary", adversary, "regular | discriminating");
  sig->add_option("--permutations", n_perm, "number of permutations (>= 99)");
  sig->add_option("--seed", sig_seed, "permutation seed");
  sig->add_option("--alpha", alpha, "family-wise level");
  sig->add_option("--out", sig_out, "output directory (default: the study directory)");

  auto* ingest = app.add_subcommand("ingest", "convert a raw dataset to the canonical CSV");
  ingest->add_option("--dataset", ingest_f.dataset, "adult | compas")->required();
  ingest->add_option("--data-dir", ingest_f.data_dir, "directory with the raw files");
  ingest->add_option("--out", ingest_f.out_dir, "output directory");

  auto* datagen = app.add_subcommand("datagen", "sample a synthetic population");
  std::string spec_path, datagen_out;
  datagen->add_option("--spec", spec_path, "synthetic spec (JSON)")->required();
  datagen->add_option("--out", datagen_out, "output directory");

  std::vector<const char*> argv;
  argv.push_back("mia-audit");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*audit) return cmd_audit(audit_f, out);
    if (*verify) return cmd_verify(verify_f, corrupt, geo_tables, out);
    if (*sweep) return cmd_sweep(sweep_f, kind, target, grid, out);
    if (*sig) {
      return cmd_significance(study_dir, pair, max_only, adversary, n_perm, sig_seed, alpha,
                              sig_out, out);
    }
    if (*ingest) return cmd_ingest(ingest_f, out);
    if (*datagen) return cmd_datagen(spec_path, datagen_out, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace mia
