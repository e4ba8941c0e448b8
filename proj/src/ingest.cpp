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

#include "mia/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "mia/text.hpp"

namespace mia {

namespace fs = std::filesystem;

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& n : subgroup_names) {
    if (n.empty()) throw ValidationError("empty subgroup name in manifest " + name);
    if (!seen.insert(n).second) throw ValidationError("duplicate subgroup name " + n);
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::ifstream open_or_throw(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

// ---------------------------------------------------------------------------
// ADULT

constexpr std::size_t kAdultRows = 48842;
const std::vector<std::string> kAdultColumns = {
    "age",          "workclass",    "fnlwgt",       "education",     "education-num",
    "marital-status", "occupation", "relationship", "race",          "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country", "income"};
const std::vector<int> kAdultCategorical = {1, 5, 6, 7, 8, 9, 13};
const std::vector<int> kAdultNumeric = {0, 4, 10, 11, 12};
const std::vector<std::pair<std::string, std::string>> kAdultRace = {
    {"White", "WH"}, {"Black", "BL"}, {"Amer-Indian-Eskimo", "AI"},
    {"Asian-Pac-Islander", "AE"}, {"Other", "OT"}};

struct RawRow {
  std::string id;
  std::vector<std::string> fields;
  std::size_t line = 0;
  std::string file;
};

void read_adult_file(const fs::path& p, std::vector<RawRow>& rows) {
  auto in = open_or_throw(p);
  std::string line;
  std::size_t lineno = 0;
  const std::string stem = p.filename().string();
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '|') continue;  // blank lines and the test file's banner
    auto parts = split_csv_line(t);
    if (parts.size() != kAdultColumns.size()) {
      throw DataError(stem + " line " + std::to_string(lineno) + ": expected " +
                      std::to_string(kAdultColumns.size()) + " fields, got " +
                      std::to_string(parts.size()));
    }
    for (auto& f : parts) f = trim(f);
    rows.push_back({stem + ":" + std::to_string(lineno), std::move(parts), lineno, stem});
  }
}

double parse_number(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError(where + ": not a number: '" + s + "'");
  return v;
}

}  // namespace

LoadedDataset load_adult(const std::string& path) {
  std::vector<RawRow> rows;
  const fs::path p(path);
  if (fs::is_directory(p)) {
    read_adult_file(p / "adult.data", rows);
    read_adult_file(p / "adult.test", rows);
  } else {
    read_adult_file(p, rows);
  }

  // Category vocabularies over all rows, sorted for a stable encoding.
  std::vector<std::set<std::string>> vocab(kAdultColumns.size());
  for (const auto& r : rows)
    for (int c : kAdultCategorical) vocab[c].insert(r.fields[c]);

  LoadedDataset out;
  auto& pop = out.population;
  pop.num_classes = 2;
  pop.num_subgroups = static_cast<int>(kAdultRace.size());
  std::unordered_map<std::string, int> race_index;
  for (std::size_t i = 0; i < kAdultRace.size(); ++i) {
    race_index[kAdultRace[i].first] = static_cast<int>(i);
    pop.subgroup_names.push_back(kAdultRace[i].second);
  }
  std::vector<std::unordered_map<std::string, int>> offset(kAdultColumns.size());
  for (int c : kAdultNumeric) pop.feature_names.push_back(kAdultColumns[c]);
  for (int c : kAdultCategorical) {
    for (const auto& v : vocab[c]) {
      offset[c][v] = static_cast<int>(pop.feature_names.size());
      pop.feature_names.push_back(kAdultColumns[c] + "=" + v);
    }
  }
  const std::size_t d = pop.feature_names.size();

  std::size_t dropped = 0;
  for (const auto& r : rows) {
    const std::string where = r.id;
    bool missing_numeric = false;
    for (int c : kAdultNumeric) missing_numeric |= r.fields[c].empty() || r.fields[c] == "?";
    if (missing_numeric) {
      ++dropped;
      continue;
    }
    LabeledExample ex;
    ex.id = r.id;
    ex.features.assign(d, 0.0);
    for (std::size_t j = 0; j < kAdultNumeric.size(); ++j) {
      ex.features[j] = parse_number(r.fields[kAdultNumeric[j]], where);
    }
    for (int c : kAdultCategorical) ex.features[offset[c].at(r.fields[c])] = 1.0;
    std::string income = r.fields[14];
    if (!income.empty() && income.back() == '.') income.pop_back();
    if (income == ">50K") {
      ex.label = 1;
    } else if (income == "<=50K") {
      ex.label = 0;
    } else {
      throw DataError(where + ": unknown income label '" + r.fields[14] + "'");
    }
    const auto race = race_index.find(r.fields[8]);
    if (race == race_index.end()) throw DataError(where + ": unknown race '" + r.fields[8] + "'");
    ex.subgroup = race->second;
    pop.examples.push_back(std::move(ex));
  }
  pop.validate();

  auto& m = out.manifest;
  m.name = "adult";
  m.expected_rows = fs::is_directory(p) ? kAdultRows : 0;
  m.raw_rows = rows.size();
  m.dropped_rows = dropped;
  m.feature_count = d;
  m.label_column = "income";
  m.subgroup_column = "race";
  m.subgroup_names = pop.subgroup_names;
  m.validate();
  return out;
}

// ---------------------------------------------------------------------------
// COMPAS

namespace {

constexpr std::size_t kCompasRows = 6172;
const std::vector<std::string> kCompasNumeric = {"age", "priors_count", "juv_fel_count",
                                                 "juv_misd_count", "juv_other_count"};
const std::vector<std::string> kCompasAgeCats = {"Less than 25", "25 - 45", "Greater than 45"};
const std::vector<std::string> kCompasGroups = {"AA", "CA", "HI", "NA", "OT"};

int compas_group(const std::string& race) {
  if (race == "African-American") return 0;
  if (race == "Caucasian") return 1;
  if (race == "Hispanic") return 2;
  if (race == "Native American") return 3;
  if (race == "Other" || race == "Asian") return 4;
  return -1;
}

}  // namespace

LoadedDataset load_compas(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) p /= "compas-scores-two-years.csv";
  auto in = open_or_throw(p);
  std::string line;
  if (!std::getline(in, line)) throw DataError(p.string() + ": empty file");
  const auto header = split_csv_line(line);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(trim(header[i]), i);  // first wins
  const std::vector<std::string> required = {
      "id",      "sex",        "age",          "age_cat",         "race",
      "juv_fel_count", "juv_misd_count", "juv_other_count", "priors_count",
      "days_b_screening_arrest", "c_charge_degree", "is_recid", "score_text", "two_year_recid"};
  for (const auto& r : required) {
    if (!col.count(r)) throw DataError(p.string() + ": header lacks column '" + r + "'");
  }

  LoadedDataset out;
  auto& pop = out.population;
  pop.num_classes = 2;
  pop.num_subgroups = static_cast<int>(kCompasGroups.size());
  pop.subgroup_names = kCompasGroups;
  pop.feature_names = kCompasNumeric;
  pop.feature_names.push_back("sex=Male");
  pop.feature_names.push_back("c_charge_degree=F");
  for (const auto& a : kCompasAgeCats) pop.feature_names.push_back("age_cat=" + a);
  for (const auto& g : kCompasGroups) pop.feature_names.push_back("race=" + g);
  const std::size_t d = pop.feature_names.size();

  std::size_t lineno = 1, raw = 0, dropped = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    ++raw;
    const auto f = split_csv_line(line);
    const std::string where = p.filename().string() + " line " + std::to_string(lineno);
    if (f.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(f.size()));
    }
    auto get = [&](const std::string& name) { return trim(f[col.at(name)]); };
    const auto days = get("days_b_screening_arrest");
    const auto degree = get("c_charge_degree");
    const auto recid = get("is_recid");
    const auto score = get("score_text");
    if (days.empty() || std::abs(parse_number(days, where)) > 30.0 || recid.empty() ||
        recid == "-1" || degree.empty() || degree == "O" || score.empty() || score == "N/A") {
      ++dropped;
      continue;
    }
    LabeledExample ex;
    ex.id = "compas:" + get("id");
    ex.features.assign(d, 0.0);
    for (std::size_t j = 0; j < kCompasNumeric.size(); ++j) {
      ex.features[j] = parse_number(get(kCompasNumeric[j]), where);
    }
    ex.features[5] = get("sex") == "Male" ? 1.0 : 0.0;
    ex.features[6] = degree == "F" ? 1.0 : 0.0;
    const auto age_cat = std::find(kCompasAgeCats.begin(), kCompasAgeCats.end(), get("age_cat"));
    if (age_cat == kCompasAgeCats.end()) throw DataError(where + ": unknown age_cat");
    ex.features[7 + (age_cat - kCompasAgeCats.begin())] = 1.0;
    ex.subgroup = compas_group(get("race"));
    if (ex.subgroup < 0) throw DataError(where + ": unknown race '" + get("race") + "'");
    ex.features[10 + ex.subgroup] = 1.0;
    const auto label = get("two_year_recid");
    if (label != "0" && label != "1") throw DataError(where + ": two_year_recid must be 0/1");
    ex.label = label == "1" ? 1 : 0;
    pop.examples.push_back(std::move(ex));
  }
  pop.validate();

  auto& m = out.manifest;
  m.name = "compas";
  m.expected_rows = kCompasRows;
  m.raw_rows = raw;
  m.dropped_rows = dropped;
  m.feature_count = d;
  m.label_column = "two_year_recid";
  m.subgroup_column = "race";
  m.subgroup_names = pop.subgroup_names;
  m.validate();
  return out;
}

LoadedDataset load_dataset(const std::string& name, const std::string& data_dir) {
  if (name == "adult") return load_adult(data_dir);
  if (name == "compas") return load_compas(data_dir);
  if (!fs::exists(name)) {
    throw DataError("unknown dataset '" + name + "' (expected adult, compas or a CSV path)");
  }
  LoadedDataset out;
  out.population = read_population_csv(name);
  out.manifest.name = fs::path(name).stem().string();
  out.manifest.raw_rows = out.population.size();
  out.manifest.feature_count = out.population.feature_count();
  out.manifest.label_column = "y";
  out.manifest.subgroup_column = "z";
  out.manifest.subgroup_names = out.population.subgroup_names;
  return out;
}

// ---------------------------------------------------------------------------
// Canonical CSVs

void write_population_csv(const std::string& path, const Population& pop) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "id,y,z";
  for (std::size_t j = 0; j < pop.feature_count(); ++j) out << ",f_" << j;
  out << '\n';
  for (const auto& ex : pop.examples) {
    out << csv_escape(ex.id) << ',' << ex.label << ',' << ex.subgroup;
    for (double v : ex.features) out << ',' << format_double(v);
    out << '\n';
  }
}

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;
};

CsvTable read_csv(const std::string& path) {
  auto in = open_or_throw(path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  t.header = split_csv_line(line);
  for (auto& h : t.header) h = trim(h);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != t.header.size()) {
      throw DataError(path + " line " + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " + std::to_string(f.size()));
    }
    t.rows.push_back(std::move(f));
    t.lines.push_back(lineno);
  }
  return t;
}

int parse_index(const std::string& s, const std::string& where) {
  int v = 0;
  const auto t = trim(s);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || v < 0) {
    throw DataError(where + ": expected a nonnegative integer, got '" + s + "'");
  }
  return v;
}

}  // namespace

Population read_population_csv(const std::string& path, int num_classes, int num_subgroups) {
  const auto t = read_csv(path);
  if (t.header.size() < 3 || t.header[0] != "id" || t.header[1] != "y" || t.header[2] != "z") {
    throw DataError(path + ": header must start with id,y,z");
  }
  Population pop;
  for (std::size_t j = 3; j < t.header.size(); ++j) pop.feature_names.push_back(t.header[j]);
  int max_y = 1, max_z = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::string where = path + " line " + std::to_string(t.lines[i]);
    LabeledExample ex;
    ex.id = r[0];
    ex.label = parse_index(r[1], where);
    ex.subgroup = parse_index(r[2], where);
    for (std::size_t j = 3; j < r.size(); ++j) ex.features.push_back(parse_number(trim(r[j]), where));
    max_y = std::max(max_y, ex.label);
    max_z = std::max(max_z, ex.subgroup);
    pop.examples.push_back(std::move(ex));
  }
  pop.num_classes = num_classes > 0 ? num_classes : max_y + 1;
  pop.num_subgroups = num_subgroups > 0 ? num_subgroups : max_z + 1;
  for (int z = 0; z < pop.num_subgroups; ++z) pop.subgroup_names.push_back("z" + std::to_string(z));
  pop.validate();
  return pop;
}

AuditInput read_audit_csv(const std::string& path) {
  const auto t = read_csv(path);
  if (t.header.size() < 3 || t.header[0] != "id" || t.header[1] != "y" || t.header[2] != "z") {
    throw DataError(path + ": header must start with id,y,z");
  }
  const bool has_m = t.header.size() > 3 && t.header[3] == "m";
  const std::size_t first_conf = has_m ? 4 : 3;
  AuditInput in;
  in.num_classes = static_cast<int>(t.header.size() - first_conf);
  for (std::size_t j = first_conf; j < t.header.size(); ++j) {
    if (t.header[j] != "conf_" + std::to_string(j - first_conf)) {
      throw DataError(path + ": expected column conf_" + std::to_string(j - first_conf) + ", got '" +
                      t.header[j] + "'");
    }
  }
  if (in.num_classes < 2) throw DataError(path + ": need at least two confidence columns");
  int max_z = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::string where = path + " line " + std::to_string(t.lines[i]);
    ScoredExample ex;
    ex.id = r[0];
    ex.label = parse_index(r[1], where);
    ex.subgroup = parse_index(r[2], where);
    if (ex.label >= in.num_classes) throw DataError(where + ": label exceeds confidence columns");
    if (has_m) {
      const int m = parse_index(r[3], where);
      if (m > 1) throw DataError(where + ": m must be 0 or 1");
      in.membership.push_back(m);
    }
    for (std::size_t j = first_conf; j < r.size(); ++j) {
      ex.confidence.push_back(parse_number(trim(r[j]), where));
    }
    max_z = std::max(max_z, ex.subgroup);
    in.records.push_back(std::move(ex));
  }
  in.num_subgroups = max_z + 1;
  return in;
}

void write_evaluation_set_csv(const std::string& path, const EvaluationSet& set) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "id,y,z,m,bin\n";
  for (const auto& r : set.records()) {
    out << csv_escape(r.id) << ',' << r.label << ',' << r.subgroup << ',' << r.member << ','
        << r.bin << '\n';
  }
}

}  // namespace mia
