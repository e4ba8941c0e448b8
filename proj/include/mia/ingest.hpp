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

// Loaders for the raw ADULT (census) and COMPAS (ProPublica) files, plus the
// toolkit's own CSV formats.
//
// ADULT: 8 categoricals one-hot encoded ('?' is its own category) plus
// age, education-num, capital-gain, capital-loss, hours-per-week; fnlwgt and
// the textual education column are dropped. Subgroups are race:
// WH, BL, AI, AE, OT. Label 1 = income >50K.
//
// COMPAS: the standard two-year filter (|days_b_screening_arrest| <= 30,
// is_recid != -1, charge degree not 'O', score_text present). Features are
// age, priors and juvenile counts, sex, felony flag, age_cat and race
// one-hots; the COMPAS scores themselves are never used. Subgroups are
// race: AA, CA, HI, NA, OT (Asian folds into OT). Label = two_year_recid.

#ifndef MIA_INGEST_HPP_
#define MIA_INGEST_HPP_

#include <string>
#include <vector>

#include "mia/audit_core.hpp"

namespace mia {

struct DatasetManifest {
  std::string name;
  std::size_t expected_rows = 0;  // published size, 0 if unknown
  std::size_t raw_rows = 0;       // data rows read
  std::size_t dropped_rows = 0;   // removed by filters or missing values
  std::size_t feature_count = 0;
  std::string label_column;
  std::string subgroup_column;
  std::vector<std::string> subgroup_names;  // index -> name

  // Throws ValidationError if names repeat or are empty.
  void validate() const;
};

struct LoadedDataset {
  Population population;
  DatasetManifest manifest;
};

// `path` is either a directory holding adult.data and adult.test, or a
// single census-format file.
LoadedDataset load_adult(const std::string& path);

// `path` is compas-scores-two-years.csv or a directory containing it.
LoadedDataset load_compas(const std::string& path);

// Resolves "adult" / "compas" under `data_dir`, or treats `name` as a path
// to a canonical CSV.
LoadedDataset load_dataset(const std::string& name, const std::string& data_dir);

// Splits one CSV line (RFC 4180 quoting). Exposed for tests.
std::vector<std::string> split_csv_line(const std::string& line);

// Canonical population CSV: `id,y,z,f_0..f_{d-1}`. Values are written with
// round-trip precision.
void write_population_csv(const std::string& path, const Population& pop);
// p and k are inferred as max+1 (p at least 2) unless given.
Population read_population_csv(const std::string& path, int num_classes = 0,
                               int num_subgroups = 0);

// Audit input: `id,y,z,m,conf_0..conf_{p-1}`; the m column is optional.
struct AuditInput {
  std::vector<ScoredExample> records;
  std::vector<int> membership;  // empty when the file has no m column
  int num_classes = 0;
  int num_subgroups = 0;
};
AuditInput read_audit_csv(const std::string& path);

void write_evaluation_set_csv(const std::string& path, const EvaluationSet& set);

}  // namespace mia

#endif  // MIA_INGEST_HPP_
