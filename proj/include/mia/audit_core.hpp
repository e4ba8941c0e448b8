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

// Core audit types: populations, evaluation sets built from member and
// non-member pools, and the frequency tables the adversaries are fit on.

#ifndef MIA_AUDIT_CORE_HPP_
#define MIA_AUDIT_CORE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mia/errors.hpp"

namespace mia {

// One individual of a population. Subgroup and label are dense indices.
struct LabeledExample {
  std::string id;
  std::vector<double> features;
  int label = 0;
  int subgroup = 0;
};

struct Population {
  std::vector<LabeledExample> examples;
  int num_classes = 0;
  int num_subgroups = 0;
  std::vector<std::string> subgroup_names;
  std::vector<std::string> feature_names;

  std::size_t size() const { return examples.size(); }
  std::size_t feature_count() const {
    return examples.empty() ? feature_names.size() : examples.front().features.size();
  }
  // Throws ValidationError when a label/subgroup is out of range, feature
  // lengths differ, or an id repeats.
  void validate() const;
};

// Model output for one example, as handed to the auditor.
struct ScoredExample {
  std::string id;
  int label = 0;
  int subgroup = 0;
  std::vector<double> confidence;
};

struct AuditRecord {
  std::string id;
  int label = 0;
  int subgroup = 0;
  int member = 0;  // 1 = in the training set
  int bin = 0;
};

// Bins the confidence the model assigns to the true class into `bins`
// uniform bins on [0, 1]; 1.0 falls into the last bin.
int discretize_confidence(std::span<const double> confidence, int true_label, int bins);

// Balanced, (label, subgroup)-stratified audit sample. The constructor
// enforces: equal member/non-member counts in every (y, z) cell, bins in
// range, unique ids.
class EvaluationSet {
 public:
  EvaluationSet(std::vector<AuditRecord> records, int bins, int num_classes,
                int num_subgroups, std::uint64_t seed);

  const std::vector<AuditRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  int bins() const { return bins_; }
  int num_classes() const { return num_classes_; }
  int num_subgroups() const { return num_subgroups_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<AuditRecord> records_;
  int bins_;
  int num_classes_;
  int num_subgroups_;
  std::uint64_t seed_;
};

struct DroppedCell {
  int label = 0;
  int subgroup = 0;
  std::size_t member_count = 0;
  std::size_t nonmember_count = 0;
};

struct EvaluationSetBuild {
  EvaluationSet set;
  std::vector<DroppedCell> dropped_cells;  // cells empty on one side
};

// Per (y, z) cell, draws min(#members, #non-members) examples from each pool
// without replacement and discretizes their confidences.
EvaluationSetBuild build_evaluation_set(std::span<const ScoredExample> member_pool,
                                        std::span<const ScoredExample> nonmember_pool,
                                        int num_classes, int num_subgroups, int bins,
                                        std::uint64_t seed);

// Joint counts n[m][y][z][b] plus derived conditionals and marginals.
class FrequencyTable {
 public:
  FrequencyTable(int num_classes, int num_subgroups, int bins);

  // Builds a table straight from fine counts laid out as [m][y][z][b].
  static FrequencyTable from_counts(int num_classes, int num_subgroups, int bins,
                                    std::vector<std::int64_t> counts);

  int num_classes() const { return classes_; }
  int num_subgroups() const { return subgroups_; }
  int bins() const { return bins_; }

  std::int64_t count(int m, int y, int b) const;
  std::int64_t count(int m, int y, int z, int b) const;
  std::int64_t class_total(int m, int y) const;
  std::int64_t cell_total(int m, int y, int z) const;
  std::int64_t subgroup_total(int z) const;
  std::int64_t total() const { return total_; }
  bool usable() const { return total_ > 0; }

  // Pr[b | y, m]; empty when the (y, m) cell has no records.
  std::optional<double> conditional(int b, int y, int m) const;
  // Pr[b | y, z, m]; empty when the (y, z, m) cell has no records.
  std::optional<double> conditional(int b, int y, int z, int m) const;

  double pr_y(int y) const;
  double pr_z(int z) const;
  double pr_yz(int y, int z) const;

  // Adjusts one fine cell and the coarse totals. Used to inject faults into
  // identity checks; counts may not go negative.
  void add_count(int m, int y, int z, int b, std::int64_t delta);

  bool operator==(const FrequencyTable&) const = default;

 private:
  std::size_t fine_index(int m, int y, int z, int b) const;
  std::size_t coarse_index(int m, int y, int b) const;

  int classes_;
  int subgroups_;
  int bins_;
  std::vector<std::int64_t> fine_;    // [m][y][z][b]
  std::vector<std::int64_t> coarse_;  // [m][y][b]
  std::vector<std::int64_t> class_totals_;  // [m][y]
  std::vector<std::int64_t> cell_totals_;   // [m][y][z]
  std::int64_t total_ = 0;
};

FrequencyTable estimate_tables(const EvaluationSet& set);

}  // namespace mia

#endif  // MIA_AUDIT_CORE_HPP_
