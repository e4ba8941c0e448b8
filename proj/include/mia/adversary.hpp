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

// Bayes-optimal membership adversaries estimated from a FrequencyTable.
//
// The regular adversary sees (y, bin); the discriminating adversary also sees
// the subgroup z. Under a uniform membership prior and M independent of
// (Y, Z), the maximum-a-posteriori decision reduces to comparing the member
// and non-member output distributions:
//
//   decide(y, b)    = 1  iff  Pr[b | y, m=1]    > Pr[b | y, m=0]
//   decide(y, b, z) = 1  iff  Pr[b | y, z, m=1] > Pr[b | y, z, m=0]
//
// Ties and cells where either conditional is undefined predict m = 0.

#ifndef MIA_ADVERSARY_HPP_
#define MIA_ADVERSARY_HPP_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "mia/audit_core.hpp"

namespace mia {

enum class AdversaryKind { kRegular, kDiscriminating };

std::string_view to_string(AdversaryKind kind);

class DecisionRule {
 public:
  DecisionRule(AdversaryKind kind, int num_classes, int num_subgroups, int bins,
               std::vector<std::uint8_t> decisions);

  AdversaryKind kind() const { return kind_; }
  int num_classes() const { return classes_; }
  int num_subgroups() const { return subgroups_; }
  int bins() const { return bins_; }

  // Predicted membership. The regular rule ignores `subgroup`.
  int decide(int label, int bin, int subgroup) const;

  const std::vector<std::uint8_t>& decisions() const { return decisions_; }

 private:
  AdversaryKind kind_;
  int classes_;
  int subgroups_;
  int bins_;
  std::vector<std::uint8_t> decisions_;  // [y][b] or [y][z][b]
};

DecisionRule fit_regular_adversary(const FrequencyTable& table);
DecisionRule fit_discriminating_adversary(const FrequencyTable& table);

// Accuracy of one adversary on an evaluation set. Vulnerabilities are raw
// probabilities; renderers convert to percentage points.
struct AdversaryReport {
  AdversaryKind kind = AdversaryKind::kRegular;
  double vulnerability = 0.0;
  // Empty entry when the subgroup has no records.
  std::vector<std::optional<double>> by_subgroup;
  // k x k, symmetric, zero diagonal; empty entry when either side is undefined.
  std::vector<std::vector<std::optional<double>>> disparity;
  // Largest defined off-diagonal disparity; 0 when fewer than two subgroups
  // are defined.
  double max_disparity = 0.0;
  // Per-record correctness, aligned with EvaluationSet::records().
  std::vector<std::uint8_t> correct;
};

struct VulnerabilityReport {
  AdversaryReport regular;
  AdversaryReport discriminating;
};

AdversaryReport evaluate_vulnerability(const DecisionRule& rule, const EvaluationSet& set);

// Fills per-subgroup disparity and max-disparity from `by_subgroup`.
void fill_disparity(AdversaryReport& report);

struct AdversaryComparison {
  AdversaryReport regular;
  AdversaryReport discriminating;
  double advantage = 0.0;  // V^D - V^R, never below -1e-12 in-sample
};

// Fits both adversaries on `table` and scores them on `set`. `table` must be
// the table estimated from `set`.
AdversaryComparison compare_adversaries(const FrequencyTable& table, const EvaluationSet& set);

}  // namespace mia

#endif  // MIA_ADVERSARY_HPP_
