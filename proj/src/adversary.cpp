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

#include "mia/adversary.hpp"

#include <algorithm>
#include <cmath>

namespace mia {

std::string_view to_string(AdversaryKind kind) {
  return kind == AdversaryKind::kRegular ? "regular" : "discriminating";
}

DecisionRule::DecisionRule(AdversaryKind kind, int num_classes, int num_subgroups, int bins,
                           std::vector<std::uint8_t> decisions)
    : kind_(kind),
      classes_(num_classes),
      subgroups_(num_subgroups),
      bins_(bins),
      decisions_(std::move(decisions)) {
  const std::size_t expected = kind_ == AdversaryKind::kRegular
                                   ? static_cast<std::size_t>(classes_) * bins_
                                   : static_cast<std::size_t>(classes_) * subgroups_ * bins_;
  if (decisions_.size() != expected) throw ValidationError("decision table has wrong size");
  for (auto d : decisions_) {
    if (d > 1) throw ValidationError("decisions must be 0 or 1");
  }
}

int DecisionRule::decide(int label, int bin, int subgroup) const {
  if (label < 0 || label >= classes_ || bin < 0 || bin >= bins_) return 0;
  if (kind_ == AdversaryKind::kRegular) {
    return decisions_[static_cast<std::size_t>(label) * bins_ + bin];
  }
  if (subgroup < 0 || subgroup >= subgroups_) return 0;
  return decisions_[(static_cast<std::size_t>(label) * subgroups_ + subgroup) * bins_ + bin];
}

namespace {

// 1 iff Pr[b | in] > Pr[b | out], both defined. Cross-multiplied on integer
// counts so the comparison is exact.
std::uint8_t bayes_decision(std::int64_t in_count, std::int64_t in_total, std::int64_t out_count,
                            std::int64_t out_total) {
  if (in_total == 0 || out_total == 0) return 0;
  const __int128 lhs = static_cast<__int128>(in_count) * out_total;
  const __int128 rhs = static_cast<__int128>(out_count) * in_total;
  return lhs > rhs ? 1 : 0;
}

}  // namespace

DecisionRule fit_regular_adversary(const FrequencyTable& table) {
  const int p = table.num_classes();
  const int bins = table.bins();
  std::vector<std::uint8_t> decisions(static_cast<std::size_t>(p) * bins, 0);
  for (int y = 0; y < p; ++y) {
    for (int b = 0; b < bins; ++b) {
      decisions[static_cast<std::size_t>(y) * bins + b] =
          bayes_decision(table.count(1, y, b), table.class_total(1, y), table.count(0, y, b),
                         table.class_total(0, y));
    }
  }
  return DecisionRule(AdversaryKind::kRegular, p, table.num_subgroups(), bins,
                      std::move(decisions));
}

DecisionRule fit_discriminating_adversary(const FrequencyTable& table) {
  const int p = table.num_classes();
  const int k = table.num_subgroups();
  const int bins = table.bins();
  std::vector<std::uint8_t> decisions(static_cast<std::size_t>(p) * k * bins, 0);
  for (int y = 0; y < p; ++y) {
    for (int z = 0; z < k; ++z) {
      for (int b = 0; b < bins; ++b) {
        decisions[(static_cast<std::size_t>(y) * k + z) * bins + b] =
            bayes_decision(table.count(1, y, z, b), table.cell_total(1, y, z),
                           table.count(0, y, z, b), table.cell_total(0, y, z));
      }
    }
  }
  return DecisionRule(AdversaryKind::kDiscriminating, p, k, bins, std::move(decisions));
}

void fill_disparity(AdversaryReport& report) {
  const std::size_t k = report.by_subgroup.size();
  report.disparity.assign(k, std::vector<std::optional<double>>(k));
  report.max_disparity = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (!report.by_subgroup[a] || !report.by_subgroup[b]) continue;
      const double d = a == b ? 0.0 : std::abs(*report.by_subgroup[a] - *report.by_subgroup[b]);
      report.disparity[a][b] = d;
      if (a != b) report.max_disparity = std::max(report.max_disparity, d);
    }
  }
}

AdversaryReport evaluate_vulnerability(const DecisionRule& rule, const EvaluationSet& set) {
  if (rule.num_classes() != set.num_classes() || rule.bins() != set.bins() ||
      rule.num_subgroups() != set.num_subgroups()) {
    throw ValidationError("decision rule dimensions do not match the evaluation set");
  }
  AdversaryReport report;
  report.kind = rule.kind();
  const int k = set.num_subgroups();
  std::vector<std::int64_t> hits(k, 0), totals(k, 0);
  std::int64_t all_hits = 0;
  report.correct.reserve(set.size());
  for (const auto& r : set.records()) {
    const std::uint8_t ok = rule.decide(r.label, r.bin, r.subgroup) == r.member ? 1 : 0;
    report.correct.push_back(ok);
    all_hits += ok;
    hits[r.subgroup] += ok;
    ++totals[r.subgroup];
  }
  report.vulnerability =
      set.size() == 0 ? 0.0 : static_cast<double>(all_hits) / static_cast<double>(set.size());
  report.by_subgroup.resize(k);
  for (int z = 0; z < k; ++z) {
    if (totals[z] > 0) {
      report.by_subgroup[z] = static_cast<double>(hits[z]) / static_cast<double>(totals[z]);
    }
  }
  fill_disparity(report);
  return report;
}

AdversaryComparison compare_adversaries(const FrequencyTable& table, const EvaluationSet& set) {
  if (!(estimate_tables(set) == table)) {
    throw ValidationError("frequency table was not estimated from this evaluation set");
  }
  AdversaryComparison out;
  out.regular = evaluate_vulnerability(fit_regular_adversary(table), set);
  out.discriminating = evaluate_vulnerability(fit_discriminating_adversary(table), set);
  out.advantage = out.discriminating.vulnerability - out.regular.vulnerability;
  return out;
}

}  // namespace mia
