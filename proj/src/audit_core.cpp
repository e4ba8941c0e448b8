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

#include "mia/audit_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "mia/random.hpp"

namespace mia {

void Population::validate() const {
  if (num_classes < 1 || num_subgroups < 1) {
    throw ValidationError("population must declare at least one class and one subgroup");
  }
  if (!subgroup_names.empty() && static_cast<int>(subgroup_names.size()) != num_subgroups) {
    throw ValidationError("subgroup name count does not match num_subgroups");
  }
  std::unordered_set<std::string> ids;
  const std::size_t d = feature_count();
  for (const auto& ex : examples) {
    if (ex.label < 0 || ex.label >= num_classes) {
      throw ValidationError("example " + ex.id + ": label " + std::to_string(ex.label) +
                            " outside 0.." + std::to_string(num_classes - 1));
    }
    if (ex.subgroup < 0 || ex.subgroup >= num_subgroups) {
      throw ValidationError("example " + ex.id + ": subgroup " + std::to_string(ex.subgroup) +
                            " outside 0.." + std::to_string(num_subgroups - 1));
    }
    if (ex.features.size() != d) {
      throw ValidationError("example " + ex.id + ": feature length " +
                            std::to_string(ex.features.size()) + " != " + std::to_string(d));
    }
    if (!ids.insert(ex.id).second) throw ValidationError("duplicate example id " + ex.id);
  }
}

int discretize_confidence(std::span<const double> confidence, int true_label, int bins) {
  if (bins < 2) throw ValidationError("bin count must be at least 2");
  if (true_label < 0 || static_cast<std::size_t>(true_label) >= confidence.size()) {
    throw ValidationError("true label " + std::to_string(true_label) +
                          " outside confidence vector of length " +
                          std::to_string(confidence.size()));
  }
  double sum = 0.0;
  for (double c : confidence) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw ValidationError("confidence entry " + std::to_string(c) + " outside [0, 1]");
    }
    sum += c;
  }
  if (std::abs(sum - 1.0) > 1e-6) {  // CSV inputs often carry six digits
    std::ostringstream msg;
    msg.precision(10);
    msg << "confidence vector is not normalized: sum = " << sum;
    throw ValidationError(msg.str());
  }
  const double s = confidence[true_label];
  const int bin = static_cast<int>(std::floor(s * bins));
  return std::clamp(bin, 0, bins - 1);
}

EvaluationSet::EvaluationSet(std::vector<AuditRecord> records, int bins, int num_classes,
                             int num_subgroups, std::uint64_t seed)
    : records_(std::move(records)),
      bins_(bins),
      num_classes_(num_classes),
      num_subgroups_(num_subgroups),
      seed_(seed) {
  if (bins_ < 2) throw ValidationError("bin count must be at least 2");
  if (num_classes_ < 1 || num_subgroups_ < 1) {
    throw ValidationError("evaluation set needs at least one class and one subgroup");
  }
  std::vector<std::int64_t> balance(static_cast<std::size_t>(num_classes_) * num_subgroups_, 0);
  std::unordered_set<std::string> ids;
  ids.reserve(records_.size());
  for (const auto& r : records_) {
    if (r.member != 0 && r.member != 1) throw ValidationError("record " + r.id + ": m not in {0,1}");
    if (r.bin < 0 || r.bin >= bins_) throw ValidationError("record " + r.id + ": bin out of range");
    if (r.label < 0 || r.label >= num_classes_) {
      throw ValidationError("record " + r.id + ": label out of range");
    }
    if (r.subgroup < 0 || r.subgroup >= num_subgroups_) {
      throw ValidationError("record " + r.id + ": subgroup out of range");
    }
    if (!ids.insert(r.id).second) throw ValidationError("duplicate record id " + r.id);
    balance[static_cast<std::size_t>(r.label) * num_subgroups_ + r.subgroup] +=
        r.member == 1 ? 1 : -1;
  }
  for (int y = 0; y < num_classes_; ++y) {
    for (int z = 0; z < num_subgroups_; ++z) {
      if (balance[static_cast<std::size_t>(y) * num_subgroups_ + z] != 0) {
        throw ValidationError("cell (y=" + std::to_string(y) + ", z=" + std::to_string(z) +
                              ") has unequal member/non-member counts");
      }
    }
  }
}

EvaluationSetBuild build_evaluation_set(std::span<const ScoredExample> member_pool,
                                        std::span<const ScoredExample> nonmember_pool,
                                        int num_classes, int num_subgroups, int bins,
                                        std::uint64_t seed) {
  if (member_pool.empty() || nonmember_pool.empty()) {
    throw ValidationError("member and non-member pools must both be non-empty");
  }
  const std::size_t cells = static_cast<std::size_t>(num_classes) * num_subgroups;
  std::vector<std::vector<std::size_t>> by_cell[2];
  by_cell[0].resize(cells);
  by_cell[1].resize(cells);
  auto bucket = [&](std::span<const ScoredExample> pool, int m) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto& ex = pool[i];
      if (ex.label < 0 || ex.label >= num_classes || ex.subgroup < 0 ||
          ex.subgroup >= num_subgroups) {
        throw ValidationError("pool example " + ex.id + " has label/subgroup out of range");
      }
      by_cell[m][static_cast<std::size_t>(ex.label) * num_subgroups + ex.subgroup].push_back(i);
    }
  };
  bucket(member_pool, 1);
  bucket(nonmember_pool, 0);

  std::vector<AuditRecord> records;
  std::vector<DroppedCell> dropped;
  for (int y = 0; y < num_classes; ++y) {
    for (int z = 0; z < num_subgroups; ++z) {
      const std::size_t c = static_cast<std::size_t>(y) * num_subgroups + z;
      auto& in = by_cell[1][c];
      auto& out = by_cell[0][c];
      if (in.empty() != out.empty()) {
        dropped.push_back({y, z, in.size(), out.size()});
      }
      const std::size_t take = std::min(in.size(), out.size());
      if (take == 0) continue;
      for (int m = 0; m < 2; ++m) {
        auto& idx = by_cell[m][c];
        auto rng = make_rng(seed, {static_cast<std::uint64_t>(y), static_cast<std::uint64_t>(z),
                                   static_cast<std::uint64_t>(m)});
        // Partial Fisher-Yates: the first `take` entries are a uniform sample.
        for (std::size_t i = 0; i < take; ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
          std::swap(idx[i], idx[pick(rng)]);
        }
        std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
        const auto pool = m == 1 ? member_pool : nonmember_pool;
        for (std::size_t i = 0; i < take; ++i) {
          const auto& ex = pool[idx[i]];
          records.push_back({ex.id, ex.label, ex.subgroup, m,
                             discretize_confidence(ex.confidence, ex.label, bins)});
        }
      }
    }
  }
  if (records.empty()) {
    throw ValidationError("no (label, subgroup) cell is populated on both sides");
  }
  return {EvaluationSet(std::move(records), bins, num_classes, num_subgroups, seed),
          std::move(dropped)};
}

FrequencyTable::FrequencyTable(int num_classes, int num_subgroups, int bins)
    : classes_(num_classes), subgroups_(num_subgroups), bins_(bins) {
  if (classes_ < 1 || subgroups_ < 1 || bins_ < 1) {
    throw ValidationError("frequency table dimensions must be positive");
  }
  fine_.assign(static_cast<std::size_t>(2) * classes_ * subgroups_ * bins_, 0);
  coarse_.assign(static_cast<std::size_t>(2) * classes_ * bins_, 0);
  class_totals_.assign(static_cast<std::size_t>(2) * classes_, 0);
  cell_totals_.assign(static_cast<std::size_t>(2) * classes_ * subgroups_, 0);
}

FrequencyTable FrequencyTable::from_counts(int num_classes, int num_subgroups, int bins,
                                           std::vector<std::int64_t> counts) {
  FrequencyTable t(num_classes, num_subgroups, bins);
  if (counts.size() != t.fine_.size()) {
    throw ValidationError("count tensor has " + std::to_string(counts.size()) +
                          " entries, expected " + std::to_string(t.fine_.size()));
  }
  for (int m = 0; m < 2; ++m)
    for (int y = 0; y < num_classes; ++y)
      for (int z = 0; z < num_subgroups; ++z)
        for (int b = 0; b < bins; ++b) t.add_count(m, y, z, b, counts[t.fine_index(m, y, z, b)]);
  return t;
}

std::size_t FrequencyTable::fine_index(int m, int y, int z, int b) const {
  return ((static_cast<std::size_t>(m) * classes_ + y) * subgroups_ + z) * bins_ + b;
}

std::size_t FrequencyTable::coarse_index(int m, int y, int b) const {
  return (static_cast<std::size_t>(m) * classes_ + y) * bins_ + b;
}

std::int64_t FrequencyTable::count(int m, int y, int b) const {
  return coarse_[coarse_index(m, y, b)];
}

std::int64_t FrequencyTable::count(int m, int y, int z, int b) const {
  return fine_[fine_index(m, y, z, b)];
}

std::int64_t FrequencyTable::class_total(int m, int y) const {
  return class_totals_[static_cast<std::size_t>(m) * classes_ + y];
}

std::int64_t FrequencyTable::cell_total(int m, int y, int z) const {
  return cell_totals_[(static_cast<std::size_t>(m) * classes_ + y) * subgroups_ + z];
}

std::int64_t FrequencyTable::subgroup_total(int z) const {
  std::int64_t n = 0;
  for (int m = 0; m < 2; ++m)
    for (int y = 0; y < classes_; ++y) n += cell_total(m, y, z);
  return n;
}

std::optional<double> FrequencyTable::conditional(int b, int y, int m) const {
  const auto n = class_total(m, y);
  if (n == 0) return std::nullopt;
  return static_cast<double>(count(m, y, b)) / static_cast<double>(n);
}

std::optional<double> FrequencyTable::conditional(int b, int y, int z, int m) const {
  const auto n = cell_total(m, y, z);
  if (n == 0) return std::nullopt;
  return static_cast<double>(count(m, y, z, b)) / static_cast<double>(n);
}

double FrequencyTable::pr_y(int y) const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(class_total(0, y) + class_total(1, y)) / static_cast<double>(total_);
}

double FrequencyTable::pr_z(int z) const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(subgroup_total(z)) / static_cast<double>(total_);
}

double FrequencyTable::pr_yz(int y, int z) const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(cell_total(0, y, z) + cell_total(1, y, z)) /
         static_cast<double>(total_);
}

void FrequencyTable::add_count(int m, int y, int z, int b, std::int64_t delta) {
  if (m < 0 || m > 1 || y < 0 || y >= classes_ || z < 0 || z >= subgroups_ || b < 0 ||
      b >= bins_) {
    throw ValidationError("frequency table index out of range");
  }
  auto& cell = fine_[fine_index(m, y, z, b)];
  if (cell + delta < 0) throw ValidationError("frequency table count would become negative");
  cell += delta;
  coarse_[coarse_index(m, y, b)] += delta;
  class_totals_[static_cast<std::size_t>(m) * classes_ + y] += delta;
  cell_totals_[(static_cast<std::size_t>(m) * classes_ + y) * subgroups_ + z] += delta;
  total_ += delta;
}

FrequencyTable estimate_tables(const EvaluationSet& set) {
  FrequencyTable table(set.num_classes(), set.num_subgroups(), set.bins());
  for (const auto& r : set.records()) table.add_count(r.member, r.label, r.subgroup, r.bin, 1);
  return table;
}

}  // namespace mia
