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

#include "mia/tables.hpp"

#include <numeric>

namespace mia {

EvaluationSet materialize(const FrequencyTable& table, std::uint64_t seed) {
  std::vector<AuditRecord> records;
  records.reserve(static_cast<std::size_t>(table.total()));
  for (int m = 0; m < 2; ++m)
    for (int y = 0; y < table.num_classes(); ++y)
      for (int z = 0; z < table.num_subgroups(); ++z)
        for (int b = 0; b < table.bins(); ++b) {
          const auto n = table.count(m, y, z, b);
          for (std::int64_t i = 0; i < n; ++i) {
            records.push_back({"t" + std::to_string(m) + "_" + std::to_string(y) + "_" +
                                   std::to_string(z) + "_" + std::to_string(b) + "_" +
                                   std::to_string(i),
                               y, z, m, b});
          }
        }
  return EvaluationSet(std::move(records), table.bins(), table.num_classes(),
                       table.num_subgroups(), seed);
}

namespace {

std::size_t index(int m, int y, int z, int b, int p, int k, int bins) {
  return ((static_cast<std::size_t>(m) * p + y) * k + z) * bins + b;
}

// Spreads n draws over bins with random, sometimes-zero weights.
std::vector<std::int64_t> scatter(std::int64_t n, int bins, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(bins);
  for (auto& x : w) x = u(rng) < 0.3 ? 0.0 : u(rng) * u(rng);
  if (std::accumulate(w.begin(), w.end(), 0.0) == 0.0) w[0] = 1.0;
  std::discrete_distribution<int> pick(w.begin(), w.end());
  std::vector<std::int64_t> counts(bins, 0);
  for (std::int64_t i = 0; i < n; ++i) ++counts[pick(rng)];
  return counts;
}

}  // namespace

FrequencyTable random_balanced_table(int p, int k, int bins, Rng& rng, int max_cell) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(2) * p * k * bins, 0);
  std::uniform_int_distribution<int> size(0, max_cell);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int y = 0; y < p; ++y) {
    for (int z = 0; z < k; ++z) {
      const std::int64_t n = u(rng) < 0.1 ? 0 : size(rng);
      for (int m = 0; m < 2; ++m) {
        const auto c = scatter(n, bins, rng);
        for (int b = 0; b < bins; ++b) counts[index(m, y, z, b, p, k, bins)] = c[b];
      }
    }
  }
  return FrequencyTable::from_counts(p, k, bins, std::move(counts));
}

FrequencyTable geo_table(int p, int k, int bins, bool equal_class_bias, Rng& rng) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(2) * p * k * bins, 0);
  std::uniform_int_distribution<int> small(0, 5), scale(1, 4);
  std::vector<std::int64_t> u(p), w(k);
  for (auto& x : u) x = scale(rng);
  for (auto& x : w) x = scale(rng);
  for (int y = 0; y < p; ++y) {
    // Member pattern first; the non-member pattern has the same total.
    std::vector<std::int64_t> in(bins);
    std::int64_t total = 0;
    for (auto& c : in) total += (c = small(rng));
    if (total == 0) total = in[0] = 1;
    const auto out = scatter(total, bins, rng);
    for (int z = 0; z < k; ++z) {
      const std::int64_t a = equal_class_bias ? u[y] * w[z] : scale(rng);
      for (int b = 0; b < bins; ++b) {
        counts[index(1, y, z, b, p, k, bins)] = a * in[b];
        counts[index(0, y, z, b, p, k, bins)] = a * out[b];
      }
    }
  }
  return FrequencyTable::from_counts(p, k, bins, std::move(counts));
}

FrequencyTable no_overfit_table(int p, int k, int bins, Rng& rng, int max_cell) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(2) * p * k * bins, 0);
  std::uniform_int_distribution<int> size(0, max_cell);
  for (int y = 0; y < p; ++y) {
    for (int z = 0; z < k; ++z) {
      const auto c = scatter(size(rng), bins, rng);
      for (int b = 0; b < bins; ++b) {
        counts[index(1, y, z, b, p, k, bins)] = c[b];
        counts[index(0, y, z, b, p, k, bins)] = c[b];
      }
    }
  }
  return FrequencyTable::from_counts(p, k, bins, std::move(counts));
}

}  // namespace mia
