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

// Small builders shared by the unit tests.

#ifndef MIA_TEST_UTIL_HPP_
#define MIA_TEST_UTIL_HPP_

#include <string>
#include <tuple>
#include <vector>

#include "mia/audit_core.hpp"

namespace mia::testing {

// (y, z, m, b) tuples to an evaluation set with generated ids.
inline EvaluationSet make_set(const std::vector<std::tuple<int, int, int, int>>& rows, int bins,
                              int num_classes, int num_subgroups) {
  std::vector<AuditRecord> records;
  int i = 0;
  for (const auto& [y, z, m, b] : rows) {
    records.push_back({"r" + std::to_string(i++), y, z, m, b});
  }
  return EvaluationSet(std::move(records), bins, num_classes, num_subgroups, 0);
}

// The 8-record example: one class, members in bins {1,1,1,0}, non-members
// in {1,0,0,0}.
inline EvaluationSet eight_record_set() {
  return make_set({{0, 0, 1, 1}, {0, 0, 1, 1}, {0, 0, 1, 1}, {0, 0, 1, 0},
                   {0, 0, 0, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}},
                  2, 1, 1);
}

}  // namespace mia::testing

#endif  // MIA_TEST_UTIL_HPP_
