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

// Generators for balanced frequency tables with known structure, and the
// inverse of estimate_tables. Used by identity checks and tests.

#ifndef MIA_TABLES_HPP_
#define MIA_TABLES_HPP_

#include <cstdint>

#include "mia/audit_core.hpp"
#include "mia/random.hpp"

namespace mia {

// One record per count, ids "t<m>_<y>_<z>_<b>_<i>". The table must be
// balanced per (y, z) cell.
EvaluationSet materialize(const FrequencyTable& table, std::uint64_t seed = 0);

// Random balanced table: every (y, z) cell gets the same number of members
// and non-members (0..max_cell), spread over bins with independent random
// weights per side. Some bins and cells stay empty.
FrequencyTable random_balanced_table(int num_classes, int num_subgroups, int bins, Rng& rng,
                                     int max_cell = 40);

// Table on which Pr[b | y, z, m] does not depend on z. With
// `equal_class_bias` the class mix Pr[y | z] is also the same in every
// subgroup.
FrequencyTable geo_table(int num_classes, int num_subgroups, int bins, bool equal_class_bias,
                         Rng& rng);

// Members and non-members share the same bin counts in every (y, z) cell, so
// every tau_z(y) is 0.
FrequencyTable no_overfit_table(int num_classes, int num_subgroups, int bins, Rng& rng,
                                int max_cell = 40);

}  // namespace mia

#endif  // MIA_TABLES_HPP_
