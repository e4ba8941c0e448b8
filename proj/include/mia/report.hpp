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

// JSON and CSV renderers. Vulnerabilities, accuracies and disparities are
// rendered as percentage points rounded to two decimals; gaps and residuals
// keep full precision.

#ifndef MIA_REPORT_HPP_
#define MIA_REPORT_HPP_

#include <string>
#include <vector>

#include "json.hpp"
#include "mia/experiments.hpp"
#include "mia/overfit.hpp"

namespace mia {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "mia-audit";
inline constexpr const char* kToolVersion = "0.1.0";

// {tool, version, command, seed, config}.
Json metadata_json(const std::string& command, std::uint64_t seed, const Json& config);

Json adversary_report_json(const AdversaryReport& report, const std::vector<std::string>& names);
Json vulnerability_report_json(const VulnerabilityReport& report,
                               const std::vector<std::string>& names);
Json mean_std_json(const MeanStd& v);  // percentage points
Json aggregate_json(const StudyAggregate& a, const std::vector<std::string>& names);

// Per-(y, z, m) record counts of an evaluation set.
Json cell_counts_json(const EvaluationSet& set);

// Full gap tensors, tau, tau_z, rho_z and identity residuals.
Json profile_json(const FrequencyTable& table, const std::vector<IdentityResult>& identities);

Json identities_json(const std::vector<IdentityResult>& identities);

// One row per (shuffle, subgroup, adversary).
void write_study_csv(const std::string& path, const ShuffleStudy& study);
// shuffle,id,y,z,m,bin for every evaluation set of the study.
void write_records_csv(const std::string& path, const ShuffleStudy& study);
// Reads write_records_csv output back into one set per shuffle.
std::vector<EvaluationSet> read_records_csv(const std::string& path, int bins, int num_classes,
                                            int num_subgroups);
// shuffle,y,z,b,gamma_z (the shuffle column is omitted when `shuffle` < 0).
void append_profile_csv(std::ostream& out, const GapTensor& gaps, int shuffle);

// value,spec_hash,subgroup,adversary,mean,std,count
void write_sweep_csv(const std::string& path, const SweepResult& sweep,
                     const std::vector<std::string>& names);

// Writes `j` with a trailing newline; throws DataError on I/O failure.
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

}  // namespace mia

#endif  // MIA_REPORT_HPP_
