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

// Entry point of the mia-audit command line tool. Exit codes: 0 success,
// 1 domain error (bad data, failed identity), 2 usage error.

#ifndef MIA_CLI_HPP_
#define MIA_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace mia {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

// Default output directory comes from MIA_AUDIT_OUT, then "mia-out"; the
// default data directory from MIA_DATA_DIR, then "data".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mia

#endif  // MIA_CLI_HPP_
