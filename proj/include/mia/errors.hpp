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

#ifndef MIA_ERRORS_HPP_
#define MIA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mia {

// Base of every domain error raised by the library. The CLI maps these to
// exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed or unexpected input file.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace mia

#endif  // MIA_ERRORS_HPP_
