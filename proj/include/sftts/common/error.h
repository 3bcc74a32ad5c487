// Copyright 2026 The sftts Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SFTTS_COMMON_ERROR_H_
#define SFTTS_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace sftts {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes (usage 1, data 2, numeric 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes do not conform to an operation's rule.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced, or a numeric precondition (std > 0, ...) violated.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed, missing or inconsistent data on disk or in memory.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or command line.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace sftts

#endif  // SFTTS_COMMON_ERROR_H_
