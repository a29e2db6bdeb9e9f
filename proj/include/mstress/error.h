// Copyright 2026 The mstress Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MSTRESS_ERROR_H_
#define MSTRESS_ERROR_H_

#include <stdexcept>
#include <string>

namespace mstress {

// Exception hierarchy. The CLI maps each class onto a process exit code:
// ConfigError -> 1, DataError -> 2, DegenerateError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flags, missing paths, unparseable configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// A statistical procedure has no defined answer on this input
// (single-class labels, zero variance, no propensity overlap).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace mstress

#endif  // MSTRESS_ERROR_H_
