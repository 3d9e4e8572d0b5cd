//
// Copyright 2026 The hncl Authors
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
//

#ifndef HNCL_ERROR_H_
#define HNCL_ERROR_H_

#include <stdexcept>
#include <string>

namespace hncl {

// Failure categories. The CLI maps them onto exit codes 1, 2 and 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data, I/O failures.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss, degenerate embeddings.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hncl

#endif  // HNCL_ERROR_H_
