// Copyright 2026 The evidkit Authors.
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

#ifndef EVIDKIT_ERROR_H_
#define EVIDKIT_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evidkit {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input is not well-formed (bad JSON, bad UTF-8, wrong value types).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_position)
      : Error(what), byte_position_(byte_position) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t byte_position() const { return byte_position_; }

 private:
  std::size_t byte_position_ = 0;
};

// Input is well-formed but violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Vector/matrix shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A character span could not be mapped onto tokens.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Synthetic generator configuration is inconsistent.
class SpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace evidkit

#endif  // EVIDKIT_ERROR_H_
