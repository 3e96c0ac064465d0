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

// Canonical output formatting. Every float that leaves the toolkit is
// written with 6 significant digits and JSON objects use sorted keys, so
// identical inputs give byte-identical files.

#ifndef EVIDKIT_SERIALIZE_H_
#define EVIDKIT_SERIALIZE_H_

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace evidkit {

using Json = nlohmann::json;

// "%.6g"; NaN and infinities become "nan", "inf", "-inf".
std::string format_number(double value);

// Value whose shortest decimal form has at most 6 significant digits.
double round_significant(double value);

// Copy of `value` with every float rounded to 6 significant digits.
Json canonical(const Json& value);

// Pretty-printed canonical JSON with a trailing newline.
std::string dump_json(const Json& value);

// Single-line canonical JSON (for JSON Lines), no trailing newline.
std::string dump_json_line(const Json& value);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& field(std::string_view text);
  CsvWriter& field(double value);
  CsvWriter& field(long long value);
  CsvWriter& field(unsigned long long value);
  CsvWriter& field(int value) { return field(static_cast<long long>(value)); }
  CsvWriter& field(std::size_t value) {
    return field(static_cast<unsigned long long>(value));
  }
  CsvWriter& field(const char* text) { return field(std::string_view(text)); }
  CsvWriter& field(const std::string& text) {
    return field(std::string_view(text));
  }
  void end_row();

  void header(std::initializer_list<std::string_view> names);

 private:
  std::ostream& out_;
  bool first_ = true;
};

// Quotes a CSV field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view text);

}  // namespace evidkit

#endif  // EVIDKIT_SERIALIZE_H_
