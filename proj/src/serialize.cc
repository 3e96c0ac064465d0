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

#include "evidkit/serialize.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace evidkit {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

double round_significant(double value) {
  if (!std::isfinite(value)) return value;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  double rounded = std::strtod(buf, nullptr);
  return rounded == 0.0 ? 0.0 : rounded;  // no "-0.0"
}

Json canonical(const Json& value) {
  switch (value.type()) {
    case Json::value_t::number_float:
      return round_significant(value.get<double>());
    case Json::value_t::array: {
      Json out = Json::array();
      for (const auto& v : value) out.push_back(canonical(v));
      return out;
    }
    case Json::value_t::object: {
      Json out = Json::object();
      for (const auto& [k, v] : value.items()) out[k] = canonical(v);
      return out;
    }
    default:
      return value;
  }
}

std::string dump_json(const Json& value) {
  return canonical(value).dump(2) + "\n";
}

std::string dump_json_line(const Json& value) {
  return canonical(value).dump();
}

std::string csv_escape(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(text);
  }
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

CsvWriter& CsvWriter::field(std::string_view text) {
  if (!first_) out_ << ',';
  out_ << csv_escape(text);
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::field(double value) { return field(format_number(value)); }

CsvWriter& CsvWriter::field(long long value) {
  return field(std::to_string(value));
}

CsvWriter& CsvWriter::field(unsigned long long value) {
  return field(std::to_string(value));
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

void CsvWriter::header(std::initializer_list<std::string_view> names) {
  for (auto name : names) field(name);
  end_row();
}

}  // namespace evidkit
