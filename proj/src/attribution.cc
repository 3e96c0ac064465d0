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

#include "evidkit/attribution.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_set>

#include "evidkit/error.h"
#include "evidkit/serialize.h"
#include "evidkit/textproc.h"

namespace evidkit::attribution {

namespace {

std::string read_id(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing key '") + key + "'");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw ParseError(std::string("'") + key + "' must be a string or integer");
}

std::vector<double> read_vector(const Json& j, const char* key) {
  if (!j.is_array()) {
    throw ParseError(std::string("'") + key + "' must be an array of numbers");
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) {
      throw ParseError(std::string("'") + key + "' must be an array of numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

bool has_value(const Json& j, const char* key) {
  auto it = j.find(key);
  return it != j.end() && !it->is_null();
}

bool is_word_piece(std::string_view stripped) {
  if (stripped.empty()) return false;
  const textproc::Utf8Text utf(stripped);
  for (std::size_t i = 0; i < utf.size(); ++i) {
    if (textproc::classify(utf.at(i)) != textproc::CharClass::kAlnum) {
      return false;
    }
  }
  return true;
}

bool is_punct_only(std::string_view stripped) {
  const textproc::Utf8Text utf(stripped);
  for (std::size_t i = 0; i < utf.size(); ++i) {
    if (textproc::classify(utf.at(i)) == textproc::CharClass::kAlnum) {
      return false;
    }
  }
  return true;
}

bool starts_new_word(std::string_view surface) {
  return surface.starts_with("\xC4\xA0") ||      // "Ġ"
         surface.starts_with("\xE2\x96\x81");    // "▁"
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw ValidationError("threshold grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i - 1] < grid[i])) {
      throw ValidationError("threshold grid must be strictly increasing");
    }
  }
}

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

Counts count_at(const std::vector<CalibrationCase>& cases, double tau) {
  Counts c;
  std::vector<char> is_gold;
  for (const auto& cs : cases) {
    is_gold.assign(cs.scores.size(), 0);
    for (auto g : cs.gold) is_gold[g] = 1;
    std::size_t gold_total = 0;
    for (char g : is_gold) gold_total += static_cast<std::size_t>(g);
    std::size_t tp = 0;
    std::size_t selected = 0;
    for (std::size_t i = 0; i < cs.scores.size(); ++i) {
      if (cs.scores[i] > tau) {
        ++selected;
        tp += static_cast<std::size_t>(is_gold[i]);
      }
    }
    c.tp += tp;
    c.fp += selected - tp;
    c.fn += gold_total - tp;
  }
  return c;
}

double f1_of(const Counts& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0
                    : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

}  // namespace

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw DimensionError("ragged gradient matrix: row " + std::to_string(i) +
                           " has " + std::to_string(rows[i].size()) +
                           " columns, expected " + std::to_string(cols));
    }
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < rows_; ++i) {
    auto r = row(i);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

void validate(const AttributionRecord& r) {
  const std::string where = "record (" + r.note_id + ", " + r.code + ")";
  const std::size_t n = r.tokens.size();
  if (r.spans.size() != n) {
    throw DimensionError(where + ": " + std::to_string(r.spans.size()) +
                         " spans for " + std::to_string(n) + " tokens");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (r.spans[i].begin >= r.spans[i].end) {
      throw ValidationError(where + ": empty char span for token " +
                            std::to_string(i));
    }
  }
  if (!r.attention.empty() && r.attention.size() != n) {
    throw DimensionError(where + ": attention length " +
                         std::to_string(r.attention.size()) + " != " +
                         std::to_string(n) + " tokens");
  }
  if (r.input_grad && r.input_grad->rows() != n) {
    throw DimensionError(where + ": input_grad has " +
                         std::to_string(r.input_grad->rows()) + " rows for " +
                         std::to_string(n) + " tokens");
  }
  if (r.scores && r.scores->size() != n) {
    throw DimensionError(where + ": scores length " +
                         std::to_string(r.scores->size()) + " != " +
                         std::to_string(n) + " tokens");
  }
  if (!r.scores && (!r.input_grad || r.attention.size() != n)) {
    throw ValidationError(where +
                          ": needs either scores or attention + input_grad");
  }
  if (!(r.probability >= 0.0 && r.probability <= 1.0)) {
    throw ValidationError(where + ": probability outside [0, 1]");
  }
}

std::vector<double> attingrad(std::span<const double> attention,
                              const Matrix& input_grad) {
  if (attention.size() != input_grad.rows()) {
    throw DimensionError("attention length " + std::to_string(attention.size()) +
                         " != gradient rows " +
                         std::to_string(input_grad.rows()));
  }
  std::vector<double> scores(attention.size());
  for (std::size_t i = 0; i < attention.size(); ++i) {
    if (attention[i] < 0.0) {
      throw ValidationError("negative attention weight at token " +
                            std::to_string(i));
    }
    double sq = 0.0;
    for (double g : input_grad.row(i)) sq += g * g;
    scores[i] = attention[i] * std::sqrt(sq);
  }
  return scores;
}

std::vector<double> resolve_scores(const AttributionRecord& record) {
  if (record.scores) return *record.scores;
  if (!record.input_grad) {
    throw ValidationError("record (" + record.note_id + ", " + record.code +
                          ") has neither scores nor input_grad");
  }
  return attingrad(record.attention, *record.input_grad);
}

AttributionRecord parse_record(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
  }
  if (!j.is_object()) throw ParseError("attribution record must be an object");
  AttributionRecord r;
  r.note_id = read_id(j, "note_id");
  r.code = read_id(j, "code");
  try {
    r.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const auto& s : j.at("spans")) {
      if (!s.is_array() || s.size() != 2) {
        throw ParseError("span must be a [begin, end] pair");
      }
      const auto b = s[0].get<long long>();
      const auto e = s[1].get<long long>();
      if (b < 0 || e < 0) throw ValidationError("negative char span offset");
      r.spans.push_back({static_cast<std::size_t>(b), static_cast<std::size_t>(e)});
    }
    if (has_value(j, "attention")) r.attention = read_vector(j["attention"], "attention");
    if (has_value(j, "input_grad")) {
      std::vector<std::vector<double>> rows;
      for (const auto& row : j["input_grad"]) {
        rows.push_back(read_vector(row, "input_grad"));
      }
      r.input_grad = Matrix::from_rows(rows);
    }
    if (has_value(j, "scores")) r.scores = read_vector(j["scores"], "scores");
    if (!j.contains("probability") || !j["probability"].is_number()) {
      throw ParseError("'probability' must be a number");
    }
    r.probability = j["probability"].get<double>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("attribution record: ") + e.what());
  }
  validate(r);
  return r;
}

std::string serialize_record(const AttributionRecord& r) {
  Json j;
  j["note_id"] = r.note_id;
  j["code"] = r.code;
  j["tokens"] = r.tokens;
  j["spans"] = Json::array();
  for (const auto& s : r.spans) j["spans"].push_back({s.begin, s.end});
  j["attention"] = r.attention;
  j["input_grad"] = r.input_grad ? Json(r.input_grad->to_rows()) : Json(nullptr);
  j["scores"] = r.scores ? Json(*r.scores) : Json(nullptr);
  j["probability"] = r.probability;
  return dump_json_line(j);
}

std::vector<AttributionRecord> parse_jsonl(std::string_view text) {
  std::vector<AttributionRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        out.push_back(parse_record(line));
      } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what(),
                         pos + e.byte_position());
      } catch (const Error& e) {
        throw ValidationError("line " + std::to_string(line_no) + ": " +
                              e.what());
      }
    }
    pos = nl + 1;
  }
  return out;
}

std::vector<AttributionRecord> load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_jsonl(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.byte_position());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

double micro_f1_at(const std::vector<CalibrationCase>& cases, double tau) {
  return f1_of(count_at(cases, tau));
}

ThresholdConfig calibrate_threshold(const std::vector<CalibrationCase>& cases,
                                    std::vector<double> grid) {
  check_grid(grid);
  if (cases.empty()) throw ValidationError("validation set is empty");
  bool any_gold = false;
  for (const auto& c : cases) {
    for (auto g : c.gold) {
      if (g >= c.scores.size()) {
        throw ValidationError("gold token id " + std::to_string(g) +
                              " outside token count " +
                              std::to_string(c.scores.size()));
      }
    }
    any_gold = any_gold || !c.gold.empty();
  }
  if (!any_gold) {
    throw ValidationError("threshold undefined: every gold set is empty");
  }
  ThresholdConfig best;
  best.f1 = -1.0;
  for (double tau : grid) {
    const double f1 = micro_f1_at(cases, tau);
    if (f1 >= best.f1) {
      best.f1 = f1;
      best.tau = tau;
    }
  }
  best.grid = std::move(grid);
  return best;
}

std::vector<double> default_grid(const std::vector<CalibrationCase>& cases,
                                 std::size_t points) {
  std::vector<double> pooled;
  for (const auto& c : cases) {
    pooled.insert(pooled.end(), c.scores.begin(), c.scores.end());
  }
  if (pooled.empty()) throw ValidationError("no scores to build a grid from");
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> grid{
      std::nextafter(pooled.front(), -std::numeric_limits<double>::infinity())};
  const std::size_t n = pooled.size();
  points = std::max<std::size_t>(points, 2);
  for (std::size_t j = 0; j < points; ++j) {
    const std::size_t idx = j * (n - 1) / (points - 1);
    if (pooled[idx] > grid.back()) grid.push_back(pooled[idx]);
  }
  return grid;
}

std::map<std::string, ThresholdConfig> calibrate_per_code(
    const std::vector<CalibrationCase>& cases, const ThresholdConfig& fallback,
    std::size_t grid_points) {
  std::map<std::string, std::vector<CalibrationCase>> by_code;
  for (const auto& c : cases) by_code[c.code].push_back(c);
  std::map<std::string, ThresholdConfig> out;
  for (const auto& [code, group] : by_code) {
    const bool has_gold = std::any_of(group.begin(), group.end(),
                                      [](const auto& c) { return !c.gold.empty(); });
    out[code] = has_gold
                    ? calibrate_threshold(group, default_grid(group, grid_points))
                    : fallback;
  }
  return out;
}

std::string strip_subword_marker(std::string_view surface) {
  for (std::string_view marker : {"##", "\xC4\xA0", "\xE2\x96\x81"}) {
    if (surface.starts_with(marker) && surface.size() > marker.size()) {
      return std::string(surface.substr(marker.size()));
    }
  }
  return std::string(surface);
}

ModelEvidence extract_evidence(const AttributionRecord& record, double tau,
                               const PostConfig& post) {
  const auto scores = resolve_scores(record);
  return extract_evidence(record, scores, tau, post);
}

ModelEvidence extract_evidence(const AttributionRecord& record,
                               std::span<const double> scores, double tau,
                               const PostConfig& post) {
  const std::size_t n = record.tokens.size();
  if (scores.size() != n) {
    throw DimensionError("scores length " + std::to_string(scores.size()) +
                         " != " + std::to_string(n) + " tokens");
  }
  std::vector<std::string> stripped(n);
  for (std::size_t i = 0; i < n; ++i) {
    stripped[i] = strip_subword_marker(record.tokens[i]);
  }

  // Evidence units as inclusive token ranges.
  std::vector<std::pair<std::size_t, std::size_t>> units;
  if (post.expand_words) {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && is_word_piece(stripped[j]) &&
             is_word_piece(stripped[j + 1]) &&
             record.spans[j].end == record.spans[j + 1].begin &&
             !starts_new_word(record.tokens[j + 1])) {
        ++j;
      }
      bool hit = false;
      for (std::size_t t = i; t <= j; ++t) hit = hit || scores[t] > tau;
      if (hit) units.emplace_back(i, j);
      i = j + 1;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (scores[i] > tau) units.emplace_back(i, i);
    }
  }

  ModelEvidence ev;
  std::unordered_set<std::string> seen;
  std::set<std::size_t> ids;
  for (const auto& [first, last] : units) {
    std::string surface;
    for (std::size_t t = first; t <= last; ++t) surface += stripped[t];
    if (post.drop_punctuation && is_punct_only(surface)) continue;
    if (post.deduplicate && !seen.insert(textproc::fold_and_collapse(surface)).second) {
      continue;
    }
    for (std::size_t t = first; t <= last; ++t) ids.insert(t);
    ev.surfaces.push_back(std::move(surface));
    ev.char_spans.push_back({record.spans[first].begin, record.spans[last].end});
  }
  ev.token_ids.assign(ids.begin(), ids.end());
  return ev;
}

}  // namespace evidkit::attribution
