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

// Token attributions for (document, code) pairs: attention x Input*Grad
// fusion, threshold calibration on validation data, and thresholded
// evidence extraction with optional word-level post-processing.

#ifndef EVIDKIT_ATTRIBUTION_H_
#define EVIDKIT_ATTRIBUTION_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evidkit::attribution {

// Dense row-major matrix, one row per token.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  // Throws DimensionError on ragged rows.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  std::vector<std::vector<double>> to_rows() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
  friend auto operator<=>(const CharSpan&, const CharSpan&) = default;
};

// One (note_id, code) pair as exported from a model. Token surfaces and
// char spans come from the model's own tokenizer.
struct AttributionRecord {
  std::string note_id;
  std::string code;
  std::vector<std::string> tokens;
  std::vector<CharSpan> spans;
  std::vector<double> attention;
  std::optional<Matrix> input_grad;
  std::optional<std::vector<double>> scores;
  double probability = 0.0;

  std::size_t size() const { return tokens.size(); }
  friend bool operator==(const AttributionRecord&,
                         const AttributionRecord&) = default;
};

// Throws ValidationError / DimensionError when lengths disagree, the
// probability is outside [0,1], or neither scores nor attention+gradients
// are present.
void validate(const AttributionRecord& record);

// score[i] = attention[i] * ||input_grad row i||_2.
std::vector<double> attingrad(std::span<const double> attention,
                              const Matrix& input_grad);

// Precomputed scores when present, else attingrad.
std::vector<double> resolve_scores(const AttributionRecord& record);

// JSON Lines codec. Blank lines are skipped.
AttributionRecord parse_record(std::string_view line);
std::string serialize_record(const AttributionRecord& record);
std::vector<AttributionRecord> parse_jsonl(std::string_view text);
std::vector<AttributionRecord> load_jsonl(const std::string& path);

enum class CalibrationMetric { kTokenF1 };

struct ThresholdConfig {
  double tau = 0.0;
  CalibrationMetric metric = CalibrationMetric::kTokenF1;
  std::vector<double> grid;
  double f1 = 0.0;  // micro F1 achieved at tau
};

struct CalibrationCase {
  std::vector<double> scores;
  std::vector<std::size_t> gold;  // token ids, any order
  std::string code;               // used by per-code calibration
};

// Micro-averaged F1 of {i : score > tau} against gold over all cases.
double micro_f1_at(const std::vector<CalibrationCase>& cases, double tau);

// Grid point with the highest micro F1, ties toward the larger value.
// Throws ValidationError for an empty or non-increasing grid, an empty
// case list, out-of-range gold ids, or when every gold set is empty.
ThresholdConfig calibrate_threshold(const std::vector<CalibrationCase>& cases,
                                    std::vector<double> grid);

inline constexpr std::size_t kDefaultGridSize = 200;

// Evenly spaced quantiles of the pooled scores (lower nearest rank),
// deduplicated, preceded by a value just below the minimum so that
// selecting every token is a candidate.
std::vector<double> default_grid(const std::vector<CalibrationCase>& cases,
                                 std::size_t points = kDefaultGridSize);

// One threshold per code; codes with no gold tokens use `fallback`.
std::map<std::string, ThresholdConfig> calibrate_per_code(
    const std::vector<CalibrationCase>& cases, const ThresholdConfig& fallback,
    std::size_t grid_points = kDefaultGridSize);

struct PostConfig {
  bool expand_words = false;      // merge contiguous word pieces
  bool drop_punctuation = false;  // remove punctuation-only units
  bool deduplicate = false;       // keep first of repeated surfaces
};

// Extracted evidence. `surfaces` and `char_spans` are parallel and hold one
// entry per evidence unit (a token, or a whole word when expanded).
struct ModelEvidence {
  std::vector<std::size_t> token_ids;  // sorted, unique
  std::vector<std::string> surfaces;
  std::vector<CharSpan> char_spans;
};

// Surface with subword markers ("##", "Ġ", "▁") removed.
std::string strip_subword_marker(std::string_view surface);

ModelEvidence extract_evidence(const AttributionRecord& record, double tau,
                               const PostConfig& post = {});
ModelEvidence extract_evidence(const AttributionRecord& record,
                               std::span<const double> scores, double tau,
                               const PostConfig& post = {});

}  // namespace evidkit::attribution

#endif  // EVIDKIT_ATTRIBUTION_H_
