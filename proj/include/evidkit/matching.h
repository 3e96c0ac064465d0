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

// Five-way match taxonomy between human evidence and model evidence, plus
// token-level precision/recall/F1/IoU.
//
// Classification precedence, with G the union of ground-truth token ids
// and M the model token ids:
//   Empty      M is empty
//   NoMatch    G and M are disjoint
//   Exact      G == M
//   Proximate  every gt span holds a model token and every model token
//              outside G lies within k tokens of some gt span
//   Partial    anything else

#ifndef EVIDKIT_MATCHING_H_
#define EVIDKIT_MATCHING_H_

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "evidkit/attribution.h"
#include "evidkit/corpus.h"
#include "evidkit/serialize.h"
#include "evidkit/textproc.h"

namespace evidkit::matching {

enum class MatchType { kEmpty, kExact, kProximate, kPartial, kNoMatch };

inline constexpr std::array<MatchType, 5> kAllMatchTypes = {
    MatchType::kEmpty, MatchType::kExact, MatchType::kProximate,
    MatchType::kPartial, MatchType::kNoMatch};

std::string_view to_string(MatchType type);
MatchType parse_match_type(std::string_view s);
inline std::size_t index_of(MatchType t) { return static_cast<std::size_t>(t); }

enum class DistanceUnit { kTokens, kChars };

struct MatchConfig {
  std::size_t k = 10;
  DistanceUnit unit = DistanceUnit::kTokens;
};

inline constexpr double kDefaultCutoff = 0.5;

struct EvaluationCase {
  std::string note_id;
  std::string code;
  std::vector<textproc::TokenSpan> gt_spans;  // model-token index space
  std::vector<std::size_t> model_tokens;      // sorted, unique
  double probability = 0.0;
  bool gold = true;
  bool predicted = false;
  std::vector<std::string> gt_surfaces;
  std::vector<std::string> model_surfaces;
  // Char spans of every model token; required only for DistanceUnit::kChars.
  std::vector<attribution::CharSpan> token_char_spans;
};

// Throws ValidationError("case has no ground truth") for empty gt_spans.
MatchType classify_match(const EvaluationCase& c, const MatchConfig& config = {});

struct TokenPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

TokenPrf token_prf(const EvaluationCase& c);

// Sorted union of the gt span token ids.
std::vector<std::size_t> gt_token_ids(const EvaluationCase& c);

struct MatchResult {
  EvaluationCase eval;
  MatchType match = MatchType::kEmpty;
  TokenPrf prf;
};

MatchResult evaluate(EvaluationCase c, const MatchConfig& config = {});

struct MatchDistribution {
  std::array<std::size_t, 5> counts{};
  std::size_t total = 0;
  double at_least_one_correct = 0.0;  // (Exact + Proximate + Partial) / total

  std::size_t count(MatchType t) const { return counts[index_of(t)]; }
};

MatchDistribution match_counts(const std::vector<MatchResult>& results);

// Worksheet of NoMatch cases for external semantic-match labelling:
// note_id, code, gt_evidence, model_evidence, semantic_match (blank).
// Returns the number of rows written.
std::size_t export_no_match(const std::vector<MatchResult>& results,
                            std::ostream& out);

// Per-code thresholds with a global fallback.
struct Thresholds {
  double global = 0.0;
  std::map<std::string, double> per_code;  // canonical code

  double for_code(std::string_view code) const;
};

struct CaseBuildOptions {
  Thresholds thresholds;
  attribution::PostConfig post;
  double cutoff = kDefaultCutoff;
  bool keep_token_char_spans = false;
};

struct CaseBuildResult {
  std::vector<EvaluationCase> cases;  // gold cases, sorted by (note, code)
  // Records for codes that are not gold for their note.
  std::vector<EvaluationCase> non_gold;
  std::vector<std::string> missing;    // gold cases without a record
  std::vector<std::string> unaligned;  // gold cases whose spans hit no token
};

// Joins corpus gold evidence with model attribution records. Ground-truth
// char spans are mapped onto the model tokens they overlap. Every gold
// (note_id, code) pair forms a case whether or not the code was predicted.
CaseBuildResult build_cases(const corpus::Corpus& corpus,
                            const std::vector<attribution::AttributionRecord>& records,
                            const CaseBuildOptions& options);

// Validation cases for threshold calibration: scores of each gold
// (note_id, code) record against the model tokens its evidence overlaps.
// Records for non-gold codes are not used.
std::vector<attribution::CalibrationCase> calibration_cases(
    const corpus::Corpus& corpus,
    const std::vector<attribution::AttributionRecord>& records);

// Model token indices overlapping [begin, end); nullopt when none do.
std::optional<textproc::TokenSpan> map_char_span(
    const std::vector<attribution::CharSpan>& token_spans, std::size_t begin,
    std::size_t end);

// JSON Lines schema for match results.
Json to_json(const MatchResult& r);
MatchResult result_from_json(const Json& j);
std::string serialize_results(const std::vector<MatchResult>& results);
std::vector<MatchResult> parse_results(std::string_view text);
std::vector<MatchResult> load_results(const std::string& path);

}  // namespace evidkit::matching

#endif  // EVIDKIT_MATCHING_H_
