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

// Cross-model aggregations over match results.

#ifndef EVIDKIT_COMPARE_H_
#define EVIDKIT_COMPARE_H_

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "evidkit/matching.h"

namespace evidkit::compare {

using matching::MatchResult;
using matching::MatchType;

// A named set of match results (one model / seed).
struct ResultSet {
  std::string name;
  std::vector<MatchResult> results;
};

struct AgreementMatrix {
  // counts[a][b]: rows are model A types, columns model B types, both in
  // matching::kAllMatchTypes order.
  std::array<std::array<std::size_t, 5>, 5> counts{};
  std::size_t total = 0;
  double diagonal_rate = 0.0;

  std::size_t at(MatchType a, MatchType b) const {
    return counts[matching::index_of(a)][matching::index_of(b)];
  }
  AgreementMatrix transposed() const;
};

// Compares cases shared by key (note_id, canonical code). Throws
// ValidationError on duplicate keys within a set or when nothing is shared.
AgreementMatrix agreement_matrix(const std::vector<MatchResult>& a,
                                 const std::vector<MatchResult>& b);

struct ProbabilityStats {
  std::size_t count = 0;
  std::optional<double> mean;  // absent for empty types
  std::optional<double> stddev;  // population
};

struct ProbabilityByMatch {
  std::array<ProbabilityStats, 5> per_type;
  std::size_t total = 0;
  double global_mean = 0.0;

  const ProbabilityStats& of(MatchType t) const {
    return per_type[matching::index_of(t)];
  }
};

ProbabilityByMatch probability_by_match(const std::vector<MatchResult>& results);

enum class LengthSource { kGtLength, kModelLength };
enum class RecallAveraging { kMicroCases, kMacroCodes };

struct LengthBinRow {
  double lo = 0.0;  // [lo, hi), the last bin is closed
  double hi = 0.0;
  std::optional<double> recall_mean;  // over models with cases in the bin
  double recall_std = 0.0;            // population, across models
  std::size_t models = 0;             // models contributing
  std::size_t cases = 0;              // pooled cases in the bin
  LengthSource source = LengthSource::kGtLength;
};

struct LengthReport {
  std::vector<LengthBinRow> rows;
  std::size_t requested_bins = 0;
  bool merged = false;  // fewer distinct edges than requested bins
};

// Word count of a case's gt or model evidence (non-punctuation tokens).
std::size_t evidence_word_count(const MatchResult& r, LengthSource source);

// Quantile edges (lower nearest rank) of `values`, deduplicated.
std::vector<double> quantile_edges(std::vector<double> values, std::size_t bins);

// Bin index for `value` under half-open edges; the last bin is closed.
std::size_t bin_of(const std::vector<double>& edges, double value);

// Recall of gold cases (predicted / gold) per quantile bin of evidence word
// count, mean and population std across result sets. Throws
// std::invalid_argument for bins == 0 or an empty model list.
LengthReport recall_by_length(const std::vector<ResultSet>& models,
                              std::size_t bins, LengthSource source,
                              RecallAveraging averaging = RecallAveraging::kMicroCases);

struct RankRow {
  std::string name;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Micro token-level P/R/F1 per set, sorted by F1 then precision (both
// descending), then name. Throws ValidationError for fewer than 2 sets.
std::vector<RankRow> rank_models(const std::vector<ResultSet>& sets);

struct CodeConfusion {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t gold = 0;
};

// Gold cases split at `cutoff`; non-gold results with probability at or
// above the cutoff count as false positives.
CodeConfusion code_level_confusion(const std::vector<MatchResult>& results,
                                   double cutoff = matching::kDefaultCutoff);

}  // namespace evidkit::compare

#endif  // EVIDKIT_COMPARE_H_
