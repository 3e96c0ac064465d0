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

#ifndef EVIDKIT_ANALYSIS_H_
#define EVIDKIT_ANALYSIS_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "evidkit/corpus.h"
#include "evidkit/textproc.h"

namespace evidkit::analysis {

struct Histogram {
  std::vector<double> bin_edges;  // bins + 1 values from 0 to 1
  std::vector<std::size_t> counts;
  std::vector<double> normalized;  // counts / total, all zero when total == 0
  std::size_t total = 0;
};

// Which point of a span defines its relative position.
enum class PositionAnchor { kBegin, kMidpoint };

inline constexpr std::size_t kDefaultPositionBins = 20;

// Histogram of relative evidence positions (anchor offset / note length)
// over notes whose category matches `category` (case-insensitive, trimmed).
// Throws std::invalid_argument when bins == 0.
Histogram position_distribution(const corpus::Corpus& corpus,
                                const std::optional<std::string>& category,
                                std::size_t bins = kDefaultPositionBins,
                                PositionAnchor anchor = PositionAnchor::kBegin);

struct OverlapRow {
  std::string code;  // canonical
  std::size_t span_count = 0;
  double median_overlap = 0.0;  // lower median
  std::vector<double> per_span;
};

struct OverlapReport {
  std::vector<OverlapRow> rows;  // sorted by code
  std::size_t missing_description = 0;
  std::vector<std::string> warnings;
};

// |terms(evidence) ∩ terms(description)| / |terms(description)|.
// Returns nullopt when the description normalizes to nothing.
std::optional<double> span_overlap(std::string_view evidence,
                                   std::string_view description,
                                   const textproc::NormConfig& norm);

OverlapReport description_overlap(const corpus::Corpus& corpus,
                                  const textproc::NormConfig& norm);

// Lower median of a non-empty sample.
double lower_median(std::vector<double> values);

struct DiversityRow {
  std::string code;  // canonical
  std::size_t total_occurrences = 0;
  std::size_t unique_strings = 0;
};

std::vector<DiversityRow> diversity(const corpus::Corpus& corpus);

// Model evidence for one (document, code) case.
struct CaseEvidence {
  std::string note_id;
  std::string code;
  std::vector<std::string> surfaces;
};

struct DuplicateGroup {
  std::string note_id;
  std::string code;
  std::string surface;  // case-folded
  std::size_t count = 0;
};

// Surfaces repeated within a case, grouped case-insensitively. Output is
// sorted by (note_id, code, surface).
std::vector<DuplicateGroup> duplicate_report(
    const std::vector<CaseEvidence>& cases);

}  // namespace evidkit::analysis

#endif  // EVIDKIT_ANALYSIS_H_
