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

#include "evidkit/analysis.h"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>
#include <unordered_set>

namespace evidkit::analysis {

namespace {

std::string category_key(std::string_view s) {
  return textproc::fold_and_collapse(s);
}

}  // namespace

Histogram position_distribution(const corpus::Corpus& corpus,
                                const std::optional<std::string>& category,
                                std::size_t bins, PositionAnchor anchor) {
  if (bins == 0) throw std::invalid_argument("bins must be >= 1");
  Histogram h;
  h.counts.assign(bins, 0);
  h.normalized.assign(bins, 0.0);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.bin_edges.push_back(static_cast<double>(i) / static_cast<double>(bins));
  }
  const std::optional<std::string> wanted =
      category ? std::optional(category_key(*category)) : std::nullopt;

  corpus.for_each_note([&](const corpus::Admission&, const corpus::Note& note) {
    if (wanted && category_key(note.category) != *wanted) return;
    const auto length = static_cast<double>(note.text_length);
    for (const auto& ann : note.annotations) {
      const double anchor_pos =
          anchor == PositionAnchor::kBegin
              ? static_cast<double>(ann.begin)
              : 0.5 * static_cast<double>(ann.begin + ann.end - 1);
      const double rel = anchor_pos / length;
      auto bin = static_cast<std::size_t>(rel * static_cast<double>(bins));
      h.counts[std::min(bin, bins - 1)]++;
      ++h.total;
    }
  });
  if (h.total > 0) {
    for (std::size_t i = 0; i < bins; ++i) {
      h.normalized[i] =
          static_cast<double>(h.counts[i]) / static_cast<double>(h.total);
    }
  }
  return h;
}

std::optional<double> span_overlap(std::string_view evidence,
                                   std::string_view description,
                                   const textproc::NormConfig& norm) {
  const auto desc = textproc::normalize_terms(description, norm);
  if (desc.empty()) return std::nullopt;
  const auto ev = textproc::normalize_terms(evidence, norm);
  const std::unordered_set<std::string> ev_set(ev.begin(), ev.end());
  const auto shared = std::count_if(desc.begin(), desc.end(), [&](const auto& w) {
    return ev_set.contains(w);
  });
  return static_cast<double>(shared) / static_cast<double>(desc.size());
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sample");
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid),
                   values.end());
  return values[mid];
}

OverlapReport description_overlap(const corpus::Corpus& corpus,
                                  const textproc::NormConfig& norm) {
  OverlapReport report;
  std::map<std::string, std::vector<double>> per_code;
  corpus.for_each_note([&](const corpus::Admission&, const corpus::Note& note) {
    for (std::size_t i = 0; i < note.annotations.size(); ++i) {
      const auto& ann = note.annotations[i];
      if (ann.description.empty()) {
        ++report.missing_description;
        continue;
      }
      auto overlap = span_overlap(note.covered_text(i), ann.description, norm);
      if (!overlap) {
        report.warnings.push_back("note " + note.note_id + " annotation " +
                                  std::to_string(i) + ": description '" +
                                  ann.description +
                                  "' has no content words; excluded");
        continue;
      }
      per_code[corpus::canonical_code(ann.code)].push_back(*overlap);
    }
  });
  for (auto& [code, values] : per_code) {
    OverlapRow row;
    row.code = code;
    row.span_count = values.size();
    row.median_overlap = lower_median(values);
    row.per_span = std::move(values);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<DiversityRow> diversity(const corpus::Corpus& corpus) {
  std::map<std::string, std::pair<std::size_t, std::set<std::string>>> acc;
  corpus.for_each_note([&](const corpus::Admission&, const corpus::Note& note) {
    for (std::size_t i = 0; i < note.annotations.size(); ++i) {
      auto& [total, surfaces] =
          acc[corpus::canonical_code(note.annotations[i].code)];
      ++total;
      surfaces.insert(textproc::fold_and_collapse(note.covered_text(i)));
    }
  });
  std::vector<DiversityRow> rows;
  for (const auto& [code, entry] : acc) {
    rows.push_back({code, entry.first, entry.second.size()});
  }
  return rows;
}

std::vector<DuplicateGroup> duplicate_report(
    const std::vector<CaseEvidence>& cases) {
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> counts;
  for (const auto& c : cases) {
    for (const auto& s : c.surfaces) {
      ++counts[{c.note_id, c.code, textproc::fold_and_collapse(s)}];
    }
  }
  std::vector<DuplicateGroup> out;
  for (const auto& [key, n] : counts) {
    if (n > 1) {
      out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), n});
    }
  }
  return out;
}

}  // namespace evidkit::analysis
