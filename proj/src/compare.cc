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

#include "evidkit/compare.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "evidkit/corpus.h"
#include "evidkit/error.h"
#include "evidkit/textproc.h"

namespace evidkit::compare {

namespace {

using Key = std::pair<std::string, std::string>;

std::map<Key, MatchType> key_types(const std::vector<MatchResult>& results,
                                   const char* side) {
  std::map<Key, MatchType> out;
  for (const auto& r : results) {
    Key key{r.eval.note_id, corpus::canonical_code(r.eval.code)};
    if (!out.emplace(key, r.match).second) {
      throw ValidationError(std::string("duplicate case in result set ") +
                            side + ": " + key.first + "/" + key.second);
    }
  }
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

// Population statistics of a non-empty sample.
MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
  return out;
}

double micro_recall(const std::vector<const MatchResult*>& cases) {
  const auto hit = std::count_if(cases.begin(), cases.end(),
                                 [](const MatchResult* r) { return r->eval.predicted; });
  return static_cast<double>(hit) / static_cast<double>(cases.size());
}

double macro_recall(const std::vector<const MatchResult*>& cases) {
  std::map<std::string, std::vector<const MatchResult*>> by_code;
  for (const auto* r : cases) by_code[corpus::canonical_code(r->eval.code)].push_back(r);
  double sum = 0.0;
  for (const auto& [code, group] : by_code) sum += micro_recall(group);
  return sum / static_cast<double>(by_code.size());
}

}  // namespace

AgreementMatrix AgreementMatrix::transposed() const {
  AgreementMatrix t = *this;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) t.counts[i][j] = counts[j][i];
  }
  return t;
}

AgreementMatrix agreement_matrix(const std::vector<MatchResult>& a,
                                 const std::vector<MatchResult>& b) {
  const auto ta = key_types(a, "A");
  const auto tb = key_types(b, "B");
  AgreementMatrix m;
  std::size_t diagonal = 0;
  for (const auto& [key, type_a] : ta) {
    auto it = tb.find(key);
    if (it == tb.end()) continue;
    ++m.counts[matching::index_of(type_a)][matching::index_of(it->second)];
    ++m.total;
    if (type_a == it->second) ++diagonal;
  }
  if (m.total == 0) throw ValidationError("result sets share no cases");
  m.diagonal_rate = static_cast<double>(diagonal) / static_cast<double>(m.total);
  return m;
}

ProbabilityByMatch probability_by_match(const std::vector<MatchResult>& results) {
  ProbabilityByMatch out;
  std::array<std::vector<double>, 5> probs;
  double sum = 0.0;
  for (const auto& r : results) {
    probs[matching::index_of(r.match)].push_back(r.eval.probability);
    sum += r.eval.probability;
  }
  out.total = results.size();
  if (out.total > 0) out.global_mean = sum / static_cast<double>(out.total);
  for (std::size_t t = 0; t < 5; ++t) {
    out.per_type[t].count = probs[t].size();
    if (probs[t].empty()) continue;
    const auto ms = mean_std(probs[t]);
    out.per_type[t].mean = ms.mean;
    out.per_type[t].stddev = ms.stddev;
  }
  return out;
}

std::size_t evidence_word_count(const MatchResult& r, LengthSource source) {
  const auto& surfaces = source == LengthSource::kGtLength ? r.eval.gt_surfaces
                                                           : r.eval.model_surfaces;
  std::size_t n = 0;
  for (const auto& s : surfaces) n += textproc::word_count(s);
  return n;
}

std::vector<double> quantile_edges(std::vector<double> values, std::size_t bins) {
  if (values.empty() || bins == 0) return {};
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::vector<double> edges;
  for (std::size_t j = 0; j <= bins; ++j) {
    const double v = values[j * (n - 1) / bins];
    if (edges.empty() || v > edges.back()) edges.push_back(v);
  }
  return edges;
}

std::size_t bin_of(const std::vector<double>& edges, double value) {
  if (edges.size() < 2) return 0;
  const std::size_t last_bin = edges.size() - 2;
  // Number of interior edges <= value.
  auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, value);
  return std::min(static_cast<std::size_t>(it - (edges.begin() + 1)), last_bin);
}

LengthReport recall_by_length(const std::vector<ResultSet>& models,
                              std::size_t bins, LengthSource source,
                              RecallAveraging averaging) {
  if (bins == 0) throw std::invalid_argument("bins must be >= 1");
  if (models.empty()) throw std::invalid_argument("need at least one result set");
  LengthReport report;
  report.requested_bins = bins;

  std::vector<std::vector<std::pair<const MatchResult*, double>>> per_model(models.size());
  std::vector<double> pooled;
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (const auto& r : models[m].results) {
      if (!r.eval.gold) continue;
      const auto wc = static_cast<double>(evidence_word_count(r, source));
      per_model[m].emplace_back(&r, wc);
      pooled.push_back(wc);
    }
  }
  const auto edges = quantile_edges(pooled, bins);
  if (edges.empty()) return report;
  const std::size_t n_bins = std::max<std::size_t>(edges.size() - 1, 1);
  report.merged = n_bins < bins;

  for (std::size_t b = 0; b < n_bins; ++b) {
    LengthBinRow row;
    row.source = source;
    row.lo = edges[b];
    row.hi = edges.size() > 1 ? edges[b + 1] : edges[0];
    std::vector<double> recalls;
    for (const auto& cases : per_model) {
      std::vector<const MatchResult*> in_bin;
      for (const auto& [r, wc] : cases) {
        if (bin_of(edges, wc) == b) in_bin.push_back(r);
      }
      row.cases += in_bin.size();
      if (in_bin.empty()) continue;
      recalls.push_back(averaging == RecallAveraging::kMicroCases
                            ? micro_recall(in_bin)
                            : macro_recall(in_bin));
    }
    row.models = recalls.size();
    if (!recalls.empty()) {
      const auto ms = mean_std(recalls);
      row.recall_mean = ms.mean;
      row.recall_std = ms.stddev;
    }
    report.rows.push_back(row);
  }
  return report;
}

std::vector<RankRow> rank_models(const std::vector<ResultSet>& sets) {
  if (sets.size() < 2) throw ValidationError("ranking needs at least two result sets");
  std::vector<RankRow> rows;
  for (const auto& set : sets) {
    RankRow row;
    row.name = set.name;
    for (const auto& r : set.results) {
      if (r.eval.gt_spans.empty()) continue;
      row.tp += r.prf.tp;
      row.fp += r.prf.fp;
      row.fn += r.prf.fn;
    }
    const auto tp = static_cast<double>(row.tp);
    if (row.tp + row.fp > 0) row.precision = tp / static_cast<double>(row.tp + row.fp);
    if (row.tp + row.fn > 0) row.recall = tp / static_cast<double>(row.tp + row.fn);
    if (row.precision + row.recall > 0.0) {
      row.f1 = 2.0 * row.precision * row.recall / (row.precision + row.recall);
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const RankRow& a, const RankRow& b) {
    if (a.f1 != b.f1) return a.f1 > b.f1;
    if (a.precision != b.precision) return a.precision > b.precision;
    return a.name < b.name;
  });
  return rows;
}

CodeConfusion code_level_confusion(const std::vector<MatchResult>& results,
                                   double cutoff) {
  CodeConfusion c;
  for (const auto& r : results) {
    const bool positive = r.eval.probability >= cutoff;
    if (r.eval.gold) {
      ++c.gold;
      ++(positive ? c.tp : c.fn);
    } else if (positive) {
      ++c.fp;
    }
  }
  return c;
}

}  // namespace evidkit::compare
