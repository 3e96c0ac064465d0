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

#include "evidkit/matching.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "evidkit/error.h"

namespace evidkit::matching {

namespace {

using textproc::TokenSpan;

std::size_t gap(std::size_t lo, std::size_t hi, std::size_t x_lo,
                std::size_t x_hi) {
  // Distance between [x_lo, x_hi] and [lo, hi], 0 when they touch.
  if (x_hi < lo) return lo - x_hi;
  if (x_lo > hi) return x_lo - hi;
  return 0;
}

std::size_t distance_to_span(const EvaluationCase& c, std::size_t token,
                             const TokenSpan& span, DistanceUnit unit) {
  if (unit == DistanceUnit::kTokens) return gap(span.first, span.last, token, token);
  const auto& cs = c.token_char_spans;
  if (token >= cs.size() || span.last >= cs.size()) {
    throw ValidationError("char-distance matching needs token char spans");
  }
  const std::size_t gb = cs[span.first].begin;
  const std::size_t ge = cs[span.last].end;
  const std::size_t mb = cs[token].begin;
  const std::size_t me = cs[token].end;
  if (me <= gb) return gb - me;
  if (mb >= ge) return mb - ge;
  return 0;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(MatchType type) {
  switch (type) {
    case MatchType::kEmpty: return "empty";
    case MatchType::kExact: return "exact";
    case MatchType::kProximate: return "proximate";
    case MatchType::kPartial: return "partial";
    case MatchType::kNoMatch: return "no_match";
  }
  return "empty";
}

MatchType parse_match_type(std::string_view s) {
  for (auto t : kAllMatchTypes) {
    if (to_string(t) == s) return t;
  }
  throw ParseError("unknown match type: " + std::string(s));
}

std::vector<std::size_t> gt_token_ids(const EvaluationCase& c) {
  std::set<std::size_t> ids;
  for (const auto& s : c.gt_spans) {
    for (std::size_t i = s.first; i <= s.last; ++i) ids.insert(i);
  }
  return {ids.begin(), ids.end()};
}

MatchType classify_match(const EvaluationCase& c, const MatchConfig& config) {
  if (c.gt_spans.empty()) throw ValidationError("case has no ground truth");
  const auto& m = c.model_tokens;
  if (m.empty()) return MatchType::kEmpty;

  const auto g = gt_token_ids(c);
  std::vector<std::size_t> shared;
  std::set_intersection(g.begin(), g.end(), m.begin(), m.end(),
                        std::back_inserter(shared));
  if (shared.empty()) return MatchType::kNoMatch;
  if (g == m) return MatchType::kExact;

  const bool every_span_hit =
      std::all_of(c.gt_spans.begin(), c.gt_spans.end(), [&](const TokenSpan& s) {
        auto it = std::lower_bound(m.begin(), m.end(), s.first);
        return it != m.end() && *it <= s.last;
      });
  if (!every_span_hit) return MatchType::kPartial;

  std::vector<std::size_t> extra;
  std::set_difference(m.begin(), m.end(), g.begin(), g.end(),
                      std::back_inserter(extra));
  const bool within_window = std::all_of(extra.begin(), extra.end(), [&](std::size_t t) {
    return std::any_of(c.gt_spans.begin(), c.gt_spans.end(), [&](const TokenSpan& s) {
      return distance_to_span(c, t, s, config.unit) <= config.k;
    });
  });
  return within_window ? MatchType::kProximate : MatchType::kPartial;
}

TokenPrf token_prf(const EvaluationCase& c) {
  const auto g = gt_token_ids(c);
  const auto& m = c.model_tokens;
  std::vector<std::size_t> shared;
  std::set_intersection(g.begin(), g.end(), m.begin(), m.end(),
                        std::back_inserter(shared));
  TokenPrf r;
  r.tp = shared.size();
  r.fp = m.size() - r.tp;
  r.fn = g.size() - r.tp;
  const auto tp = static_cast<double>(r.tp);
  if (!m.empty()) r.precision = tp / static_cast<double>(m.size());
  if (!g.empty()) r.recall = tp / static_cast<double>(g.size());
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  const std::size_t uni = r.tp + r.fp + r.fn;
  if (uni > 0) r.iou = tp / static_cast<double>(uni);
  return r;
}

MatchResult evaluate(EvaluationCase c, const MatchConfig& config) {
  MatchResult r;
  r.match = classify_match(c, config);
  r.prf = token_prf(c);
  r.eval = std::move(c);
  return r;
}

MatchDistribution match_counts(const std::vector<MatchResult>& results) {
  MatchDistribution d;
  for (const auto& r : results) ++d.counts[index_of(r.match)];
  d.total = results.size();
  if (d.total > 0) {
    const std::size_t hit = d.count(MatchType::kExact) +
                            d.count(MatchType::kProximate) +
                            d.count(MatchType::kPartial);
    d.at_least_one_correct =
        static_cast<double>(hit) / static_cast<double>(d.total);
  }
  return d;
}

std::size_t export_no_match(const std::vector<MatchResult>& results,
                            std::ostream& out) {
  CsvWriter csv(out);
  csv.header({"note_id", "code", "gt_evidence", "model_evidence",
              "semantic_match"});
  std::size_t rows = 0;
  for (const auto& r : results) {
    if (r.match != MatchType::kNoMatch) continue;
    csv.field(r.eval.note_id)
        .field(r.eval.code)
        .field(join(r.eval.gt_surfaces, " | "))
        .field(join(r.eval.model_surfaces, " | "))
        .field("");
    csv.end_row();
    ++rows;
  }
  return rows;
}

double Thresholds::for_code(std::string_view code) const {
  auto it = per_code.find(corpus::canonical_code(code));
  return it == per_code.end() ? global : it->second;
}

std::optional<TokenSpan> map_char_span(
    const std::vector<attribution::CharSpan>& token_spans, std::size_t begin,
    std::size_t end) {
  std::optional<TokenSpan> out;
  for (std::size_t i = 0; i < token_spans.size(); ++i) {
    const auto& t = token_spans[i];
    if (t.begin < end && t.end > begin) {
      if (!out) {
        out = TokenSpan{i, i};
      } else {
        out->first = std::min(out->first, i);
        out->last = std::max(out->last, i);
      }
    }
  }
  return out;
}

CaseBuildResult build_cases(
    const corpus::Corpus& corpus,
    const std::vector<attribution::AttributionRecord>& records,
    const CaseBuildOptions& options) {
  using Key = std::pair<std::string, std::string>;
  std::map<Key, const attribution::AttributionRecord*> by_key;
  for (const auto& r : records) {
    by_key[{r.note_id, corpus::canonical_code(r.code)}] = &r;
  }

  struct Gold {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::vector<std::string> surfaces;
  };
  std::map<Key, Gold> gold;
  corpus.for_each_note([&](const corpus::Admission&, const corpus::Note& note) {
    for (std::size_t i = 0; i < note.annotations.size(); ++i) {
      const auto& ann = note.annotations[i];
      auto& g = gold[{note.note_id, corpus::canonical_code(ann.code)}];
      g.spans.emplace_back(ann.begin, ann.end);
      std::string surface = note.covered_text(i);
      if (std::find(g.surfaces.begin(), g.surfaces.end(), surface) ==
          g.surfaces.end()) {
        g.surfaces.push_back(std::move(surface));
      }
    }
  });

  auto make_case = [&](const Key& key, const attribution::AttributionRecord& rec,
                       bool is_gold) {
    EvaluationCase c;
    c.note_id = key.first;
    c.code = key.second;
    c.probability = rec.probability;
    c.gold = is_gold;
    c.predicted = rec.probability >= options.cutoff;
    const auto ev = attribution::extract_evidence(
        rec, options.thresholds.for_code(key.second), options.post);
    c.model_tokens = ev.token_ids;
    c.model_surfaces = ev.surfaces;
    if (options.keep_token_char_spans) c.token_char_spans = rec.spans;
    return c;
  };

  CaseBuildResult out;
  for (const auto& [key, g] : gold) {
    auto it = by_key.find(key);
    const std::string label = key.first + "/" + key.second;
    if (it == by_key.end()) {
      out.missing.push_back(label);
      continue;
    }
    EvaluationCase c = make_case(key, *it->second, true);
    std::set<TokenSpan> spans;
    for (const auto& [b, e] : g.spans) {
      if (auto s = map_char_span(it->second->spans, b, e)) spans.insert(*s);
    }
    if (spans.empty()) {
      out.unaligned.push_back(label);
      continue;
    }
    c.gt_spans.assign(spans.begin(), spans.end());
    c.gt_surfaces = g.surfaces;
    out.cases.push_back(std::move(c));
  }
  for (const auto& [key, rec] : by_key) {
    if (!gold.contains(key)) out.non_gold.push_back(make_case(key, *rec, false));
  }
  return out;
}

std::vector<attribution::CalibrationCase> calibration_cases(
    const corpus::Corpus& corpus,
    const std::vector<attribution::AttributionRecord>& records) {
  std::vector<attribution::CalibrationCase> out;
  for (const auto& rec : records) {
    const corpus::Note* note = corpus.find_note(rec.note_id);
    if (note == nullptr) continue;
    const std::string code = corpus::canonical_code(rec.code);
    std::set<std::size_t> gold;
    bool is_gold = false;
    for (const auto& ann : note->annotations) {
      if (corpus::canonical_code(ann.code) != code) continue;
      is_gold = true;
      if (auto s = map_char_span(rec.spans, ann.begin, ann.end)) {
        for (std::size_t i = s->first; i <= s->last; ++i) gold.insert(i);
      }
    }
    if (!is_gold) continue;
    out.push_back({attribution::resolve_scores(rec), {gold.begin(), gold.end()}, code});
  }
  return out;
}

Json to_json(const MatchResult& r) {
  Json j;
  j["note_id"] = r.eval.note_id;
  j["code"] = r.eval.code;
  j["match"] = std::string(to_string(r.match));
  j["p"] = r.prf.precision;
  j["r"] = r.prf.recall;
  j["f1"] = r.prf.f1;
  j["iou"] = r.prf.iou;
  j["probability"] = r.eval.probability;
  j["predicted"] = r.eval.predicted;
  j["gold"] = r.eval.gold;
  j["gt_spans"] = Json::array();
  for (const auto& s : r.eval.gt_spans) j["gt_spans"].push_back({s.first, s.last});
  j["model_tokens"] = r.eval.model_tokens;
  j["gt_evidence"] = r.eval.gt_surfaces;
  j["model_evidence"] = r.eval.model_surfaces;
  return j;
}

MatchResult result_from_json(const Json& j) {
  try {
    MatchResult r;
    auto id = [&](const char* key) {
      const auto& v = j.at(key);
      return v.is_string() ? v.get<std::string>() : v.dump();
    };
    r.eval.note_id = id("note_id");
    r.eval.code = id("code");
    r.match = parse_match_type(j.at("match").get<std::string>());
    r.eval.probability = j.at("probability").get<double>();
    r.eval.predicted = j.at("predicted").get<bool>();
    r.eval.gold = j.value("gold", true);
    for (const auto& s : j.value("gt_spans", Json::array())) {
      r.eval.gt_spans.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
    }
    auto tokens = j.value("model_tokens", std::vector<std::size_t>{});
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    r.eval.model_tokens = std::move(tokens);
    r.eval.gt_surfaces = j.value("gt_evidence", std::vector<std::string>{});
    r.eval.model_surfaces = j.value("model_evidence", std::vector<std::string>{});
    if (!r.eval.gt_spans.empty()) {
      r.prf = token_prf(r.eval);
    } else {
      r.prf.precision = j.value("p", 0.0);
      r.prf.recall = j.value("r", 0.0);
      r.prf.f1 = j.value("f1", 0.0);
      r.prf.iou = j.value("iou", 0.0);
    }
    return r;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("match result: ") + e.what());
  }
}

std::string serialize_results(const std::vector<MatchResult>& results) {
  std::string out;
  for (const auto& r : results) {
    out += dump_json_line(to_json(r));
    out += '\n';
  }
  return out;
}

std::vector<MatchResult> parse_results(std::string_view text) {
  std::vector<MatchResult> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(result_from_json(Json::parse(line)));
    } catch (const Json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), e.byte);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<MatchResult> load_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_results(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.byte_position());
  }
}

}  // namespace evidkit::matching
