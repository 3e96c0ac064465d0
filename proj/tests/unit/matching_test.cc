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

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "evidkit/error.h"
#include "evidkit/matching.h"
#include "evidkit/synthkit.h"
#include "evidkit/textproc.h"

using namespace evidkit::matching;
using evidkit::ValidationError;
using evidkit::attribution::AttributionRecord;
using evidkit::attribution::CharSpan;
using evidkit::synthkit::SplitMix64;
using evidkit::textproc::TokenSpan;

namespace {

EvaluationCase make_case(std::vector<TokenSpan> gt, std::vector<std::size_t> m) {
  EvaluationCase c;
  c.note_id = "n";
  c.code = "I10";
  c.gt_spans = std::move(gt);
  c.model_tokens = std::move(m);
  return c;
}

MatchType classify(std::vector<TokenSpan> gt, std::vector<std::size_t> m,
                   std::size_t k = 10) {
  return classify_match(make_case(std::move(gt), std::move(m)), MatchConfig{k});
}

}  // namespace

TEST_CASE("classify_match reference cases") {
  CHECK(classify({{5, 6}}, {5, 6}) == MatchType::kExact);
  CHECK(classify({{5, 6}}, {}) == MatchType::kEmpty);
  // 12 is six tokens past the span end.
  CHECK(classify({{5, 6}}, {5, 12}) == MatchType::kProximate);
  // Second span has no model token.
  CHECK(classify({{5, 6}, {40, 41}}, {5}) == MatchType::kPartial);
  CHECK(classify({{5, 6}}, {100}) == MatchType::kNoMatch);
}

TEST_CASE("classify_match window boundary") {
  CHECK(classify({{5, 6}}, {5, 16}) == MatchType::kProximate);
  CHECK(classify({{5, 6}}, {5, 17}) == MatchType::kPartial);
  CHECK(classify({{20, 21}}, {10, 20}) == MatchType::kProximate);
  CHECK(classify({{20, 21}}, {9, 20}) == MatchType::kPartial);
  // Distance is to the nearest span.
  CHECK(classify({{5, 6}, {40, 41}}, {5, 35, 40}) == MatchType::kProximate);
}

TEST_CASE("classify_match with k = 0") {
  CHECK(classify({{5, 6}}, {5}, 0) == MatchType::kProximate);
  CHECK(classify({{5, 6}}, {5, 7}, 0) == MatchType::kPartial);
  CHECK(classify({{5, 6}, {9, 9}}, {6, 9}, 0) == MatchType::kProximate);

  // Proximate at k = 0 means every span touched and M inside G.
  SplitMix64 rng(41);
  for (int i = 0; i < 3000; ++i) {
    const auto c = evidkit::synthkit::random_case(rng, 60, 4);
    const auto g = gt_token_ids(c);
    const auto& m = c.model_tokens;
    const bool touched = std::all_of(c.gt_spans.begin(), c.gt_spans.end(), [&](auto s) {
      return std::any_of(m.begin(), m.end(), [&](auto t) { return s.contains(t); });
    });
    const bool inside = std::includes(g.begin(), g.end(), m.begin(), m.end());
    const bool expect = !m.empty() && touched && inside && g != m;
    CHECK((classify_match(c, MatchConfig{0}) == MatchType::kProximate) == expect);
  }
}

TEST_CASE("classify_match requires ground truth") {
  CHECK_THROWS_WITH_AS(classify({}, {1}), "case has no ground truth", ValidationError);
}

TEST_CASE("classify_match agrees with the brute-force oracle") {
  SplitMix64 rng(7);
  for (int i = 0; i < 5000; ++i) {
    const auto c = evidkit::synthkit::random_case(rng);
    for (std::size_t k : {0u, 5u, 10u}) {
      REQUIRE(classify_match(c, MatchConfig{k}) ==
              evidkit::synthkit::oracle_classify(c, k));
    }
  }
}

TEST_CASE("classify_match is invariant under an order-preserving shift") {
  SplitMix64 rng(13);
  for (int i = 0; i < 2000; ++i) {
    auto c = evidkit::synthkit::random_case(rng);
    const std::size_t shift = rng.uniform(1000);
    auto shifted = c;
    for (auto& s : shifted.gt_spans) s = {s.first + shift, s.last + shift};
    for (auto& t : shifted.model_tokens) t += shift;
    for (std::size_t k : {0u, 3u, 10u}) {
      CHECK(classify_match(c, MatchConfig{k}) == classify_match(shifted, MatchConfig{k}));
    }
  }
}

TEST_CASE("classify_match in char distance") {
  auto c = make_case({{1, 1}}, {1, 3});
  // Tokens at chars 0-4, 5-9, 10-14, 40-44.
  c.token_char_spans = {{0, 4}, {5, 9}, {10, 14}, {40, 44}};
  MatchConfig chars{10, DistanceUnit::kChars};
  CHECK(classify_match(c, chars) == MatchType::kPartial);  // 31 chars away
  c.model_tokens = {1, 2};
  CHECK(classify_match(c, chars) == MatchType::kProximate);
  c.token_char_spans.clear();
  CHECK_THROWS_AS(classify_match(c, chars), ValidationError);
}

TEST_CASE("token_prf") {
  const auto same = token_prf(make_case({{1, 2}}, {1, 2}));
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);
  CHECK(same.iou == 1.0);

  const auto half = token_prf(make_case({{1, 2}}, {2, 3}));
  CHECK(half.precision == 0.5);
  CHECK(half.recall == 0.5);
  CHECK(half.f1 == 0.5);
  CHECK(half.iou == doctest::Approx(1.0 / 3.0));

  const auto none = token_prf(make_case({{1, 2}}, {}));
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK(none.iou == 0.0);
}

TEST_CASE("match_counts") {
  std::vector<MatchResult> all_exact;
  for (int i = 0; i < 4; ++i) all_exact.push_back(evaluate(make_case({{1, 1}}, {1})));
  const auto d = match_counts(all_exact);
  CHECK(d.count(MatchType::kExact) == 4);
  CHECK(d.total == 4);
  CHECK(d.at_least_one_correct == 1.0);

  std::vector<MatchResult> mixed = {evaluate(make_case({{1, 1}}, {})),
                                    evaluate(make_case({{1, 1}}, {9})),
                                    evaluate(make_case({{1, 2}}, {1}))};
  const auto m = match_counts(mixed);
  CHECK(m.count(MatchType::kEmpty) == 1);
  CHECK(m.count(MatchType::kNoMatch) == 1);
  CHECK(m.count(MatchType::kProximate) == 1);
  CHECK(m.at_least_one_correct == doctest::Approx(1.0 / 3.0));
  CHECK(match_counts({}).total == 0);
}

TEST_CASE("export_no_match worksheet") {
  std::ostringstream empty;
  CHECK(export_no_match({}, empty) == 0);
  CHECK(empty.str() == "note_id,code,gt_evidence,model_evidence,semantic_match\n");

  auto c = make_case({{1, 1}}, {7});
  c.gt_surfaces = {"obesity"};
  c.model_surfaces = {"obese"};
  std::vector<MatchResult> results = {evaluate(c), evaluate(make_case({{1, 1}}, {1}))};
  std::ostringstream out;
  const std::size_t rows = export_no_match(results, out);
  CHECK(rows == 1);
  CHECK(rows == match_counts(results).count(MatchType::kNoMatch));
  CHECK(out.str().find("n,I10,obesity,obese,\n") != std::string::npos);
}

TEST_CASE("map_char_span") {
  const std::vector<CharSpan> spans = {{0, 3}, {4, 7}, {7, 12}, {13, 14}};
  CHECK(*map_char_span(spans, 5, 9) == TokenSpan{1, 2});
  CHECK(*map_char_span(spans, 0, 14) == TokenSpan{0, 3});
  CHECK_FALSE(map_char_span(spans, 12, 13).has_value());
}

TEST_CASE("build_cases joins gold evidence with attribution records") {
  using namespace evidkit::corpus;
  Note n;
  n.note_id = "n1";
  n.category = "Physician";
  n.text = "pt has HTN and obesity";
  EvidenceAnnotation htn{"I10", CodeSystem::kIcd10Cm, "Essential hypertension", 7, 10};
  EvidenceAnnotation obese{"E66.9", CodeSystem::kIcd10Cm, "Obesity", 15, 22};
  EvidenceAnnotation missing{"Z00", CodeSystem::kIcd10Cm, "Other", 0, 2};
  n.annotations = {htn, obese, missing};
  const Corpus corpus(Scheme::kSufficient, {Admission{"1", {n}}});

  auto record = [](std::string code, std::vector<double> scores, double p) {
    AttributionRecord r;
    r.note_id = "n1";
    r.code = std::move(code);
    r.tokens = {"pt", "has", "HTN", "and", "obes", "##ity"};
    r.spans = {{0, 2}, {3, 6}, {7, 10}, {11, 14}, {15, 19}, {19, 22}};
    r.scores = std::move(scores);
    r.probability = p;
    return r;
  };
  const std::vector<AttributionRecord> records = {
      record("I10", {0, 0, 0.9, 0, 0, 0}, 0.8),
      record("E669", {0, 0, 0, 0, 0.9, 0}, 0.3),
      record("J18.9", {0.9, 0, 0, 0, 0, 0}, 0.6)};

  CaseBuildOptions opts;
  opts.thresholds.global = 0.5;
  const auto built = build_cases(corpus, records, opts);
  REQUIRE(built.cases.size() == 2);
  CHECK(built.missing == std::vector<std::string>{"n1/Z00"});
  REQUIRE(built.non_gold.size() == 1);
  CHECK(built.non_gold[0].predicted);
  CHECK_FALSE(built.non_gold[0].gold);

  const auto& obesity = built.cases[0];  // E669 sorts first
  CHECK(obesity.code == "E669");
  CHECK(obesity.gt_spans == std::vector<TokenSpan>{{4, 5}});
  CHECK_FALSE(obesity.predicted);
  CHECK(classify_match(obesity) == MatchType::kProximate);

  const auto& hyp = built.cases[1];
  CHECK(hyp.predicted);
  CHECK(hyp.gt_surfaces == std::vector<std::string>{"HTN"});
  CHECK(classify_match(hyp) == MatchType::kExact);

  opts.post.expand_words = true;
  const auto expanded = build_cases(corpus, records, opts);
  CHECK(classify_match(expanded.cases[0]) == MatchType::kExact);

  const auto calib = calibration_cases(corpus, records);
  REQUIRE(calib.size() == 2);
  CHECK(calib[0].gold == std::vector<std::size_t>{2});
  CHECK(calib[1].gold == std::vector<std::size_t>{4, 5});
}

TEST_CASE("match result JSON lines round trip") {
  SplitMix64 rng(3);
  std::vector<MatchResult> results;
  for (int i = 0; i < 50; ++i) {
    auto c = evidkit::synthkit::random_case(rng);
    c.note_id = "n" + std::to_string(i);
    c.probability = rng.uniform_real();
    c.predicted = c.probability >= 0.5;
    c.gt_surfaces = {"a, \"quoted\""};
    results.push_back(evaluate(c));
  }
  const auto text = serialize_results(results);
  const auto back = parse_results(text);
  REQUIRE(back.size() == results.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].match == results[i].match);
    CHECK(back[i].eval.model_tokens == results[i].eval.model_tokens);
    CHECK(back[i].eval.gt_spans == results[i].eval.gt_spans);
    CHECK(back[i].prf.f1 == results[i].prf.f1);
    CHECK(back[i].eval.gt_surfaces == results[i].eval.gt_surfaces);
  }
  CHECK(serialize_results(back) == text);
  CHECK_THROWS_AS(parse_results("{\"note_id\": 1}"), evidkit::ParseError);
}
