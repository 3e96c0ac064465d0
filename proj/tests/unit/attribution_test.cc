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
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "evidkit/attribution.h"
#include "evidkit/error.h"
#include "evidkit/synthkit.h"

using namespace evidkit::attribution;
using evidkit::DimensionError;
using evidkit::ParseError;
using evidkit::ValidationError;
using evidkit::synthkit::SplitMix64;

namespace {

AttributionRecord record_with(std::vector<std::string> tokens,
                              std::vector<CharSpan> spans,
                              std::vector<double> scores) {
  AttributionRecord r;
  r.note_id = "n";
  r.code = "I10";
  r.tokens = std::move(tokens);
  r.spans = std::move(spans);
  r.scores = std::move(scores);
  r.probability = 0.7;
  return r;
}

// Micro F1 recomputed from scratch for the calibration oracle.
double oracle_f1(const std::vector<CalibrationCase>& cases, double tau) {
  double tp = 0, fp = 0, fn = 0;
  for (const auto& c : cases) {
    const std::set<std::size_t> gold(c.gold.begin(), c.gold.end());
    for (std::size_t i = 0; i < c.scores.size(); ++i) {
      const bool selected = c.scores[i] > tau;
      const bool is_gold = gold.count(i) > 0;
      if (selected && is_gold) tp += 1;
      if (selected && !is_gold) fp += 1;
      if (!selected && is_gold) fn += 1;
    }
  }
  return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

std::vector<CalibrationCase> random_cases(SplitMix64& rng) {
  std::vector<CalibrationCase> cases(1 + rng.uniform(6));
  for (auto& c : cases) {
    c.scores.resize(1 + rng.uniform(30));
    for (auto& s : c.scores) s = rng.uniform_real();
    for (std::size_t i = 0; i < c.scores.size(); ++i) {
      if (rng.bernoulli(0.25)) c.gold.push_back(i);
    }
  }
  cases[0].gold.push_back(0);
  return cases;
}

}  // namespace

TEST_CASE("attingrad multiplies attention by gradient row norms") {
  const auto grad = Matrix::from_rows({{3, 4}, {0, 0}, {1, 0}});
  const std::vector<double> attention{0.5, 0.3, 0.2};
  const auto scores = attingrad(attention, grad);
  REQUIRE(scores.size() == 3);
  CHECK(scores[0] == doctest::Approx(2.5));
  CHECK(scores[1] == 0.0);
  CHECK(scores[2] == doctest::Approx(0.2));
}

TEST_CASE("attingrad zero inputs give exact zeros") {
  const auto zero_grad = Matrix::from_rows({{0, 0, 0}, {0, 0, 0}});
  for (double s : attingrad(std::vector<double>{0.4, 0.6}, zero_grad)) CHECK(s == 0.0);
  const auto grad = Matrix::from_rows({{1, 2, 3}, {-4, 5, 6}});
  for (double s : attingrad(std::vector<double>{0.0, 0.0}, grad)) CHECK(s == 0.0);
}

TEST_CASE("attingrad errors") {
  const auto grad = Matrix::from_rows({{1}, {2}});
  CHECK_THROWS_AS(attingrad(std::vector<double>{1.0}, grad), DimensionError);
  CHECK_THROWS_AS(attingrad(std::vector<double>{1.0, -0.1}, grad), ValidationError);
  CHECK_THROWS_AS(Matrix::from_rows({{1, 2}, {3}}), DimensionError);
}

TEST_CASE("attingrad is positively homogeneous in attention") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform(20), d = 1 + rng.uniform(8);
    Matrix grad(n, d);
    std::vector<double> att(n);
    for (std::size_t i = 0; i < n; ++i) {
      att[i] = rng.uniform_real();
      for (auto& g : grad.row(i)) g = 2 * rng.uniform_real() - 1;
    }
    const double c = 4 * rng.uniform_real();
    std::vector<double> scaled(att);
    for (auto& a : scaled) a *= c;
    const auto base = attingrad(att, grad);
    const auto s = attingrad(scaled, grad);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(s[i] == doctest::Approx(c * base[i]).epsilon(1e-12));
    }

    // Same extracted set under threshold c*tau, away from ties.
    const double tau = rng.uniform_real() * 0.5;
    AttributionRecord r;
    for (std::size_t i = 0; i < n; ++i) {
      r.tokens.push_back("t");
      r.spans.push_back({2 * i, 2 * i + 1});
    }
    bool near_tie = false;
    for (double b : base) near_tie = near_tie || std::fabs(b - tau) < 1e-9;
    if (near_tie || c == 0.0) continue;
    CHECK(extract_evidence(r, base, tau).token_ids ==
          extract_evidence(r, s, c * tau).token_ids);
  }
}

TEST_CASE("resolve_scores prefers precomputed scores") {
  auto r = record_with({"a", "b"}, {{0, 1}, {2, 3}}, {0.3, 0.1});
  CHECK(resolve_scores(r) == std::vector<double>{0.3, 0.1});
  r.scores.reset();
  r.attention = {1.0, 0.5};
  r.input_grad = Matrix::from_rows({{0, 2}, {6, 8}});
  CHECK(resolve_scores(r) == std::vector<double>{2.0, 5.0});
  r.input_grad.reset();
  CHECK_THROWS_AS(resolve_scores(r), ValidationError);
}

TEST_CASE("record JSON lines round trip") {
  const std::string line =
      R"({"note_id": 12, "code": "I10", "tokens": ["HT", "##N"], "spans": [[0, 2], [2, 3]],)"
      R"( "attention": [0.5, 0.25], "input_grad": [[1, 0], [0, 2]], "scores": null, "probability": 0.9})";
  const auto r = parse_record(line);
  CHECK(r.note_id == "12");
  CHECK(r.input_grad->rows() == 2);
  CHECK_FALSE(r.scores.has_value());
  CHECK(parse_record(serialize_record(r)) == r);
  CHECK(resolve_scores(r) == std::vector<double>{0.5, 0.5});

  CHECK_THROWS_AS(parse_jsonl(line + "\n{\"note_id\": 1"), ParseError);
  CHECK_THROWS_AS(parse_record(R"({"note_id": "a", "code": "c", "tokens": ["x"], "spans": [[0, 1]],
      "attention": [1], "input_grad": null, "scores": [0.1, 0.2], "probability": 0.5})"),
                  DimensionError);
  CHECK_THROWS_AS(parse_record(R"({"note_id": "a", "code": "c", "tokens": ["x"], "spans": [[0, 1]],
      "attention": [1], "input_grad": null, "scores": [0.1], "probability": 1.5})"),
                  ValidationError);
}

TEST_CASE("calibrate_threshold reference example") {
  const std::vector<CalibrationCase> cases = {{{0.9, 0.1}, {0}, "I10"}};
  CHECK(oracle_f1(cases, 0.05) == doctest::Approx(2.0 / 3.0));
  CHECK(oracle_f1(cases, 0.5) == 1.0);
  const auto t = calibrate_threshold(cases, {0.05, 0.5});
  CHECK(t.tau == 0.5);
  CHECK(t.f1 == 1.0);
}

TEST_CASE("calibrate_threshold single candidate and tie-breaking") {
  CHECK(calibrate_threshold({{{0.2, 0.4}, {0, 1}, ""}}, {0.0}).tau == 0.0);
  // 0.3 and 0.35 select the same tokens; the larger wins.
  CHECK(calibrate_threshold({{{0.9, 0.1}, {0}, ""}}, {0.3, 0.35}).tau == 0.35);
}

TEST_CASE("calibrate_threshold errors") {
  const std::vector<CalibrationCase> cases = {{{0.9, 0.1}, {0}, ""}};
  CHECK_THROWS_AS(calibrate_threshold(cases, {}), ValidationError);
  CHECK_THROWS_AS(calibrate_threshold(cases, {0.5, 0.5}), ValidationError);
  CHECK_THROWS_AS(calibrate_threshold({}, {0.5}), ValidationError);
  CHECK_THROWS_WITH(calibrate_threshold({{{0.9, 0.1}, {}, ""}}, {0.5}),
                    doctest::Contains("threshold undefined"));
  CHECK_THROWS_AS(calibrate_threshold({{{0.9}, {3}, ""}}, {0.5}), ValidationError);
}

TEST_CASE("calibrate_threshold matches a brute-force grid scan") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto cases = random_cases(rng);
    std::vector<double> grid;
    for (int i = 0; i < 100; ++i) grid.push_back(i / 100.0);
    const auto t = calibrate_threshold(cases, grid);

    double best = -1, best_tau = 0;
    for (double tau : grid) {
      const double f = oracle_f1(cases, tau);
      if (f >= best) best = f, best_tau = tau;
    }
    CHECK(t.tau == best_tau);
    CHECK(t.f1 == doctest::Approx(best).epsilon(1e-12));
    for (double tau : grid) CHECK(oracle_f1(cases, t.tau) >= oracle_f1(cases, tau));
  }
}

TEST_CASE("default_grid is strictly increasing and can select every token") {
  SplitMix64 rng(2);
  const auto cases = random_cases(rng);
  const auto grid = default_grid(cases, 200);
  CHECK(std::adjacent_find(grid.begin(), grid.end(), std::greater_equal<>()) == grid.end());
  double min_score = 1e300;
  for (const auto& c : cases)
    for (double s : c.scores) min_score = std::min(min_score, s);
  CHECK(grid.front() < min_score);
  CHECK(grid.size() <= 201);
}

TEST_CASE("calibrate_per_code falls back without gold") {
  const std::vector<CalibrationCase> cases = {{{0.9, 0.1}, {0}, "A"},
                                              {{0.2, 0.8}, {1}, "B"},
                                              {{0.5, 0.6}, {}, "C"}};
  ThresholdConfig fallback;
  fallback.tau = 0.123;
  const auto per_code = calibrate_per_code(cases, fallback, 10);
  CHECK(per_code.at("C").tau == 0.123);
  CHECK(per_code.at("A").f1 == 1.0);
  CHECK(per_code.at("B").f1 == 1.0);
}

TEST_CASE("extract_evidence strict threshold") {
  const auto r = record_with({"a", "b", "c"}, {{0, 1}, {2, 3}, {4, 5}}, {2.5, 0.0, 0.2});
  CHECK(extract_evidence(r, 0.1).token_ids == std::vector<std::size_t>{0, 2});
  CHECK(extract_evidence(r, 2.5).token_ids.empty());
  CHECK(extract_evidence(r, 0.2).token_ids == std::vector<std::size_t>{0});
}

TEST_CASE("extract_evidence expands word pieces") {
  // "took aspirin ." tokenized as took | as | ##pirin | .
  const auto r = record_with({"took", "as", "##pirin", "."},
                             {{0, 4}, {5, 7}, {7, 12}, {12, 13}}, {0, 0, 0.9, 0.8});
  const auto plain = extract_evidence(r, 0.5);
  CHECK(plain.surfaces == std::vector<std::string>{"pirin", "."});

  PostConfig post;
  post.expand_words = true;
  const auto expanded = extract_evidence(r, 0.5, post);
  CHECK(expanded.surfaces == std::vector<std::string>{"aspirin", "."});
  CHECK(expanded.char_spans[0] == CharSpan{5, 12});
  CHECK(expanded.token_ids == std::vector<std::size_t>{1, 2, 3});

  post.drop_punctuation = true;
  const auto no_punct = extract_evidence(r, 0.5, post);
  CHECK(no_punct.surfaces == std::vector<std::string>{"aspirin"});
  CHECK(no_punct.token_ids == std::vector<std::size_t>{1, 2});
}

TEST_CASE("extract_evidence does not merge across word-start markers") {
  const auto r = record_with({"\xC4\xA0" "high", "\xC4\xA0" "fever"}, {{0, 4}, {4, 10}}, {0.9, 0.0});
  PostConfig post;
  post.expand_words = true;
  CHECK(extract_evidence(r, 0.5, post).surfaces == std::vector<std::string>{"high"});
}

TEST_CASE("extract_evidence deduplicates surfaces") {
  const auto r = record_with({"HTN", "and", "htn"}, {{0, 3}, {4, 7}, {8, 11}}, {0.9, 0.9, 0.9});
  PostConfig post;
  post.deduplicate = true;
  const auto ev = extract_evidence(r, 0.5, post);
  CHECK(ev.surfaces == std::vector<std::string>{"HTN", "and"});
  CHECK(ev.token_ids == std::vector<std::size_t>{0, 1});
}

TEST_CASE("extract_evidence is monotone in the threshold") {
  SplitMix64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.uniform(25);
    std::vector<std::string> tokens;
    std::vector<CharSpan> spans;
    std::vector<double> scores;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      tokens.push_back(rng.bernoulli(0.2) ? "," : "w");
      const std::size_t gap = rng.uniform(2);
      spans.push_back({pos + gap, pos + gap + 1});
      pos += gap + 1;
      scores.push_back(rng.uniform_real());
    }
    const auto r = record_with(tokens, spans, scores);
    double t1 = rng.uniform_real(), t2 = rng.uniform_real();
    if (t1 > t2) std::swap(t1, t2);
    PostConfig post;
    post.expand_words = rng.bernoulli(0.5);
    post.drop_punctuation = rng.bernoulli(0.5);
    const auto low = extract_evidence(r, t1, post).token_ids;
    const auto high = extract_evidence(r, t2, post).token_ids;
    CHECK(std::includes(low.begin(), low.end(), high.begin(), high.end()));
  }
}
