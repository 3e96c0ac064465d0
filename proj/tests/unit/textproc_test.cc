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

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "evidkit/error.h"
#include "evidkit/synthkit.h"
#include "evidkit/textproc.h"

using namespace evidkit::textproc;
using evidkit::AlignmentError;

namespace {

std::vector<std::string> surfaces(const TokenizedDocument& doc) {
  std::vector<std::string> out;
  for (const auto& t : doc.tokens) out.push_back(t.surface);
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// Random text over an alphabet mixing letters, digits, punctuation,
// whitespace and a few multi-byte code points.
std::string random_text(evidkit::synthkit::SplitMix64& rng, std::size_t n) {
  static const std::vector<std::string> kPieces = {
      "a", "b", "Z", "7", "0", ".", ",", "(", ")", "-", " ", " ", "\t", "\n",
      "\xc3\xa9",       // e-acute
      "\xe2\x80\x94",   // em dash, punctuation
      "\xc2\xa0",       // no-break space
      "\xff"};          // invalid byte
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += kPieces[rng.uniform(kPieces.size())];
  return out;
}

}  // namespace

TEST_CASE("tokenize splits punctuation and keeps offsets") {
  auto doc = tokenize("C. difficile");
  REQUIRE(doc.tokens.size() == 3);
  CHECK(surfaces(doc) == std::vector<std::string>{"C", ".", "difficile"});
  CHECK(doc.tokens[0].begin == 0);
  CHECK(doc.tokens[0].end == 1);
  CHECK(doc.tokens[1].begin == 1);
  CHECK(doc.tokens[1].end == 2);
  CHECK(doc.tokens[2].begin == 3);
  CHECK(doc.tokens[2].end == 12);
  CHECK(doc.tokens[1].is_punct());
}

TEST_CASE("tokenize empty text") {
  auto doc = tokenize("");
  CHECK(doc.tokens.empty());
  CHECK(doc.source_length == 0);
}

TEST_CASE("tokenize collapses whitespace runs") {
  auto doc = tokenize("HTN,  stable");
  CHECK(surfaces(doc) == std::vector<std::string>{"HTN", ",", "stable"});
  CHECK(doc.tokens[0].begin == 0);
  CHECK(doc.tokens[0].end == 3);
  CHECK(doc.tokens[1].begin == 3);
  CHECK(doc.tokens[1].end == 4);
  CHECK(doc.tokens[2].begin == 6);
  CHECK(doc.tokens[2].end == 12);
}

TEST_CASE("offsets count code points, not bytes") {
  auto doc = tokenize("caf\xc3\xa9 ok");
  REQUIRE(doc.tokens.size() == 2);
  CHECK(doc.tokens[0].surface == "caf\xc3\xa9");
  CHECK(doc.tokens[0].end == 4);
  CHECK(doc.tokens[1].begin == 5);
  CHECK(doc.source_length == 7);
  CHECK(char_slice("caf\xc3\xa9 ok", 3, 4) == "\xc3\xa9");
}

TEST_CASE("tokenize invariants hold on random text") {
  evidkit::synthkit::SplitMix64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::string text = random_text(rng, rng.uniform(60));
    const auto doc = tokenize(text);
    const Utf8Text u(text);
    CHECK(doc.source_length == u.size());

    // Strictly ordered, non-overlapping, indices sequential, gaps are
    // whitespace only, surfaces reproduce the source.
    std::size_t cursor = 0;
    std::string rebuilt;
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      const auto& t = doc.tokens[i];
      REQUIRE(t.index == i);
      REQUIRE(t.begin < t.end);
      REQUIRE(t.begin >= cursor);
      for (std::size_t g = cursor; g < t.begin; ++g) {
        REQUIRE(classify(u.at(g)) == CharClass::kSpace);
      }
      rebuilt += std::string(u.slice(cursor, t.begin));
      rebuilt += t.surface;
      CHECK(t.surface == std::string(u.slice(t.begin, t.end)));
      cursor = t.end;
    }
    rebuilt += std::string(u.slice(cursor, u.size()));
    CHECK(rebuilt == text);
    CHECK(tokenize(text).tokens == doc.tokens);  // deterministic
  }
}

TEST_CASE("align_span exact and mid-word overlap") {
  auto doc = tokenize("severe hypertension");
  CHECK(align_span(doc, 7, 19) == TokenSpan{1, 1});
  CHECK(align_span(doc, 9, 12) == TokenSpan{1, 1});
  CHECK(align_span(doc, 0, 19) == TokenSpan{0, 1});
  CHECK(align_span(doc, 5, 8) == TokenSpan{0, 1});
}

TEST_CASE("align_span rejects whitespace-only and invalid ranges") {
  auto doc = tokenize("severe hypertension");
  CHECK_THROWS_AS(align_span(doc, 6, 7), AlignmentError);
  CHECK_THROWS_AS(align_span(doc, 5, 5), AlignmentError);
  CHECK_THROWS_AS(align_span(doc, 3, 40), AlignmentError);
}

TEST_CASE("align_span of every token is that token") {
  evidkit::synthkit::SplitMix64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto doc = tokenize(random_text(rng, rng.uniform(80)));
    for (const auto& t : doc.tokens) {
      REQUIRE(align_span(doc, t.begin, t.end) == TokenSpan{t.index, t.index});
    }
  }
}

TEST_CASE("align_span matches a brute-force overlap scan") {
  evidkit::synthkit::SplitMix64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const auto doc = tokenize(random_text(rng, 1 + rng.uniform(50)));
    if (doc.source_length == 0) continue;
    const std::size_t b = rng.uniform(doc.source_length);
    const std::size_t e = rng.uniform_between(b + 1, doc.source_length);
    std::vector<std::size_t> hit;
    for (const auto& t : doc.tokens) {
      if (t.begin < e && t.end > b) hit.push_back(t.index);
    }
    if (hit.empty()) {
      CHECK_THROWS_AS(align_span(doc, b, e), AlignmentError);
    } else {
      CHECK(align_span(doc, b, e) == TokenSpan{hit.front(), hit.back()});
    }
  }
}

TEST_CASE("normalize_terms reproduces the reference cleaning examples") {
  const auto cfg = NormConfig::defaults();
  CHECK(normalize_terms("Shigellosis due to Shigella flexneri", cfg) ==
        std::vector<std::string>{"shigellosis", "shigella", "flexneri"});
  CHECK(normalize_terms("Amebiasis, unspecified", cfg) ==
        std::vector<std::string>{"amebiasis", "unspecified"});
  CHECK(normalize_terms("snoring", cfg) == std::vector<std::string>{"snore"});
}

TEST_CASE("normalize_terms keeps numbers and drops stopwords") {
  const auto cfg = NormConfig::defaults();
  CHECK(normalize_terms("type 2 diabetes without complication", cfg) ==
        std::vector<std::string>{"type", "2", "diabetes", "complication"});
  CHECK(normalize_terms("all except one", cfg).empty());
  CHECK(cfg.stopwords.count("without") == 1);
  CHECK(cfg.stopwords.count("except") == 1);

  auto no_numbers = cfg;
  no_numbers.keep_numbers = false;
  CHECK(normalize_terms("stage 3 kidney disease", no_numbers) ==
        std::vector<std::string>{"stage", "kidney", "disease"});
}

TEST_CASE("normalize_terms returns unique words in first-occurrence order") {
  const auto cfg = NormConfig::defaults();
  CHECK(normalize_terms("Effusions, pericardial effusion", cfg) ==
        std::vector<std::string>{"effusion", "pericardial"});
}

TEST_CASE("lemmatize plural rules") {
  const auto cfg = NormConfig::defaults();
  CHECK(lemmatize("allergies", cfg) == "allergy");
  CHECK(lemmatize("boxes", cfg) == "box");
  CHECK(lemmatize("cases", cfg) == "case");
  CHECK(lemmatize("abscess", cfg) == "abscess");
  CHECK(lemmatize("stenosis", cfg) == "stenosis");
  CHECK(lemmatize("mellitus", cfg) == "mellitus");
  CHECK(lemmatize("diabetes", cfg) == "diabetes");
  CHECK(lemmatize("gas", cfg) == "gas");
}

TEST_CASE("case folding can be disabled") {
  auto cfg = NormConfig::defaults();
  cfg.lowercase = false;
  CHECK(normalize_terms("Atrial fibrillation", cfg) ==
        std::vector<std::string>{"Atrial", "fibrillation"});
}

TEST_CASE("normalize_terms is idempotent") {
  const auto cfg = NormConfig::defaults();
  const std::vector<std::string> words = {
      "snoring", "Hypertension", "kidneys", "the", "without", "ones", "10s",
      "boxes",   "glasses",      "diabetes", "abscesses", "pains", "2",
      "cases",   "allergies",    "Shigella", "smoking", "former", "history"};
  evidkit::synthkit::SplitMix64 rng(23);
  for (int trial = 0; trial < 400; ++trial) {
    std::string text;
    const std::size_t n = rng.uniform(8);
    for (std::size_t i = 0; i < n; ++i) {
      text += words[rng.uniform(words.size())];
      text += rng.bernoulli(0.2) ? ", " : " ";
    }
    const auto once = normalize_terms(text, cfg);
    CHECK(normalize_terms(join(once), cfg) == once);
  }
}

TEST_CASE("shipped data files match the built-in defaults") {
  const std::string dir = EVIDKIT_DATA_DIR;
  const auto cfg = NormConfig::defaults();
  CHECK(load_stopwords(dir + "/stopwords_en.txt") == cfg.stopwords);
  CHECK(load_lemma_table(dir + "/lemma_table.tsv") == cfg.lemma_table);
}

TEST_CASE("NormConfig::load resolves paths relative to the config file") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(EVIDKIT_TEST_TMP) / "normcfg";
  fs::create_directories(dir);
  {
    std::ofstream(dir / "stop.txt") << "# tiny list\nof\nthe\n";
    std::ofstream(dir / "lemmas.tsv") << "mice\tmouse\n";
    std::ofstream(dir / "norm.json")
        << R"({"stopwords": "stop.txt", "lemma_table": "lemmas.tsv", "keep_numbers": false})";
  }
  const auto cfg = NormConfig::load((dir / "norm.json").string());
  CHECK(cfg.stopwords.size() == 2);
  CHECK_FALSE(cfg.keep_numbers);
  CHECK(normalize_terms("the mice of 3 cages", cfg) ==
        std::vector<std::string>{"mouse", "cage"});
}

TEST_CASE("fold_and_collapse") {
  CHECK(fold_and_collapse("  HTN \n  stable ") == "htn stable");
  CHECK(word_count("HTN, stable.") == 2);
}
