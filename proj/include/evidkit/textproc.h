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

// Offset-preserving word tokenizer, char-to-token span alignment and the
// term normalization pipeline (lowercase, stopwords, lemma table, plural
// stripping).
//
// All offsets are Unicode code point offsets into the source text, which
// is carried as UTF-8. For pure ASCII text code point and byte offsets
// coincide.

#ifndef EVIDKIT_TEXTPROC_H_
#define EVIDKIT_TEXTPROC_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace evidkit::textproc {

enum class CharClass { kSpace, kAlnum, kPunct };

CharClass classify(char32_t c);

// Code point view over a UTF-8 string. Invalid bytes decode to U+FFFD, one
// code point per offending byte, so every byte string has a decoding.
class Utf8Text {
 public:
  explicit Utf8Text(std::string_view text);

  std::size_t size() const { return code_points_.size(); }
  char32_t at(std::size_t i) const { return code_points_[i]; }
  std::size_t byte_offset(std::size_t char_offset) const;
  std::string_view slice(std::size_t begin, std::size_t end) const;
  std::string_view source() const { return source_; }

 private:
  std::string_view source_;
  std::vector<char32_t> code_points_;
  std::vector<std::size_t> byte_offsets_;  // size() + 1 entries
};

// Number of code points in `text`.
std::size_t char_length(std::string_view text);

// Substring by code point offsets. Requires begin <= end <= char_length.
std::string char_slice(std::string_view text, std::size_t begin,
                       std::size_t end);

struct Token {
  std::string surface;
  std::size_t begin = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  std::size_t index = 0;
  CharClass kind = CharClass::kAlnum;

  bool is_punct() const { return kind == CharClass::kPunct; }
  friend bool operator==(const Token&, const Token&) = default;
};

struct TokenizedDocument {
  std::string note_id;
  std::vector<Token> tokens;
  std::size_t source_length = 0;
};

// Inclusive range of token indices.
struct TokenSpan {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first + 1; }
  bool contains(std::size_t i) const { return first <= i && i <= last; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
  friend auto operator<=>(const TokenSpan&, const TokenSpan&) = default;
};

// Maximal alphanumeric runs are tokens, every punctuation code point is a
// token of its own, whitespace only separates.
TokenizedDocument tokenize(std::string_view text, std::string note_id = {});

// Minimal span covering every token that overlaps [begin, end).
// Throws AlignmentError when the range is invalid or touches no token.
TokenSpan align_span(const TokenizedDocument& doc, std::size_t begin,
                     std::size_t end);

// Number of non-punctuation tokens.
std::size_t word_count(std::string_view text);

// ASCII lowercase; other code points pass through unchanged.
std::string fold_case(std::string_view text);

// fold_case plus collapsing every whitespace run to one space and trimming.
std::string fold_and_collapse(std::string_view text);

struct NormConfig {
  std::unordered_set<std::string> stopwords;
  // Irregular forms: surface -> lemma. Lemmas are fixed points of the
  // normalizer.
  std::unordered_map<std::string, std::string> lemma_table;
  bool keep_numbers = true;
  bool lowercase = true;

  // Built-in English stopword list and lemma table (identical to the files
  // shipped under data/).
  static NormConfig defaults();

  // JSON object with keys `stopwords` (path), `lemma_table` (path),
  // `keep_numbers`, `lowercase`. Relative paths resolve against the
  // directory of `path`. Missing keys fall back to the defaults.
  static NormConfig load(const std::string& path);
};

// One word per line; blank lines and lines starting with '#' are ignored.
std::unordered_set<std::string> load_stopwords(const std::string& path);

// Tab-separated `form<TAB>lemma` lines; '#' comments allowed.
std::unordered_map<std::string, std::string> load_lemma_table(
    const std::string& path);

// Lemma for one already-cased word: table lookup, then plural stripping.
std::string lemmatize(std::string_view word, const NormConfig& config);

// Normalized content words of `text`, unique, in first-occurrence order.
std::vector<std::string> normalize_terms(std::string_view text,
                                         const NormConfig& config);

}  // namespace evidkit::textproc

#endif  // EVIDKIT_TEXTPROC_H_
