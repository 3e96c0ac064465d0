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

#include "evidkit/textproc.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "evidkit/error.h"
#include "json.hpp"

namespace evidkit::textproc {

// Contents of data/stopwords_en.txt and data/lemma_table.tsv, embedded at
// build time.
extern const char* const kDefaultStopwords;
extern const char* const kDefaultLemmaTable;

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one code point starting at `pos`; returns its byte length.
std::size_t decode_one(std::string_view s, std::size_t pos, char32_t* out) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    *out = b0;
    return 1;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    *out = kReplacement;
    return 1;
  }
  if (pos + len > s.size()) {
    *out = kReplacement;
    return 1;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      *out = kReplacement;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    *out = kReplacement;
    return 1;
  }
  *out = cp;
  return len;
}

bool is_numeric(std::string_view word) {
  return !word.empty() && std::all_of(word.begin(), word.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::unordered_set<std::string> parse_stopwords(std::string_view content) {
  std::unordered_set<std::string> words;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    auto word = trim(line);
    if (word.empty() || word[0] == '#') continue;
    words.insert(fold_case(word));
  }
  return words;
}

std::unordered_map<std::string, std::string> parse_lemma_table(
    std::string_view content, const std::string& origin) {
  std::unordered_map<std::string, std::string> table;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(line_no) +
                            ": expected form<TAB>lemma");
    }
    auto form = trim(std::string_view(line).substr(0, tab));
    auto lemma = trim(std::string_view(line).substr(tab + 1));
    if (form.empty() || lemma.empty()) {
      throw ValidationError(origin + ":" + std::to_string(line_no) +
                            ": empty form or lemma");
    }
    table[fold_case(form)] = fold_case(lemma);
  }
  return table;
}

}  // namespace

CharClass classify(char32_t c) {
  if (c < 0x80) {
    if (c <= 0x20 || c == 0x7F) return CharClass::kSpace;
    if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
        (c >= 'A' && c <= 'Z')) {
      return CharClass::kAlnum;
    }
    return CharClass::kPunct;
  }
  switch (c) {
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000: case 0xFEFF:
      return CharClass::kSpace;
    case 0xAA: case 0xB2: case 0xB3: case 0xB5: case 0xB9: case 0xBA:
    case 0xBC: case 0xBD: case 0xBE:
      return CharClass::kAlnum;
    case 0xD7: case 0xF7:
      return CharClass::kPunct;
    default:
      break;
  }
  if (c < 0xA0) return CharClass::kSpace;  // C1 controls
  if (c >= 0x2000 && c <= 0x200B) return CharClass::kSpace;
  if (c >= 0xA1 && c <= 0xBF) return CharClass::kPunct;
  if (c >= 0x2010 && c <= 0x2027) return CharClass::kPunct;
  if (c >= 0x2030 && c <= 0x205E) return CharClass::kPunct;
  if (c >= 0x3001 && c <= 0x3003) return CharClass::kPunct;
  if (c >= 0xFF01 && c <= 0xFF0F) return CharClass::kPunct;
  return CharClass::kAlnum;
}

Utf8Text::Utf8Text(std::string_view text) : source_(text) {
  code_points_.reserve(text.size());
  byte_offsets_.reserve(text.size() + 1);
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp;
    const std::size_t len = decode_one(text, pos, &cp);
    code_points_.push_back(cp);
    byte_offsets_.push_back(pos);
    pos += len;
  }
  byte_offsets_.push_back(text.size());
}

std::size_t Utf8Text::byte_offset(std::size_t char_offset) const {
  return byte_offsets_.at(char_offset);
}

std::string_view Utf8Text::slice(std::size_t begin, std::size_t end) const {
  const std::size_t b = byte_offset(begin);
  return source_.substr(b, byte_offset(end) - b);
}

std::size_t char_length(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < text.size(); ++n) {
    char32_t cp;
    pos += decode_one(text, pos, &cp);
  }
  return n;
}

std::string char_slice(std::string_view text, std::size_t begin,
                       std::size_t end) {
  return std::string(Utf8Text(text).slice(begin, end));
}

TokenizedDocument tokenize(std::string_view text, std::string note_id) {
  TokenizedDocument doc;
  doc.note_id = std::move(note_id);
  const Utf8Text utf(text);
  doc.source_length = utf.size();

  std::size_t i = 0;
  while (i < utf.size()) {
    const CharClass kind = classify(utf.at(i));
    if (kind == CharClass::kSpace) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (kind == CharClass::kAlnum) {
      while (j < utf.size() && classify(utf.at(j)) == CharClass::kAlnum) ++j;
    }
    Token tok;
    tok.surface = std::string(utf.slice(i, j));
    tok.begin = i;
    tok.end = j;
    tok.index = doc.tokens.size();
    tok.kind = kind;
    doc.tokens.push_back(std::move(tok));
    i = j;
  }
  return doc;
}

TokenSpan align_span(const TokenizedDocument& doc, std::size_t begin,
                     std::size_t end) {
  if (begin >= end || end > doc.source_length) {
    throw AlignmentError("invalid character span [" + std::to_string(begin) +
                         ", " + std::to_string(end) + ") for text of length " +
                         std::to_string(doc.source_length));
  }
  const auto& toks = doc.tokens;
  // First token ending after `begin`.
  auto first = std::partition_point(
      toks.begin(), toks.end(), [&](const Token& t) { return t.end <= begin; });
  // One past the last token starting before `end`.
  auto stop = std::partition_point(
      toks.begin(), toks.end(), [&](const Token& t) { return t.begin < end; });
  if (first == toks.end() || first >= stop) {
    throw AlignmentError("character span [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") overlaps no token");
  }
  return {first->index, (stop - 1)->index};
}

std::size_t word_count(std::string_view text) {
  const auto doc = tokenize(text);
  return static_cast<std::size_t>(
      std::count_if(doc.tokens.begin(), doc.tokens.end(),
                    [](const Token& t) { return !t.is_punct(); }));
}

std::string fold_case(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string fold_and_collapse(std::string_view text) {
  const Utf8Text utf(text);
  std::string out;
  bool pending_space = false;
  for (std::size_t i = 0; i < utf.size(); ++i) {
    if (classify(utf.at(i)) == CharClass::kSpace) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.append(utf.slice(i, i + 1));
  }
  return fold_case(out);
}

NormConfig NormConfig::defaults() {
  static const NormConfig config = [] {
    NormConfig c;
    c.stopwords = parse_stopwords(kDefaultStopwords);
    c.lemma_table = parse_lemma_table(kDefaultLemmaTable, "<builtin>");
    return c;
  }();
  return config;
}

NormConfig NormConfig::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), e.byte);
  }
  if (!j.is_object()) throw ValidationError(path + ": expected a JSON object");

  NormConfig config = defaults();
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return (fp.is_absolute() ? fp : base / fp).string();
  };
  try {
    if (j.contains("stopwords")) {
      config.stopwords = load_stopwords(resolve(j["stopwords"].get<std::string>()));
    }
    if (j.contains("lemma_table")) {
      config.lemma_table =
          load_lemma_table(resolve(j["lemma_table"].get<std::string>()));
    }
    if (j.contains("keep_numbers")) {
      config.keep_numbers = j["keep_numbers"].get<bool>();
    }
    if (j.contains("lowercase")) config.lowercase = j["lowercase"].get<bool>();
  } catch (const nlohmann::json::type_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return config;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  return parse_stopwords(read_file(path));
}

std::unordered_map<std::string, std::string> load_lemma_table(
    const std::string& path) {
  return parse_lemma_table(read_file(path), path);
}

std::string lemmatize(std::string_view word, const NormConfig& config) {
  const std::string key(word);
  if (auto it = config.lemma_table.find(key); it != config.lemma_table.end()) {
    return it->second;
  }
  // Lemma-table values are protected from the suffix rules.
  for (const auto& [form, lemma] : config.lemma_table) {
    if (lemma == key) return key;
  }
  if (word.size() < 4 || !ends_with(word, "s") || is_numeric(word)) {
    return key;
  }
  if (ends_with(word, "ss") || ends_with(word, "us") || ends_with(word, "is") ||
      ends_with(word, "os") || ends_with(word, "as") || ends_with(word, "ys")) {
    return key;
  }
  if (ends_with(word, "ies") && word.size() > 4) {
    return key.substr(0, key.size() - 3) + "y";
  }
  if (ends_with(word, "sses") || ends_with(word, "ches") ||
      ends_with(word, "shes") || ends_with(word, "xes") ||
      ends_with(word, "zes")) {
    return key.substr(0, key.size() - 2);
  }
  return key.substr(0, key.size() - 1);
}

std::vector<std::string> normalize_terms(std::string_view text,
                                         const NormConfig& config) {
  const std::string cased = config.lowercase ? fold_case(text) : std::string(text);
  const auto doc = tokenize(cased);
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& tok : doc.tokens) {
    if (tok.is_punct()) continue;
    if (is_numeric(tok.surface)) {
      if (!config.keep_numbers) continue;
      if (seen.insert(tok.surface).second) out.push_back(tok.surface);
      continue;
    }
    const std::string folded = fold_case(tok.surface);
    if (config.stopwords.contains(folded)) continue;
    std::string lemma = lemmatize(tok.surface, config);
    if (config.stopwords.contains(fold_case(lemma))) continue;
    if (seen.insert(lemma).second) out.push_back(std::move(lemma));
  }
  return out;
}

}  // namespace evidkit::textproc
