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

#include "evidkit/synthkit.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "evidkit/error.h"
#include "evidkit/serialize.h"
#include "evidkit/textproc.h"

namespace evidkit::synthkit {

using matching::EvaluationCase;
using matching::MatchType;
using textproc::TokenSpan;

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::uniform(std::uint64_t n) {
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

std::size_t SplitMix64::uniform_between(std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform(hi - lo + 1));
}

double SplitMix64::uniform_real() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::vector<SynthCode> default_codes() {
  return {
      {"I10", "Essential (primary) hypertension", 0.1},
      {"R06.83", "Snoring", 0.0},
      {"E66.9", "Obesity, unspecified", 0.3},
      {"Z87.891", "Personal history of nicotine dependence", 1.0},
      {"I31.3", "Pericardial effusion (noninflammatory)", 0.5},
      {"J18.9", "Pneumonia, unspecified organism", 0.5},
  };
}

void SynthSpec::check() const {
  if (n_admissions == 0) throw SpecError("n_admissions must be >= 1");
  if (notes_per_admission == 0) throw SpecError("notes_per_admission must be >= 1");
  if (filler_words_per_note == 0) throw SpecError("filler_words_per_note must be >= 1");
  if (vocab_size < 2) throw SpecError("vocab_size must be >= 2");
  if (categories.empty()) throw SpecError("categories must not be empty");
  if (evidence_min_words == 0 || evidence_min_words > evidence_max_words) {
    throw SpecError("need 1 <= evidence_min_words <= evidence_max_words");
  }
  if (evidence_max_words > filler_words_per_note) {
    throw SpecError("evidence longer than note: evidence_max_words " +
                    std::to_string(evidence_max_words) + " > filler_words_per_note " +
                    std::to_string(filler_words_per_note));
  }
  if (!(position >= 0.0 && position < 1.0)) {
    throw SpecError("position must lie in [0, 1)");
  }
  if (!(overlap_level >= 0.0 && overlap_level <= 1.0)) {
    throw SpecError("overlap_level must lie in [0, 1]");
  }
  for (const auto& c : codes) {
    if (corpus::canonical_code(c.code).empty()) throw SpecError("empty code");
    if (!(c.diversity >= 0.0 && c.diversity <= 1.0)) {
      throw SpecError("diversity of " + c.code + " must lie in [0, 1]");
    }
  }
}

SynthSpec SynthSpec::from_json(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("synth spec: ") + e.what(), e.byte);
  }
  if (!j.is_object()) throw SpecError("synth spec must be a JSON object");
  SynthSpec s;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") s.seed = v.get<std::uint64_t>();
      else if (key == "n_admissions") s.n_admissions = v.get<std::size_t>();
      else if (key == "notes_per_admission") s.notes_per_admission = v.get<std::size_t>();
      else if (key == "annotations_per_note") s.annotations_per_note = v.get<std::size_t>();
      else if (key == "filler_words_per_note") s.filler_words_per_note = v.get<std::size_t>();
      else if (key == "vocab_size") s.vocab_size = v.get<std::size_t>();
      else if (key == "categories") s.categories = v.get<std::vector<std::string>>();
      else if (key == "position_mode") {
        const auto mode = v.get<std::string>();
        if (mode == "uniform") s.position_mode = PositionMode::kUniform;
        else if (mode == "fixed") s.position_mode = PositionMode::kFixed;
        else throw SpecError("position_mode must be 'uniform' or 'fixed'");
      } else if (key == "position") s.position = v.get<double>();
      else if (key == "overlap_level") s.overlap_level = v.get<double>();
      else if (key == "evidence_min_words") s.evidence_min_words = v.get<std::size_t>();
      else if (key == "evidence_max_words") s.evidence_max_words = v.get<std::size_t>();
      else if (key == "codes") {
        for (const auto& jc : v) {
          SynthCode c;
          c.code = jc.at("code").get<std::string>();
          c.description = jc.value("description", std::string{});
          if (jc.contains("diversity")) {
            const auto& d = jc["diversity"];
            if (d.is_string()) {
              const auto level = d.get<std::string>();
              if (level == "single-surface") c.diversity = 0.0;
              else if (level == "diverse") c.diversity = 1.0;
              else throw SpecError("unknown diversity level: " + level);
            } else {
              c.diversity = d.get<double>();
            }
          }
          s.codes.push_back(std::move(c));
        }
      } else {
        throw SpecError("unknown synth spec key: " + key);
      }
    }
  } catch (const Json::exception& e) {
    throw SpecError(std::string("synth spec: ") + e.what());
  }
  s.check();
  return s;
}

SynthSpec SynthSpec::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string SynthSpec::to_json() const {
  Json j;
  j["seed"] = seed;
  j["n_admissions"] = n_admissions;
  j["notes_per_admission"] = notes_per_admission;
  j["annotations_per_note"] = annotations_per_note;
  j["filler_words_per_note"] = filler_words_per_note;
  j["vocab_size"] = vocab_size;
  j["categories"] = categories;
  j["position_mode"] = position_mode == PositionMode::kUniform ? "uniform" : "fixed";
  j["position"] = position;
  j["overlap_level"] = overlap_level;
  j["evidence_min_words"] = evidence_min_words;
  j["evidence_max_words"] = evidence_max_words;
  j["codes"] = Json::array();
  for (const auto& c : codes) {
    j["codes"].push_back(
        {{"code", c.code}, {"description", c.description}, {"diversity", c.diversity}});
  }
  return dump_json(j);
}

namespace {

// Pronounceable lowercase words that are not stopwords, do not end in 's'
// and avoid `reserved`.
std::vector<std::string> make_vocab(SplitMix64& rng, std::size_t n,
                                    const std::unordered_set<std::string>& reserved) {
  static constexpr std::string_view kConsonants = "bcdfghjklmnpqrtvwxz";
  static constexpr std::string_view kVowels = "aeiou";
  const auto& stop = textproc::NormConfig::defaults().stopwords;
  std::vector<std::string> vocab;
  std::unordered_set<std::string> seen;
  while (vocab.size() < n) {
    std::string w;
    const std::size_t syllables = rng.uniform_between(2, 3);
    for (std::size_t i = 0; i < syllables; ++i) {
      w += kConsonants[rng.uniform(kConsonants.size())];
      w += kVowels[rng.uniform(kVowels.size())];
    }
    if (stop.contains(w) || reserved.contains(w) || !seen.insert(w).second) continue;
    vocab.push_back(std::move(w));
  }
  return vocab;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

SynthCorpus generate_corpus(const SynthSpec& spec_in) {
  SynthSpec spec = spec_in;
  if (spec.codes.empty()) spec.codes = default_codes();
  spec.check();

  SplitMix64 root(spec.seed);
  SplitMix64 vocab_rng = root.split();
  SplitMix64 rng = root.split();

  const auto& norm = textproc::NormConfig::defaults();
  std::vector<std::vector<std::string>> desc_terms;
  std::unordered_set<std::string> reserved;
  for (const auto& c : spec.codes) {
    desc_terms.push_back(textproc::normalize_terms(c.description, norm));
    for (const auto& t : desc_terms.back()) reserved.insert(t);
    for (const auto& tok : textproc::tokenize(textproc::fold_case(c.description)).tokens) {
      reserved.insert(tok.surface);
    }
  }
  const auto vocab = make_vocab(vocab_rng, spec.vocab_size, reserved);
  auto filler = [&](std::size_t n) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n; ++i) words.push_back(vocab[rng.uniform(vocab.size())]);
    return words;
  };

  struct Surface {
    std::string text;
    double overlap;
  };
  auto fresh_surface = [&](std::size_t code_idx) {
    const auto& terms = desc_terms[code_idx];
    const std::size_t words = rng.uniform_between(spec.evidence_min_words,
                                                  spec.evidence_max_words);
    if (spec.overlap_level >= 1.0 || terms.empty()) {
      std::string text = spec.codes[code_idx].description;
      if (terms.empty()) text = join_words(filler(words));
      const double ov = terms.empty() ? 0.0 : 1.0;
      // Diverse surfaces need variation beyond the copied description.
      if (spec.codes[code_idx].diversity > 0.0 && !terms.empty()) {
        auto extra = filler(rng.uniform_between(0, spec.evidence_max_words));
        if (!extra.empty()) text += " " + join_words(extra);
      }
      return Surface{text, ov};
    }
    const auto take = static_cast<std::size_t>(
        std::llround(spec.overlap_level * static_cast<double>(terms.size())));
    std::vector<std::string> parts(terms.begin(), terms.begin() + static_cast<long>(take));
    const std::size_t pad = words > take ? words - take : (take == 0 ? 1 : 0);
    for (auto& w : filler(pad)) parts.push_back(std::move(w));
    return Surface{join_words(parts),
                   static_cast<double>(take) / static_cast<double>(terms.size())};
  };

  std::vector<std::optional<Surface>> first_surface(spec.codes.size());
  SynthCorpus out;
  std::vector<corpus::Admission> admissions;

  for (std::size_t a = 0; a < spec.n_admissions; ++a) {
    corpus::Admission adm;
    adm.hadm_id = "H" + std::to_string(a);
    for (std::size_t n = 0; n < spec.notes_per_admission; ++n) {
      corpus::Note note;
      note.note_id = "N" + std::to_string(a) + "_" + std::to_string(n);
      note.category = spec.categories[(a * spec.notes_per_admission + n) %
                                      spec.categories.size()];
      const auto words = filler(spec.filler_words_per_note);

      struct Insert {
        std::size_t at;
        std::size_t code_idx;
        Surface surface;
      };
      std::vector<Insert> inserts;
      for (std::size_t k = 0; k < spec.annotations_per_note; ++k) {
        const std::size_t code_idx = rng.uniform(spec.codes.size());
        const double target = spec.position_mode == PositionMode::kFixed
                                  ? spec.position
                                  : rng.uniform_real();
        const auto at = static_cast<std::size_t>(
            target * static_cast<double>(spec.filler_words_per_note));
        Surface surface;
        const bool reuse = first_surface[code_idx] &&
                           !rng.bernoulli(spec.codes[code_idx].diversity);
        if (reuse) {
          surface = *first_surface[code_idx];
        } else {
          surface = fresh_surface(code_idx);
          if (!first_surface[code_idx]) first_surface[code_idx] = surface;
        }
        inserts.push_back({at, code_idx, std::move(surface)});
      }
      std::stable_sort(inserts.begin(), inserts.end(),
                       [](const Insert& x, const Insert& y) { return x.at < y.at; });

      // Assemble text; offsets are ASCII so byte == code point.
      std::string text;
      std::vector<std::pair<std::size_t, std::size_t>> offsets;
      std::size_t next_insert = 0;
      auto append = [&](const std::string& piece) {
        if (!text.empty()) text += ' ';
        const std::size_t begin = text.size();
        text += piece;
        return std::make_pair(begin, text.size());
      };
      for (std::size_t w = 0; w <= words.size(); ++w) {
        while (next_insert < inserts.size() && inserts[next_insert].at == w) {
          offsets.push_back(append(inserts[next_insert].surface.text));
          ++next_insert;
        }
        if (w < words.size()) append(words[w]);
      }

      for (std::size_t k = 0; k < inserts.size(); ++k) {
        const auto& ins = inserts[k];
        const auto& code = spec.codes[ins.code_idx];
        note.annotations.push_back({code.code, corpus::CodeSystem::kIcd10Cm,
                                    code.description, offsets[k].first,
                                    offsets[k].second});
        out.planted.push_back({note.note_id, code.code, offsets[k].first,
                               offsets[k].second,
                               static_cast<double>(offsets[k].first) /
                                   static_cast<double>(text.size()),
                               ins.surface.text, ins.surface.overlap});
      }
      note.text = std::move(text);
      adm.notes.push_back(std::move(note));
    }
    admissions.push_back(std::move(adm));
  }

  std::map<std::string, std::set<std::string>> surfaces;
  for (const auto& p : out.planted) {
    surfaces[corpus::canonical_code(p.code)].insert(textproc::fold_and_collapse(p.surface));
  }
  for (const auto& [code, set] : surfaces) out.unique_surfaces[code] = set.size();
  out.corpus = corpus::Corpus(corpus::Scheme::kUnspecified, std::move(admissions));
  return out;
}

std::vector<attribution::AttributionRecord> generate_attributions(
    const corpus::Corpus& corpus, const AttributionSynthOptions& options) {
  if (!(options.fidelity >= 0.0 && options.fidelity <= 1.0)) {
    throw SpecError("fidelity must lie in [0, 1]");
  }
  SplitMix64 rng(options.seed);
  std::vector<attribution::AttributionRecord> out;
  corpus.for_each_note([&](const corpus::Admission&, const corpus::Note& note) {
    const auto doc = textproc::tokenize(note.text, note.note_id);
    std::vector<std::string> tokens;
    std::vector<attribution::CharSpan> spans;
    for (const auto& t : doc.tokens) {
      tokens.push_back(t.surface);
      spans.push_back({t.begin, t.end});
    }
    // canonical code -> (display code, gold token ids)
    std::map<std::string, std::pair<std::string, std::set<std::size_t>>> gold;
    for (const auto& ann : note.annotations) {
      auto& entry = gold[corpus::canonical_code(ann.code)];
      if (entry.first.empty()) entry.first = ann.code;
      if (doc.tokens.empty()) continue;
      try {
        const auto span = textproc::align_span(doc, ann.begin, ann.end);
        for (std::size_t i = span.first; i <= span.last; ++i) entry.second.insert(i);
      } catch (const AlignmentError&) {
        // whitespace-only evidence has no gold tokens
      }
    }
    for (const auto& [key, entry] : gold) {
      const auto& g = entry.second;
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (options.decoys == DecoyMode::kIndependent || !g.contains(i)) {
          pool.push_back(i);
        }
      }
      std::set<std::size_t> decoys;
      for (std::size_t d = 0; d < g.size() && !pool.empty(); ++d) {
        const std::size_t pick = rng.uniform(pool.size());
        decoys.insert(pool[pick]);
        pool.erase(pool.begin() + static_cast<long>(pick));
      }
      std::vector<double> scores(tokens.size(), 0.0);
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        scores[i] = options.fidelity * (g.contains(i) ? 1.0 : 0.0) +
                    (1.0 - options.fidelity) * (decoys.contains(i) ? 1.0 : 0.0);
      }
      attribution::AttributionRecord rec;
      rec.note_id = note.note_id;
      rec.code = entry.first;
      rec.tokens = tokens;
      rec.spans = spans;
      rec.probability = rng.uniform_real();
      if (options.emit_gradients) {
        const std::size_t dims = std::max<std::size_t>(options.gradient_dims, 1);
        attribution::Matrix grad(tokens.size(), dims);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
          auto row = grad.row(i);
          double norm = 0.0;
          for (auto& x : row) {
            x = rng.uniform_real() + 0.5;
            norm += x * x;
          }
          norm = std::sqrt(norm);
          for (auto& x : row) x /= norm;
        }
        rec.attention = scores;
        rec.input_grad = std::move(grad);
      } else {
        rec.scores = std::move(scores);
      }
      out.push_back(std::move(rec));
    }
  });
  return out;
}

OracleVerdict oracle_verdict(const EvaluationCase& c, std::size_t k) {
  if (c.gt_spans.empty()) throw ValidationError("case has no ground truth");
  std::size_t universe = 0;
  for (const auto& s : c.gt_spans) universe = std::max(universe, s.last + 1);
  for (auto m : c.model_tokens) universe = std::max(universe, m + 1);

  auto in_gt = [&](std::size_t t) {
    for (const auto& s : c.gt_spans) {
      if (s.first <= t && t <= s.last) return true;
    }
    return false;
  };
  auto in_model = [&](std::size_t t) {
    for (auto m : c.model_tokens) {
      if (m == t) return true;
    }
    return false;
  };

  OracleVerdict v;
  v.empty = c.model_tokens.empty();

  bool any_shared = false;
  bool sets_equal = true;
  for (std::size_t t = 0; t < universe; ++t) {
    any_shared = any_shared || (in_gt(t) && in_model(t));
    sets_equal = sets_equal && (in_gt(t) == in_model(t));
  }
  v.no_match = !any_shared;
  v.exact = sets_equal;

  bool every_sequence_hit = true;
  for (const auto& s : c.gt_spans) {
    bool hit = false;
    for (std::size_t t = s.first; t <= s.last; ++t) hit = hit || in_model(t);
    every_sequence_hit = every_sequence_hit && hit;
  }
  bool unmatched_in_window = true;
  for (std::size_t t = 0; t < universe; ++t) {
    if (!in_model(t) || in_gt(t)) continue;
    bool near = false;
    for (const auto& s : c.gt_spans) {
      for (std::size_t u = s.first; u <= s.last; ++u) {
        const std::size_t d = t > u ? t - u : u - t;
        near = near || d <= k;
      }
    }
    unmatched_in_window = unmatched_in_window && near;
  }
  v.proximate = every_sequence_hit && unmatched_in_window;
  v.partial = !every_sequence_hit || !unmatched_in_window;

  if (v.empty) v.resolved = MatchType::kEmpty;
  else if (v.no_match) v.resolved = MatchType::kNoMatch;
  else if (v.exact) v.resolved = MatchType::kExact;
  else if (v.proximate) v.resolved = MatchType::kProximate;
  else v.resolved = MatchType::kPartial;
  return v;
}

MatchType oracle_classify(const EvaluationCase& c, std::size_t k) {
  return oracle_verdict(c, k).resolved;
}

EvaluationCase random_case(SplitMix64& rng, std::size_t max_universe,
                           std::size_t max_spans) {
  EvaluationCase c;
  const std::size_t universe = rng.uniform_between(1, std::max<std::size_t>(max_universe, 1));
  const std::size_t n_spans = rng.uniform_between(1, std::max<std::size_t>(max_spans, 1));
  for (std::size_t i = 0; i < n_spans; ++i) {
    const std::size_t first = rng.uniform(universe);
    const std::size_t len = rng.uniform_between(1, std::min<std::size_t>(5, universe - first));
    c.gt_spans.push_back({first, first + len - 1});
  }
  std::set<std::size_t> g;
  for (const auto& s : c.gt_spans) {
    for (std::size_t t = s.first; t <= s.last; ++t) g.insert(t);
  }
  std::set<std::size_t> m;
  auto clip_add = [&](long long t) {
    if (t >= 0 && static_cast<std::size_t>(t) < universe) m.insert(static_cast<std::size_t>(t));
  };
  switch (rng.uniform(6)) {
    case 0:  // nothing selected
      break;
    case 1:  // exact copy
      m = g;
      break;
    case 2:  // each span touched plus nearby extras
      for (const auto& s : c.gt_spans) {
        clip_add(static_cast<long long>(rng.uniform_between(s.first, s.last)));
        const std::size_t extras = rng.uniform(3);
        for (std::size_t e = 0; e < extras; ++e) {
          const long long off = static_cast<long long>(rng.uniform(16)) + 1;
          clip_add(rng.bernoulli(0.5) ? static_cast<long long>(s.last) + off
                                      : static_cast<long long>(s.first) - off);
        }
      }
      break;
    case 3:  // random subset
      for (std::size_t t = 0; t < universe; ++t) {
        if (rng.bernoulli(0.05)) m.insert(t);
      }
      break;
    case 4:  // subset of gold
      for (auto t : g) {
        if (rng.bernoulli(0.5)) m.insert(t);
      }
      break;
    default:  // disjoint from gold where possible
      for (std::size_t e = 0, n = rng.uniform_between(1, 4); e < n; ++e) {
        const std::size_t t = rng.uniform(universe);
        if (!g.contains(t)) m.insert(t);
      }
      break;
  }
  c.model_tokens.assign(m.begin(), m.end());
  c.probability = rng.uniform_real();
  c.predicted = c.probability >= matching::kDefaultCutoff;
  return c;
}

}  // namespace evidkit::synthkit
