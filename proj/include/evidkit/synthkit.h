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

// Deterministic synthetic corpora and attributions with planted ground
// truth, and a brute-force re-implementation of the match taxonomy used to
// cross-check module matching.

#ifndef EVIDKIT_SYNTHKIT_H_
#define EVIDKIT_SYNTHKIT_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "evidkit/attribution.h"
#include "evidkit/corpus.h"
#include "evidkit/matching.h"

namespace evidkit::synthkit {

// SplitMix64 (Steele, Lea & Flood 2014). Outputs are fully specified by the
// algorithm, so streams reproduce across platforms and languages.
class SplitMix64 {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64";

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  // Uniform in [0, n) by rejection; n must be > 0.
  std::uint64_t uniform(std::uint64_t n);
  // Uniform in [lo, hi].
  std::size_t uniform_between(std::size_t lo, std::size_t hi);
  // Uniform in [0, 1) with 53 random bits.
  double uniform_real();
  bool bernoulli(double p) { return uniform_real() < p; }
  // Independent child stream.
  SplitMix64 split() { return SplitMix64(next()); }

 private:
  std::uint64_t state_;
};

struct SynthCode {
  std::string code;
  std::string description;
  // Probability that an annotation gets a fresh evidence surface instead
  // of reusing the code's first one: 0 = single surface, 1 = all distinct.
  double diversity = 1.0;
};

enum class PositionMode { kUniform, kFixed };

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t n_admissions = 10;
  std::size_t notes_per_admission = 2;
  std::size_t annotations_per_note = 3;
  std::size_t filler_words_per_note = 200;
  std::size_t vocab_size = 500;
  std::vector<std::string> categories{"Discharge summary", "Physician"};
  std::vector<SynthCode> codes;  // empty -> built-in defaults
  PositionMode position_mode = PositionMode::kUniform;
  double position = 0.0;        // used by kFixed, in [0, 1)
  double overlap_level = 0.0;   // fraction of description terms in evidence
  std::size_t evidence_min_words = 1;
  std::size_t evidence_max_words = 3;

  // Throws SpecError for inconsistent settings.
  void check() const;

  // Keys mirror the field names; `codes[].diversity` also accepts
  // "single-surface" and "diverse". Unknown keys are rejected.
  static SynthSpec from_json(std::string_view json_text);
  static SynthSpec load(const std::string& path);
  std::string to_json() const;
};

std::vector<SynthCode> default_codes();

struct PlantedAnnotation {
  std::string note_id;
  std::string code;
  std::size_t begin = 0;
  std::size_t end = 0;
  double relative_position = 0.0;
  std::string surface;
  double overlap = 0.0;  // planted description-term fraction
};

struct SynthCorpus {
  corpus::Corpus corpus;
  std::vector<PlantedAnnotation> planted;
  std::map<std::string, std::size_t> unique_surfaces;  // canonical code
};

SynthCorpus generate_corpus(const SynthSpec& spec);

enum class DecoyMode { kIndependent, kDisjoint };

struct AttributionSynthOptions {
  double fidelity = 1.0;
  std::uint64_t seed = 0;
  DecoyMode decoys = DecoyMode::kIndependent;
  bool emit_gradients = false;  // attention + unit-norm gradient rows
  std::size_t gradient_dims = 4;
};

// One record per gold (note, code). Tokens come from textproc::tokenize.
// Scores are fidelity * 1[gold token] + (1 - fidelity) * 1[decoy token],
// with |decoys| = |gold tokens|.
std::vector<attribution::AttributionRecord> generate_attributions(
    const corpus::Corpus& corpus, const AttributionSynthOptions& options);

// Predicates evaluated independently, then resolved by precedence.
struct OracleVerdict {
  bool empty = false;
  bool exact = false;
  bool proximate = false;
  bool partial = false;
  bool no_match = false;
  matching::MatchType resolved = matching::MatchType::kEmpty;
};

// Exhaustive re-check of every category definition over the whole token
// universe. Shares no code with matching::classify_match.
OracleVerdict oracle_verdict(const matching::EvaluationCase& c, std::size_t k);
matching::MatchType oracle_classify(const matching::EvaluationCase& c,
                                    std::size_t k);

// Random evaluation case over a universe of up to `max_universe` tokens with
// 1..max_spans gt spans; the model set is drawn from a mix of strategies
// so every match type occurs.
matching::EvaluationCase random_case(SplitMix64& rng,
                                     std::size_t max_universe = 200,
                                     std::size_t max_spans = 5);

}  // namespace evidkit::synthkit

#endif  // EVIDKIT_SYNTHKIT_H_
