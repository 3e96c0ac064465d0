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

// Span-annotated medical coding corpora: parsing, validation, indexing,
// summary statistics and the sufficient-vs-complete subset comparison.

#ifndef EVIDKIT_CORPUS_H_
#define EVIDKIT_CORPUS_H_

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace evidkit::corpus {

enum class CodeSystem { kIcd9, kIcd10Cm, kIcd10Pcs, kOther };

// Sufficient = Inpatient-style annotation, Complete = Profee-style.
enum class Scheme { kSufficient, kComplete, kUnspecified };

CodeSystem parse_code_system(std::string_view s);
std::string_view to_string(CodeSystem system);
Scheme parse_scheme(std::string_view s);
std::string_view to_string(Scheme scheme);

// Dots stripped, ASCII uppercased, surrounding whitespace removed:
// "i10." -> "I10".
std::string canonical_code(std::string_view code);

struct EvidenceAnnotation {
  std::string code;
  CodeSystem code_system = CodeSystem::kOther;
  std::string description;
  std::size_t begin = 0;  // code point offset, inclusive
  std::size_t end = 0;    // exclusive

  friend bool operator==(const EvidenceAnnotation&,
                         const EvidenceAnnotation&) = default;
};

struct Note {
  std::string note_id;
  std::string category;
  std::string text;
  std::vector<EvidenceAnnotation> annotations;
  std::size_t text_length = 0;  // in code points

  // Text covered by annotation `i`.
  std::string covered_text(std::size_t i) const;

  friend bool operator==(const Note& a, const Note& b) {
    return a.note_id == b.note_id && a.category == b.category &&
           a.text == b.text && a.annotations == b.annotations;
  }
};

struct Admission {
  std::string hadm_id;
  std::vector<Note> notes;

  friend bool operator==(const Admission&, const Admission&) = default;
};

struct NoteRef {
  std::size_t admission = 0;
  std::size_t note = 0;
  friend bool operator==(const NoteRef&, const NoteRef&) = default;
};

struct AnnotationRef {
  std::size_t admission = 0;
  std::size_t note = 0;
  std::size_t annotation = 0;
  friend bool operator==(const AnnotationRef&, const AnnotationRef&) = default;
};

// Derived lookup tables. A pure function of the admissions.
struct CorpusIndex {
  std::map<std::string, std::vector<AnnotationRef>> by_code;  // canonical code
  std::map<std::string, NoteRef> by_note_id;
  std::map<std::string, std::vector<NoteRef>> by_category;

  friend bool operator==(const CorpusIndex&, const CorpusIndex&) = default;
};

// Immutable after construction.
class Corpus {
 public:
  Corpus() = default;
  // Validates every invariant and builds the index. Throws ValidationError.
  Corpus(Scheme scheme, std::vector<Admission> admissions);

  Scheme scheme() const { return scheme_; }
  const std::vector<Admission>& admissions() const { return admissions_; }
  const CorpusIndex& index() const { return index_; }

  const Note& note(const NoteRef& ref) const;
  const Note* find_note(std::string_view note_id) const;
  const EvidenceAnnotation& annotation(const AnnotationRef& ref) const;

  std::size_t note_count() const;
  std::size_t annotation_count() const;

  template <typename Fn>
  void for_each_note(Fn&& fn) const {
    for (const auto& adm : admissions_) {
      for (const auto& note : adm.notes) fn(adm, note);
    }
  }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.scheme_ == b.scheme_ && a.admissions_ == b.admissions_;
  }

 private:
  Scheme scheme_ = Scheme::kUnspecified;
  std::vector<Admission> admissions_;
  CorpusIndex index_;
};

CorpusIndex build_index(const std::vector<Admission>& admissions);

// JSON key names used when reading a corpus file. The defaults are the
// canonical schema; a mapping file renames individual keys.
struct SchemaMapping {
  std::string hadm_id = "hadm_id";
  std::string notes = "notes";
  std::string note_id = "note_id";
  std::string category = "category";
  std::string text = "text";
  std::string annotations = "annotations";
  std::string code = "code";
  std::string code_system = "code_system";
  std::string description = "description";
  std::string begin = "begin";
  std::string end = "end";

  // JSON object of canonical-key -> file-key renames.
  static SchemaMapping from_json(std::string_view json_text);
  static SchemaMapping load(const std::string& path);
};

// Accepts a top-level list of admissions or a single admission object.
// Throws ParseError (with byte position) on malformed JSON or wrong value
// types, ValidationError on invariant violations.
Corpus parse_corpus(std::string_view json_text, Scheme scheme,
                    const SchemaMapping& mapping = {});
Corpus load_corpus(const std::string& path, Scheme scheme,
                   const SchemaMapping& mapping = {});

// Canonical-schema JSON (sorted keys). parse_corpus(serialize_corpus(c))
// reproduces c.
std::string serialize_corpus(const Corpus& corpus);

// Non-fatal findings: empty descriptions, whitespace-only evidence,
// repeated identical annotations.
std::vector<std::string> validate(const Corpus& corpus);

struct StatsReport {
  std::size_t admissions = 0;
  std::size_t notes = 0;
  std::size_t total_spans = 0;
  std::map<std::string, std::size_t> spans_per_category;
  std::map<std::string, std::size_t> notes_per_category;
  double labels_per_document = 0.0;   // annotations per note
  double codes_per_admission = 0.0;   // distinct canonical codes
  double mean_evidence_tokens = 0.0;  // tokenizer tokens of covered text
};

StatsReport corpus_stats(const Corpus& corpus);

// Sufficient span is matched by a complete span that contains it
// (kContainment) or equals it (kExact).
enum class SubsetMode { kContainment, kExact };

// How code cases are counted among common notes: one case per
// (note_id, code) pair, or one per distinct code string.
enum class CaseReading { kNoteCode, kCodeString };

struct SubsetDetail {
  std::string note_id;
  std::string code;  // canonical
  bool in_sufficient = false;
  bool in_complete = false;
  bool subset = false;
};

struct SubsetReport {
  std::size_t common_admissions = 0;
  std::size_t unique_note_ids = 0;  // union of note ids in common admissions
  std::size_t common_note_ids = 0;
  std::size_t unique_code_cases = 0;  // present on exactly one side
  std::size_t identical_code_cases = 0;
  std::size_t strict_subset_cases = 0;
  std::vector<SubsetDetail> per_note;  // sorted by (note_id, code)
};

SubsetReport common_subset(const Corpus& sufficient, const Corpus& complete,
                           SubsetMode mode = SubsetMode::kContainment,
                           CaseReading reading = CaseReading::kNoteCode);

}  // namespace evidkit::corpus

#endif  // EVIDKIT_CORPUS_H_
