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

#include "evidkit/corpus.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <utility>

#include "evidkit/error.h"
#include "evidkit/textproc.h"
#include "json.hpp"

namespace evidkit::corpus {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool iequals(std::string_view a, std::string_view b) {
  return textproc::fold_case(a) == textproc::fold_case(b);
}

// Reads a string-or-integer identifier.
std::string read_id(const json& obj, const std::string& key,
                    const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing key '" + key + "'");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  if (it->is_number_unsigned()) {
    return std::to_string(it->get<unsigned long long>());
  }
  throw ParseError(where + ": '" + key + "' must be a string or integer");
}

std::string read_string(const json& obj, const std::string& key,
                        const std::string& where, bool required) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required) throw ParseError(where + ": missing key '" + key + "'");
    return {};
  }
  if (!it->is_string()) {
    throw ParseError(where + ": '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

long long read_offset(const json& obj, const std::string& key,
                      const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing key '" + key + "'");
  if (!it->is_number_integer()) {
    throw ParseError(where + ": '" + key + "' must be an integer");
  }
  return it->get<long long>();
}

const json& read_array(const json& obj, const std::string& key,
                       const std::string& where) {
  static const json kEmpty = json::array();
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return kEmpty;
  if (!it->is_array()) {
    throw ParseError(where + ": '" + key + "' must be an array");
  }
  return *it;
}

Note parse_note(const json& jn, const SchemaMapping& m,
                const std::string& where) {
  if (!jn.is_object()) throw ParseError(where + ": note must be an object");
  Note note;
  note.note_id = read_id(jn, m.note_id, where);
  const std::string nwhere = "note " + note.note_id;
  note.category = read_string(jn, m.category, nwhere, false);
  note.text = read_string(jn, m.text, nwhere, true);
  const auto& anns = read_array(jn, m.annotations, nwhere);
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const auto& ja = anns[i];
    const std::string awhere = nwhere + " annotation " + std::to_string(i);
    if (!ja.is_object()) throw ParseError(awhere + ": must be an object");
    EvidenceAnnotation ann;
    ann.code = read_id(ja, m.code, awhere);
    ann.code_system =
        parse_code_system(read_string(ja, m.code_system, awhere, false));
    ann.description = read_string(ja, m.description, awhere, false);
    const long long begin = read_offset(ja, m.begin, awhere);
    const long long end = read_offset(ja, m.end, awhere);
    if (begin < 0 || end < 0) {
      throw ValidationError(awhere + ": negative offset");
    }
    ann.begin = static_cast<std::size_t>(begin);
    ann.end = static_cast<std::size_t>(end);
    note.annotations.push_back(std::move(ann));
  }
  return note;
}

Admission parse_admission(const json& ja, const SchemaMapping& m,
                          std::size_t position) {
  const std::string where = "admission " + std::to_string(position);
  if (!ja.is_object()) throw ParseError(where + ": must be an object");
  Admission adm;
  adm.hadm_id = read_id(ja, m.hadm_id, where);
  const auto& notes = read_array(ja, m.notes, where);
  for (std::size_t i = 0; i < notes.size(); ++i) {
    adm.notes.push_back(
        parse_note(notes[i], m, where + " note " + std::to_string(i)));
  }
  return adm;
}

}  // namespace

CodeSystem parse_code_system(std::string_view s) {
  std::string k = canonical_code(s);
  k.erase(std::remove(k.begin(), k.end(), '-'), k.end());
  k.erase(std::remove(k.begin(), k.end(), '_'), k.end());
  if (k == "ICD9" || k == "ICD9CM") return CodeSystem::kIcd9;
  if (k == "ICD10CM" || k == "ICD10") return CodeSystem::kIcd10Cm;
  if (k == "ICD10PCS") return CodeSystem::kIcd10Pcs;
  return CodeSystem::kOther;
}

std::string_view to_string(CodeSystem system) {
  switch (system) {
    case CodeSystem::kIcd9: return "ICD9";
    case CodeSystem::kIcd10Cm: return "ICD10CM";
    case CodeSystem::kIcd10Pcs: return "ICD10PCS";
    case CodeSystem::kOther: return "other";
  }
  return "other";
}

Scheme parse_scheme(std::string_view s) {
  if (iequals(s, "sufficient") || iequals(s, "inpatient")) {
    return Scheme::kSufficient;
  }
  if (iequals(s, "complete") || iequals(s, "profee")) return Scheme::kComplete;
  if (iequals(s, "unspecified") || s.empty()) return Scheme::kUnspecified;
  throw ValidationError("unknown annotation scheme: " + std::string(s));
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kSufficient: return "sufficient";
    case Scheme::kComplete: return "complete";
    case Scheme::kUnspecified: return "unspecified";
  }
  return "unspecified";
}

std::string canonical_code(std::string_view code) {
  std::string out;
  out.reserve(code.size());
  for (char c : code) {
    if (c == '.' || c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
    out.push_back(c >= 'a' && c <= 'z' ? static_cast<char>(c - 'a' + 'A') : c);
  }
  return out;
}

std::string Note::covered_text(std::size_t i) const {
  const auto& ann = annotations.at(i);
  return textproc::char_slice(text, ann.begin, ann.end);
}

Corpus::Corpus(Scheme scheme, std::vector<Admission> admissions)
    : scheme_(scheme), admissions_(std::move(admissions)) {
  std::set<std::string> hadm_ids;
  std::set<std::string> note_ids;
  for (auto& adm : admissions_) {
    if (!hadm_ids.insert(adm.hadm_id).second) {
      throw ValidationError("duplicate hadm_id: " + adm.hadm_id);
    }
    for (auto& note : adm.notes) {
      if (!note_ids.insert(note.note_id).second) {
        throw ValidationError("duplicate note_id: " + note.note_id);
      }
      note.text_length = textproc::char_length(note.text);
      for (std::size_t i = 0; i < note.annotations.size(); ++i) {
        const auto& ann = note.annotations[i];
        const std::string where =
            "note " + note.note_id + " annotation " + std::to_string(i);
        if (ann.begin >= ann.end) {
          throw ValidationError(where + ": begin < end violated (" +
                                std::to_string(ann.begin) + ", " +
                                std::to_string(ann.end) + ")");
        }
        if (ann.end > note.text_length) {
          throw ValidationError(where + ": end " + std::to_string(ann.end) +
                                " exceeds text length " +
                                std::to_string(note.text_length));
        }
        if (canonical_code(ann.code).empty()) {
          throw ValidationError(where + ": empty code");
        }
      }
    }
  }
  index_ = build_index(admissions_);
}

const Note& Corpus::note(const NoteRef& ref) const {
  return admissions_.at(ref.admission).notes.at(ref.note);
}

const Note* Corpus::find_note(std::string_view note_id) const {
  auto it = index_.by_note_id.find(std::string(note_id));
  return it == index_.by_note_id.end() ? nullptr : &note(it->second);
}

const EvidenceAnnotation& Corpus::annotation(const AnnotationRef& ref) const {
  return admissions_.at(ref.admission)
      .notes.at(ref.note)
      .annotations.at(ref.annotation);
}

std::size_t Corpus::note_count() const { return index_.by_note_id.size(); }

std::size_t Corpus::annotation_count() const {
  std::size_t n = 0;
  for (const auto& [code, refs] : index_.by_code) n += refs.size();
  return n;
}

CorpusIndex build_index(const std::vector<Admission>& admissions) {
  CorpusIndex index;
  for (std::size_t a = 0; a < admissions.size(); ++a) {
    const auto& notes = admissions[a].notes;
    for (std::size_t n = 0; n < notes.size(); ++n) {
      index.by_note_id.emplace(notes[n].note_id, NoteRef{a, n});
      index.by_category[notes[n].category].push_back({a, n});
      for (std::size_t i = 0; i < notes[n].annotations.size(); ++i) {
        index.by_code[canonical_code(notes[n].annotations[i].code)].push_back(
            {a, n, i});
      }
    }
  }
  return index;
}

SchemaMapping SchemaMapping::from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("schema mapping: ") + e.what(), e.byte);
  }
  if (!j.is_object()) {
    throw ValidationError("schema mapping must be a JSON object");
  }
  SchemaMapping m;
  const std::pair<const char*, std::string*> fields[] = {
      {"hadm_id", &m.hadm_id},         {"notes", &m.notes},
      {"note_id", &m.note_id},         {"category", &m.category},
      {"text", &m.text},               {"annotations", &m.annotations},
      {"code", &m.code},               {"code_system", &m.code_system},
      {"description", &m.description}, {"begin", &m.begin},
      {"end", &m.end}};
  for (const auto& [key, value] : j.items()) {
    auto it = std::find_if(std::begin(fields), std::end(fields),
                           [&](const auto& f) { return key == f.first; });
    if (it == std::end(fields)) {
      throw ValidationError("schema mapping: unknown key '" + key + "'");
    }
    if (!value.is_string()) {
      throw ValidationError("schema mapping: '" + key + "' must be a string");
    }
    *it->second = value.get<std::string>();
  }
  return m;
}

SchemaMapping SchemaMapping::load(const std::string& path) {
  return from_json(read_file(path));
}

Corpus parse_corpus(std::string_view json_text, Scheme scheme,
                    const SchemaMapping& mapping) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
  }
  std::vector<Admission> admissions;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      admissions.push_back(parse_admission(j[i], mapping, i));
    }
  } else if (j.is_object()) {
    admissions.push_back(parse_admission(j, mapping, 0));
  } else {
    throw ParseError("corpus must be a list of admissions or an admission");
  }
  return Corpus(scheme, std::move(admissions));
}

Corpus load_corpus(const std::string& path, Scheme scheme,
                   const SchemaMapping& mapping) {
  const std::string content = read_file(path);
  try {
    return parse_corpus(content, scheme, mapping);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.byte_position());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string serialize_corpus(const Corpus& corpus) {
  json out = json::array();
  for (const auto& adm : corpus.admissions()) {
    json ja;
    ja["hadm_id"] = adm.hadm_id;
    ja["notes"] = json::array();
    for (const auto& note : adm.notes) {
      json jn;
      jn["note_id"] = note.note_id;
      jn["category"] = note.category;
      jn["text"] = note.text;
      jn["annotations"] = json::array();
      for (const auto& ann : note.annotations) {
        jn["annotations"].push_back({{"code", ann.code},
                                     {"code_system", to_string(ann.code_system)},
                                     {"description", ann.description},
                                     {"begin", ann.begin},
                                     {"end", ann.end}});
      }
      ja["notes"].push_back(std::move(jn));
    }
    out.push_back(std::move(ja));
  }
  return out.dump(1) + "\n";
}

std::vector<std::string> validate(const Corpus& corpus) {
  std::vector<std::string> warnings;
  corpus.for_each_note([&](const Admission&, const Note& note) {
    std::set<std::tuple<std::string, std::size_t, std::size_t>> seen;
    for (std::size_t i = 0; i < note.annotations.size(); ++i) {
      const auto& ann = note.annotations[i];
      const std::string where =
          "note " + note.note_id + " annotation " + std::to_string(i);
      if (ann.description.empty()) {
        warnings.push_back(where + ": empty description");
      }
      if (textproc::tokenize(note.covered_text(i)).tokens.empty()) {
        warnings.push_back(where + ": evidence covers only whitespace");
      }
      if (!seen.emplace(canonical_code(ann.code), ann.begin, ann.end).second) {
        warnings.push_back(where + ": repeats an earlier annotation");
      }
    }
  });
  return warnings;
}

StatsReport corpus_stats(const Corpus& corpus) {
  StatsReport r;
  r.admissions = corpus.admissions().size();
  std::size_t evidence_tokens = 0;
  std::size_t distinct_codes = 0;
  for (const auto& adm : corpus.admissions()) {
    std::set<std::string> codes;
    for (const auto& note : adm.notes) {
      ++r.notes;
      ++r.notes_per_category[note.category];
      r.spans_per_category[note.category] += note.annotations.size();
      r.total_spans += note.annotations.size();
      for (std::size_t i = 0; i < note.annotations.size(); ++i) {
        codes.insert(canonical_code(note.annotations[i].code));
        evidence_tokens += textproc::tokenize(note.covered_text(i)).tokens.size();
      }
    }
    distinct_codes += codes.size();
  }
  if (r.notes > 0) {
    r.labels_per_document =
        static_cast<double>(r.total_spans) / static_cast<double>(r.notes);
  }
  if (r.admissions > 0) {
    r.codes_per_admission =
        static_cast<double>(distinct_codes) / static_cast<double>(r.admissions);
  }
  if (r.total_spans > 0) {
    r.mean_evidence_tokens = static_cast<double>(evidence_tokens) /
                             static_cast<double>(r.total_spans);
  }
  return r;
}

namespace {

struct Span {
  std::size_t begin;
  std::size_t end;
  friend auto operator<=>(const Span&, const Span&) = default;
};

using CodeSpans = std::map<std::string, std::set<Span>>;

// note_id -> canonical code -> union of spans, restricted to `admissions`.
std::map<std::string, CodeSpans> collect(const Corpus& corpus,
                                         const std::set<std::string>& hadm_ids) {
  std::map<std::string, CodeSpans> out;
  for (const auto& adm : corpus.admissions()) {
    if (!hadm_ids.contains(adm.hadm_id)) continue;
    for (const auto& note : adm.notes) {
      auto& codes = out[note.note_id];
      for (const auto& ann : note.annotations) {
        codes[canonical_code(ann.code)].insert({ann.begin, ann.end});
      }
    }
  }
  return out;
}

bool span_matched(const Span& s, const std::set<Span>& candidates,
                  SubsetMode mode) {
  return std::any_of(candidates.begin(), candidates.end(), [&](const Span& c) {
    return mode == SubsetMode::kExact ? c == s
                                      : c.begin <= s.begin && s.end <= c.end;
  });
}

bool all_matched(const std::set<Span>& sufficient,
                 const std::set<Span>& complete, SubsetMode mode) {
  return std::all_of(sufficient.begin(), sufficient.end(),
                     [&](const Span& s) { return span_matched(s, complete, mode); });
}

}  // namespace

SubsetReport common_subset(const Corpus& sufficient, const Corpus& complete,
                           SubsetMode mode, CaseReading reading) {
  SubsetReport report;
  std::set<std::string> suff_ids;
  std::set<std::string> common_ids;
  for (const auto& adm : sufficient.admissions()) suff_ids.insert(adm.hadm_id);
  for (const auto& adm : complete.admissions()) {
    if (suff_ids.contains(adm.hadm_id)) common_ids.insert(adm.hadm_id);
  }
  report.common_admissions = common_ids.size();

  const auto suff = collect(sufficient, common_ids);
  const auto comp = collect(complete, common_ids);
  std::set<std::string> all_notes;
  for (const auto& [id, _] : suff) all_notes.insert(id);
  for (const auto& [id, _] : comp) all_notes.insert(id);
  report.unique_note_ids = all_notes.size();

  // Per-code-string accumulation: code -> note_id -> spans.
  std::map<std::string, std::map<std::string, std::set<Span>>> suff_by_code;
  std::map<std::string, std::map<std::string, std::set<Span>>> comp_by_code;

  for (const auto& note_id : all_notes) {
    auto s_it = suff.find(note_id);
    auto c_it = comp.find(note_id);
    if (s_it == suff.end() || c_it == comp.end()) continue;
    ++report.common_note_ids;
    const CodeSpans& s_codes = s_it->second;
    const CodeSpans& c_codes = c_it->second;
    std::set<std::string> codes;
    for (const auto& [code, spans] : s_codes) {
      codes.insert(code);
      suff_by_code[code][note_id] = spans;
    }
    for (const auto& [code, spans] : c_codes) {
      codes.insert(code);
      comp_by_code[code][note_id] = spans;
    }
    for (const auto& code : codes) {
      SubsetDetail row{note_id, code, s_codes.contains(code),
                       c_codes.contains(code), false};
      if (row.in_sufficient && row.in_complete) {
        row.subset = all_matched(s_codes.at(code), c_codes.at(code), mode);
      }
      report.per_note.push_back(row);
    }
  }

  if (reading == CaseReading::kNoteCode) {
    for (const auto& row : report.per_note) {
      if (row.in_sufficient && row.in_complete) {
        ++report.identical_code_cases;
        if (row.subset) ++report.strict_subset_cases;
      } else {
        ++report.unique_code_cases;
      }
    }
  } else {
    std::set<std::string> codes;
    for (const auto& [code, _] : suff_by_code) codes.insert(code);
    for (const auto& [code, _] : comp_by_code) codes.insert(code);
    for (const auto& code : codes) {
      auto s_it = suff_by_code.find(code);
      auto c_it = comp_by_code.find(code);
      if (s_it == suff_by_code.end() || c_it == comp_by_code.end()) {
        ++report.unique_code_cases;
        continue;
      }
      ++report.identical_code_cases;
      bool subset = true;
      for (const auto& [note_id, spans] : s_it->second) {
        auto n_it = c_it->second.find(note_id);
        if (n_it == c_it->second.end() || !all_matched(spans, n_it->second, mode)) {
          subset = false;
          break;
        }
      }
      if (subset) ++report.strict_subset_cases;
    }
  }
  return report;
}

}  // namespace evidkit::corpus
