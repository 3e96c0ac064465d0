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

#include "evidkit/report.h"

#include <sstream>

namespace evidkit::report {

using matching::kAllMatchTypes;
using matching::to_string;

namespace {

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string source_name(compare::LengthSource s) {
  return s == compare::LengthSource::kGtLength ? "gt_length" : "model_length";
}

}  // namespace

Json to_json(const corpus::StatsReport& r) {
  Json j;
  j["admissions"] = r.admissions;
  j["notes"] = r.notes;
  j["total_spans"] = r.total_spans;
  j["spans_per_category"] = r.spans_per_category;
  j["notes_per_category"] = r.notes_per_category;
  j["labels_per_document"] = r.labels_per_document;
  j["codes_per_admission"] = r.codes_per_admission;
  j["mean_evidence_tokens"] = r.mean_evidence_tokens;
  return j;
}

std::string stats_csv(const corpus::StatsReport& r) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"category", "notes", "spans"});
  for (const auto& [category, spans] : r.spans_per_category) {
    csv.field(category).field(r.notes_per_category.at(category)).field(spans);
    csv.end_row();
  }
  return out.str();
}

Json to_json(const corpus::SubsetReport& r) {
  Json j;
  j["common_admissions"] = r.common_admissions;
  j["unique_note_ids"] = r.unique_note_ids;
  j["common_note_ids"] = r.common_note_ids;
  j["unique_code_cases"] = r.unique_code_cases;
  j["identical_code_cases"] = r.identical_code_cases;
  j["strict_subset_cases"] = r.strict_subset_cases;
  return j;
}

std::string subset_csv(const corpus::SubsetReport& r) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"note_id", "code", "in_sufficient", "in_complete", "subset"});
  for (const auto& row : r.per_note) {
    csv.field(row.note_id)
        .field(row.code)
        .field(row.in_sufficient ? 1 : 0)
        .field(row.in_complete ? 1 : 0)
        .field(row.subset ? 1 : 0);
    csv.end_row();
  }
  return out.str();
}

Json to_json(const analysis::Histogram& h) {
  Json j;
  j["bin_edges"] = h.bin_edges;
  j["counts"] = h.counts;
  j["normalized"] = h.normalized;
  j["total"] = h.total;
  return j;
}

std::string histogram_csv(const analysis::Histogram& h) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"bin_lo", "bin_hi", "count", "normalized"});
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    csv.field(h.bin_edges[i]).field(h.bin_edges[i + 1]).field(h.counts[i]).field(
        h.normalized[i]);
    csv.end_row();
  }
  return out.str();
}

Json to_json(const analysis::OverlapReport& r) {
  Json j;
  j["rows"] = Json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"code", row.code},
                         {"span_count", row.span_count},
                         {"median_overlap", row.median_overlap},
                         {"per_span", row.per_span}});
  }
  j["missing_description"] = r.missing_description;
  j["warnings"] = r.warnings;
  return j;
}

std::string overlap_csv(const analysis::OverlapReport& r) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"code", "span_count", "median_overlap"});
  for (const auto& row : r.rows) {
    csv.field(row.code).field(row.span_count).field(row.median_overlap);
    csv.end_row();
  }
  return out.str();
}

Json to_json(const std::vector<analysis::DiversityRow>& rows) {
  Json j = Json::array();
  for (const auto& row : rows) {
    j.push_back({{"code", row.code},
                 {"total_occurrences", row.total_occurrences},
                 {"unique_strings", row.unique_strings}});
  }
  return j;
}

std::string diversity_csv(const std::vector<analysis::DiversityRow>& rows) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"code", "total_occurrences", "unique_strings"});
  for (const auto& row : rows) {
    csv.field(row.code).field(row.total_occurrences).field(row.unique_strings);
    csv.end_row();
  }
  return out.str();
}

std::string duplicates_csv(const std::vector<analysis::DuplicateGroup>& groups) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"note_id", "code", "surface", "count"});
  for (const auto& g : groups) {
    csv.field(g.note_id).field(g.code).field(g.surface).field(g.count);
    csv.end_row();
  }
  return out.str();
}

Json to_json(const attribution::ThresholdConfig& t) {
  Json j;
  j["tau"] = t.tau;
  j["metric"] = "token_f1";
  j["f1"] = t.f1;
  j["grid_size"] = t.grid.size();
  return j;
}

Json to_json(const matching::MatchDistribution& d) {
  Json j;
  for (auto t : kAllMatchTypes) j["counts"][std::string(to_string(t))] = d.count(t);
  j["total"] = d.total;
  j["at_least_one_correct"] = d.at_least_one_correct;
  return j;
}

std::string distribution_csv(const matching::MatchDistribution& d) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"match", "count", "fraction"});
  for (auto t : kAllMatchTypes) {
    csv.field(to_string(t)).field(d.count(t)).field(
        d.total ? static_cast<double>(d.count(t)) / static_cast<double>(d.total) : 0.0);
    csv.end_row();
  }
  return out.str();
}

Json to_json(const compare::AgreementMatrix& m) {
  Json j;
  j["labels"] = Json::array();
  for (auto t : kAllMatchTypes) j["labels"].push_back(std::string(to_string(t)));
  j["counts"] = Json::array();
  for (const auto& row : m.counts) j["counts"].push_back(row);
  j["total"] = m.total;
  j["diagonal_rate"] = m.diagonal_rate;
  return j;
}

std::string agreement_csv(const compare::AgreementMatrix& m) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.field("a\\b");
  for (auto t : kAllMatchTypes) csv.field(to_string(t));
  csv.end_row();
  for (auto a : kAllMatchTypes) {
    csv.field(to_string(a));
    for (auto b : kAllMatchTypes) csv.field(m.at(a, b));
    csv.end_row();
  }
  return out.str();
}

std::string agreement_long_csv(const compare::AgreementMatrix& m) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"row", "col", "count"});
  for (auto a : kAllMatchTypes) {
    for (auto b : kAllMatchTypes) {
      csv.field(to_string(a)).field(to_string(b)).field(m.at(a, b));
      csv.end_row();
    }
  }
  return out.str();
}

Json to_json(const compare::ProbabilityByMatch& p) {
  Json j;
  for (auto t : kAllMatchTypes) {
    const auto& s = p.of(t);
    j["per_type"][std::string(to_string(t))] = {{"count", s.count},
                                                {"mean", optional_number(s.mean)},
                                                {"std", optional_number(s.stddev)}};
  }
  j["total"] = p.total;
  j["global_mean"] = p.global_mean;
  return j;
}

std::string probability_csv(const compare::ProbabilityByMatch& p) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"match", "count", "mean", "std"});
  for (auto t : kAllMatchTypes) {
    const auto& s = p.of(t);
    csv.field(to_string(t)).field(s.count);
    if (s.mean) {
      csv.field(*s.mean).field(*s.stddev);
    } else {
      csv.field("").field("");
    }
    csv.end_row();
  }
  return out.str();
}

Json to_json(const compare::LengthReport& r) {
  Json j;
  j["requested_bins"] = r.requested_bins;
  j["merged"] = r.merged;
  j["rows"] = Json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"lo", row.lo},
                         {"hi", row.hi},
                         {"recall_mean", optional_number(row.recall_mean)},
                         {"recall_std", row.recall_std},
                         {"models", row.models},
                         {"cases", row.cases},
                         {"source", source_name(row.source)}});
  }
  return j;
}

std::string length_csv(const compare::LengthReport& r) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"lo", "hi", "recall_mean", "recall_std", "models", "cases", "source"});
  for (const auto& row : r.rows) {
    csv.field(row.lo).field(row.hi);
    if (row.recall_mean) {
      csv.field(*row.recall_mean);
    } else {
      csv.field("");
    }
    csv.field(row.recall_std).field(row.models).field(row.cases).field(
        source_name(row.source));
    csv.end_row();
  }
  return out.str();
}

Json to_json(const std::vector<compare::RankRow>& rows) {
  Json j = Json::array();
  for (const auto& r : rows) {
    j.push_back({{"name", r.name},
                 {"tp", r.tp},
                 {"fp", r.fp},
                 {"fn", r.fn},
                 {"precision", r.precision},
                 {"recall", r.recall},
                 {"f1", r.f1}});
  }
  return j;
}

std::string rank_csv(const std::vector<compare::RankRow>& rows) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"rank", "name", "tp", "fp", "fn", "precision", "recall", "f1"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    csv.field(i + 1).field(r.name).field(r.tp).field(r.fp).field(r.fn).field(
        r.precision).field(r.recall).field(r.f1);
    csv.end_row();
  }
  return out.str();
}

Json to_json(const compare::CodeConfusion& c) {
  return {{"tp", c.tp}, {"fn", c.fn}, {"fp", c.fp}, {"gold", c.gold}};
}

std::string confusion_csv(const compare::CodeConfusion& c) {
  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"tp", "fn", "fp", "gold"});
  csv.field(c.tp).field(c.fn).field(c.fp).field(c.gold);
  csv.end_row();
  return out.str();
}

Json to_json(const std::vector<synthkit::PlantedAnnotation>& planted) {
  Json j = Json::array();
  for (const auto& p : planted) {
    j.push_back({{"note_id", p.note_id},
                 {"code", p.code},
                 {"begin", p.begin},
                 {"end", p.end},
                 {"relative_position", p.relative_position},
                 {"surface", p.surface},
                 {"overlap", p.overlap}});
  }
  return j;
}

}  // namespace evidkit::report
