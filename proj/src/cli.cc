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

#include "evidkit/cli.h"

#include <openssl/evp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "evidkit/analysis.h"
#include "evidkit/attribution.h"
#include "evidkit/compare.h"
#include "evidkit/corpus.h"
#include "evidkit/error.h"
#include "evidkit/matching.h"
#include "evidkit/report.h"
#include "evidkit/serialize.h"
#include "evidkit/synthkit.h"
#include "evidkit/textproc.h"

namespace evidkit::cli {

namespace fs = std::filesystem;

namespace {

// Missing or contradictory flags that CLI11 cannot express.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Collects configuration, input hashes and output files for one run and
// writes them as metadata.json.
class RunRecorder {
 public:
  RunRecorder(std::string command, std::string out_dir, std::string format)
      : command_(std::move(command)), out_dir_(std::move(out_dir)),
        format_(std::move(format)) {}

  bool want_json() const { return format_ == "json" || format_ == "both"; }
  bool want_csv() const { return format_ == "csv" || format_ == "both"; }
  const std::string& out_dir() const { return out_dir_; }

  void config(const std::string& key, Json value) { config_[key] = std::move(value); }

  // Hashes an input file; throws ValidationError naming the path if absent.
  void input(const std::string& path) {
    if (path.empty()) return;
    inputs_[path] = sha256_hex(read_file(path));
  }

  void seed(std::uint64_t s) { seed_ = s; }

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(out_dir_);
    const fs::path path = fs::path(out_dir_) / name;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out << content;
    outputs_.push_back(name);
  }

  void write_json(const std::string& name, const Json& j) {
    if (want_json()) write(name, dump_json(j));
  }
  void write_csv(const std::string& name, const std::string& csv) {
    if (want_csv()) write(name, csv);
  }

  void finish() {
    Json meta;
    meta["tool"] = "evidkit";
    meta["version"] = std::string(kVersion);
    meta["command"] = command_;
    meta["config"] = config_;
    meta["config_hash"] = sha256_hex(canonical(config_).dump());
    meta["inputs"] = inputs_;
    meta["outputs"] = outputs_;
    meta["float_format"] = "%.6g";
    if (seed_) {
      meta["seed"] = *seed_;
      meta["prng"] = std::string(synthkit::SplitMix64::kAlgorithm);
    }
    std::sort(outputs_.begin(), outputs_.end());
    meta["outputs"] = outputs_;
    write("metadata.json", dump_json(meta));
  }

 private:
  std::string command_;
  std::string out_dir_;
  std::string format_;
  Json config_ = Json::object();
  Json inputs_ = Json::object();
  std::vector<std::string> outputs_;
  std::optional<std::uint64_t> seed_;
};

struct CommonArgs {
  std::string out_dir = "evidkit_out";
  std::string format = "both";
};

struct CorpusArgs {
  std::string path;
  std::string scheme = "unspecified";
  std::string schema_map;
};

struct ThresholdArgs {
  std::optional<double> tau;
  std::string calib_corpus;
  std::string calib_attr;
  std::size_t grid_size = attribution::kDefaultGridSize;
  bool per_code = false;
};

struct PostArgs {
  bool expand_words = false;
  bool drop_punct = false;
  bool dedupe = false;

  attribution::PostConfig config() const { return {expand_words, drop_punct, dedupe}; }
};

struct MatchArgs {
  std::size_t k = 10;
  std::string distance = "tokens";
  double cutoff = matching::kDefaultCutoff;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--out", a.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--format", a.format, "Report formats: json, csv or both")
      ->check(CLI::IsMember({"json", "csv", "both"}))
      ->capture_default_str();
}

void add_corpus(CLI::App* cmd, CorpusArgs& a, const std::string& flag = "--corpus",
                bool required = true) {
  auto* opt = cmd->add_option(flag, a.path, "Annotated corpus JSON file");
  if (required) opt->required();
  cmd->add_option("--scheme", a.scheme,
                  "Annotation scheme: sufficient|inpatient, complete|profee, unspecified")
      ->capture_default_str();
  cmd->add_option("--schema-map", a.schema_map,
                  "JSON file renaming corpus keys (canonical -> file key)");
}

void add_thresholds(CLI::App* cmd, ThresholdArgs& a) {
  auto* tau = cmd->add_option("--tau", a.tau, "Attribution threshold (score > tau)");
  auto* cc = cmd->add_option("--calib-corpus", a.calib_corpus,
                             "Validation corpus used to calibrate tau");
  auto* ca = cmd->add_option("--calib-attr", a.calib_attr,
                             "Validation attribution JSONL used to calibrate tau");
  tau->excludes(cc)->excludes(ca);
  cc->needs(ca);
  ca->needs(cc);
  cmd->add_option("--grid-size", a.grid_size, "Quantile grid points for calibration")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--per-code", a.per_code, "Calibrate one threshold per code");
}

void add_post(CLI::App* cmd, PostArgs& a) {
  cmd->add_flag("--expand-words", a.expand_words,
                "Expand selected word pieces to whole words");
  cmd->add_flag("--drop-punct", a.drop_punct, "Drop punctuation-only evidence");
  cmd->add_flag("--dedupe", a.dedupe, "Keep only the first of repeated surfaces");
}

void add_match(CLI::App* cmd, MatchArgs& a) {
  cmd->add_option("--k", a.k, "Context window for proximate matches")
      ->capture_default_str();
  cmd->add_option("--distance", a.distance, "Context window unit: tokens or chars")
      ->check(CLI::IsMember({"tokens", "chars"}))
      ->capture_default_str();
  cmd->add_option("--cutoff", a.cutoff, "Probability cutoff for a predicted code")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

corpus::Corpus load_corpus(const CorpusArgs& a, RunRecorder& run,
                           const std::string& key = "corpus") {
  run.input(a.path);
  run.input(a.schema_map);
  run.config(key, a.path);
  run.config(key + "_scheme", a.scheme);
  run.config(key + "_schema_map", a.schema_map);
  const auto mapping =
      a.schema_map.empty() ? corpus::SchemaMapping{} : corpus::SchemaMapping::load(a.schema_map);
  return corpus::load_corpus(a.path, corpus::parse_scheme(a.scheme), mapping);
}

std::vector<attribution::AttributionRecord> load_attr(const std::string& path,
                                                      RunRecorder& run) {
  run.input(path);
  return attribution::load_jsonl(path);
}

struct ResolvedThresholds {
  matching::Thresholds thresholds;
  Json report;
};

ResolvedThresholds resolve_thresholds(const ThresholdArgs& a, RunRecorder& run) {
  ResolvedThresholds out;
  run.config("per_code", a.per_code);
  if (a.tau) {
    if (a.per_code) throw UsageError("--per-code needs calibration inputs, not --tau");
    run.config("tau", *a.tau);
    out.thresholds.global = *a.tau;
    out.report = {{"tau", *a.tau}, {"source", "flag"}};
    return out;
  }
  if (a.calib_corpus.empty()) {
    throw UsageError("either --tau or --calib-corpus/--calib-attr is required");
  }
  run.config("calib_corpus", a.calib_corpus);
  run.config("calib_attr", a.calib_attr);
  run.config("grid_size", a.grid_size);
  CorpusArgs ca;
  ca.path = a.calib_corpus;
  const auto corpus = load_corpus(ca, run, "calib_corpus");
  const auto records = load_attr(a.calib_attr, run);
  const auto cases = matching::calibration_cases(corpus, records);
  if (cases.empty()) throw ValidationError("calibration set has no gold records");
  const auto global =
      attribution::calibrate_threshold(cases, attribution::default_grid(cases, a.grid_size));
  out.thresholds.global = global.tau;
  out.report = report::to_json(global);
  out.report["source"] = "calibration";
  if (a.per_code) {
    for (const auto& [code, t] : attribution::calibrate_per_code(cases, global, a.grid_size)) {
      out.thresholds.per_code[code] = t.tau;
      out.report["per_code"][code] = t.tau;
    }
  }
  return out;
}

// "name=path" or a bare path named after its file stem.
std::pair<std::string, std::string> split_named(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq != std::string::npos && eq > 0) return {spec.substr(0, eq), spec.substr(eq + 1)};
  return {fs::path(spec).stem().string(), spec};
}

std::vector<compare::ResultSet> load_sets(const std::vector<std::string>& specs,
                                          RunRecorder& run) {
  std::vector<compare::ResultSet> sets;
  for (const auto& spec : specs) {
    auto [name, path] = split_named(spec);
    run.input(path);
    sets.push_back({name, matching::load_results(path)});
  }
  return sets;
}

struct MatchOutcome {
  std::vector<matching::MatchResult> results;
  std::vector<matching::MatchResult> non_gold;
  matching::CaseBuildResult build;
};

MatchOutcome run_matching(const corpus::Corpus& corpus,
                          const std::vector<attribution::AttributionRecord>& records,
                          const matching::Thresholds& thresholds, const PostArgs& post,
                          const MatchArgs& m) {
  matching::CaseBuildOptions opts;
  opts.thresholds = thresholds;
  opts.post = post.config();
  opts.cutoff = m.cutoff;
  opts.keep_token_char_spans = m.distance == "chars";
  MatchOutcome out;
  out.build = matching::build_cases(corpus, records, opts);
  const matching::MatchConfig config{
      m.k, m.distance == "chars" ? matching::DistanceUnit::kChars
                                 : matching::DistanceUnit::kTokens};
  for (auto& c : out.build.cases) {
    out.results.push_back(matching::evaluate(std::move(c), config));
  }
  for (auto& c : out.build.non_gold) {
    matching::MatchResult r;
    r.eval = std::move(c);
    r.eval.token_char_spans.clear();
    out.non_gold.push_back(std::move(r));
  }
  for (auto& r : out.results) r.eval.token_char_spans.clear();
  return out;
}

// Writes match outputs under `prefix`; returns the distribution.
matching::MatchDistribution write_match_outputs(const MatchOutcome& outcome,
                                                RunRecorder& run,
                                                const std::string& prefix,
                                                const Json& thresholds) {
  run.write(prefix + "matches.jsonl", matching::serialize_results(outcome.results));
  const auto dist = matching::match_counts(outcome.results);
  run.write_csv(prefix + "distribution.csv", report::distribution_csv(dist));
  std::ostringstream worksheet;
  matching::export_no_match(outcome.results, worksheet);
  run.write(prefix + "no_match_worksheet.csv", worksheet.str());

  std::vector<matching::MatchResult> all = outcome.results;
  all.insert(all.end(), outcome.non_gold.begin(), outcome.non_gold.end());
  Json summary;
  summary["distribution"] = report::to_json(dist);
  summary["thresholds"] = thresholds;
  summary["confusion"] = report::to_json(compare::code_level_confusion(all));
  summary["missing_records"] = outcome.build.missing;
  summary["unaligned_cases"] = outcome.build.unaligned;
  summary["non_gold_records"] = outcome.non_gold.size();
  run.write(prefix + "match_summary.json", dump_json(summary));
  return dist;
}

Json corpus_summary(const corpus::Corpus& c, const std::vector<std::string>& warnings) {
  return {{"admissions", c.admissions().size()},
          {"notes", c.note_count()},
          {"spans", c.annotation_count()},
          {"scheme", std::string(corpus::to_string(c.scheme()))},
          {"warnings", warnings}};
}

compare::LengthSource parse_source(const std::string& s) {
  return s == "model" ? compare::LengthSource::kModelLength
                      : compare::LengthSource::kGtLength;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"evidkit: evidence plausibility and corpus analysis for medical coding",
               "evidkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  CommonArgs common;
  std::function<void()> action;
  std::string command;

  // validate
  CorpusArgs v_corpus;
  auto* validate = app.add_subcommand("validate", "Check a corpus file");
  add_corpus(validate, v_corpus);
  add_common(validate, common);
  validate->callback([&] {
    command = "validate";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      const auto c = load_corpus(v_corpus, run);
      const auto warnings = corpus::validate(c);
      for (const auto& w : warnings) err << "warning: " << w << "\n";
      out << "OK: " << v_corpus.path << ": " << c.admissions().size() << " admissions, "
          << c.note_count() << " notes, " << c.annotation_count() << " spans\n";
      run.write_json("validation.json", corpus_summary(c, warnings));
      run.finish();
    };
  });

  // stats
  CorpusArgs s_corpus;
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  add_corpus(stats, s_corpus);
  add_common(stats, common);
  stats->callback([&] {
    command = "stats";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      const auto r = corpus::corpus_stats(load_corpus(s_corpus, run));
      run.write_json("stats.json", report::to_json(r));
      run.write_csv("stats_by_category.csv", report::stats_csv(r));
      out << dump_json(report::to_json(r));
      run.finish();
    };
  });

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Dataset-level analyses");
  analyze->require_subcommand(1);

  CorpusArgs p_corpus;
  std::optional<std::string> p_category;
  std::size_t p_bins = analysis::kDefaultPositionBins;
  std::string p_anchor = "begin";
  auto* position = analyze->add_subcommand("position", "Relative evidence positions");
  add_corpus(position, p_corpus);
  add_common(position, common);
  position->add_option("--category", p_category, "Only notes of this document type");
  position->add_option("--bins", p_bins, "Histogram bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  position->add_option("--anchor", p_anchor, "Span anchor: begin or midpoint")
      ->check(CLI::IsMember({"begin", "midpoint"}))
      ->capture_default_str();
  position->callback([&] {
    command = "analyze position";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      const auto c = load_corpus(p_corpus, run);
      run.config("category", p_category ? Json(*p_category) : Json(nullptr));
      run.config("bins", p_bins);
      run.config("anchor", p_anchor);
      const auto h = analysis::position_distribution(
          c, p_category, p_bins,
          p_anchor == "midpoint" ? analysis::PositionAnchor::kMidpoint
                                 : analysis::PositionAnchor::kBegin);
      run.write_json("position.json", report::to_json(h));
      run.write_csv("position.csv", report::histogram_csv(h));
      out << "position: " << h.total << " spans in " << p_bins << " bins\n";
      run.finish();
    };
  });

  CorpusArgs o_corpus;
  std::string o_norm;
  auto* overlap = analyze->add_subcommand("overlap", "Evidence vs. code description overlap");
  add_corpus(overlap, o_corpus);
  add_common(overlap, common);
  overlap->add_option("--norm-config", o_norm, "Normalization config JSON");
  overlap->callback([&] {
    command = "analyze overlap";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      const auto c = load_corpus(o_corpus, run);
      run.input(o_norm);
      run.config("norm_config", o_norm);
      const auto norm =
          o_norm.empty() ? textproc::NormConfig::defaults() : textproc::NormConfig::load(o_norm);
      const auto r = analysis::description_overlap(c, norm);
      for (const auto& w : r.warnings) err << "warning: " << w << "\n";
      run.write_json("overlap.json", report::to_json(r));
      run.write_csv("overlap.csv", report::overlap_csv(r));
      out << "overlap: " << r.rows.size() << " codes, " << r.missing_description
          << " spans without description\n";
      run.finish();
    };
  });

  CorpusArgs d_corpus;
  auto* div = analyze->add_subcommand("diversity", "Evidence diversity per code");
  add_corpus(div, d_corpus);
  add_common(div, common);
  div->callback([&] {
    command = "analyze diversity";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      const auto rows = analysis::diversity(load_corpus(d_corpus, run));
      run.write_json("diversity.json", report::to_json(rows));
      run.write_csv("diversity.csv", report::diversity_csv(rows));
      out << "diversity: " << rows.size() << " codes\n";
      run.finish();
    };
  });

  CorpusArgs sub_suff, sub_comp;
  std::string sub_mode = "containment";
  std::string sub_reading = "note-code";
  auto* subset = analyze->add_subcommand("subset", "Sufficient vs. complete annotation subset");
  subset->add_option("--sufficient", sub_suff.path, "Sufficient (Inpatient) corpus")->required();
  subset->add_option("--complete", sub_comp.path, "Complete (Profee) corpus")->required();
  subset->add_option("--schema-map", sub_suff.schema_map, "Schema mapping for both corpora");
  subset->add_option("--mode", sub_mode, "Span comparison: containment or exact")
      ->check(CLI::IsMember({"containment", "exact"}))
      ->capture_default_str();
  subset->add_option("--reading", sub_reading, "Case counting: note-code or code")
      ->check(CLI::IsMember({"note-code", "code"}))
      ->capture_default_str();
  add_common(subset, common);
  subset->callback([&] {
    command = "analyze subset";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      sub_suff.scheme = "sufficient";
      sub_comp.scheme = "complete";
      sub_comp.schema_map = sub_suff.schema_map;
      const auto s = load_corpus(sub_suff, run, "sufficient");
      const auto c = load_corpus(sub_comp, run, "complete");
      run.config("mode", sub_mode);
      run.config("reading", sub_reading);
      const auto r = corpus::common_subset(
          s, c,
          sub_mode == "exact" ? corpus::SubsetMode::kExact : corpus::SubsetMode::kContainment,
          sub_reading == "code" ? corpus::CaseReading::kCodeString
                                : corpus::CaseReading::kNoteCode);
      run.write_json("subset.json", report::to_json(r));
      run.write_csv("subset_detail.csv", report::subset_csv(r));
      out << dump_json(report::to_json(r));
      run.finish();
    };
  });

  // calibrate
  CorpusArgs cal_corpus;
  std::string cal_attr;
  std::size_t cal_grid = attribution::kDefaultGridSize;
  bool cal_per_code = false;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate the attribution threshold");
  add_corpus(calibrate, cal_corpus);
  calibrate->add_option("--attr", cal_attr, "Validation attribution JSONL")->required();
  calibrate->add_option("--grid-size", cal_grid, "Quantile grid points")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  calibrate->add_flag("--per-code", cal_per_code, "Also calibrate one threshold per code");
  add_common(calibrate, common);
  calibrate->callback([&] {
    command = "calibrate";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      ThresholdArgs t;
      t.calib_corpus = cal_corpus.path;
      t.calib_attr = cal_attr;
      t.grid_size = cal_grid;
      t.per_code = cal_per_code;
      run.input(cal_corpus.schema_map);
      const auto resolved = resolve_thresholds(t, run);
      run.write("threshold.json", dump_json(resolved.report));
      out << "tau = " << format_number(resolved.thresholds.global) << "\n";
      run.finish();
    };
  });

  // extract
  std::string ex_attr;
  ThresholdArgs ex_thr;
  PostArgs ex_post;
  auto* extract = app.add_subcommand("extract", "Extract model evidence from attributions");
  extract->add_option("--attr", ex_attr, "Attribution JSONL")->required();
  add_thresholds(extract, ex_thr);
  add_post(extract, ex_post);
  add_common(extract, common);
  extract->callback([&] {
    command = "extract";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      const auto resolved = resolve_thresholds(ex_thr, run);
      const auto records = load_attr(ex_attr, run);
      run.config("attr", ex_attr);
      run.config("post", {{"expand_words", ex_post.expand_words},
                          {"drop_punct", ex_post.drop_punct},
                          {"dedupe", ex_post.dedupe}});
      std::string jsonl;
      std::vector<analysis::CaseEvidence> evidence;
      for (const auto& rec : records) {
        const auto ev = attribution::extract_evidence(
            rec, resolved.thresholds.for_code(rec.code), ex_post.config());
        Json j;
        j["note_id"] = rec.note_id;
        j["code"] = rec.code;
        j["token_ids"] = ev.token_ids;
        j["surfaces"] = ev.surfaces;
        j["spans"] = Json::array();
        for (const auto& s : ev.char_spans) j["spans"].push_back({s.begin, s.end});
        j["probability"] = rec.probability;
        jsonl += dump_json_line(j) + "\n";
        evidence.push_back({rec.note_id, rec.code, ev.surfaces});
      }
      run.write("evidence.jsonl", jsonl);
      run.write("duplicates.csv", report::duplicates_csv(analysis::duplicate_report(evidence)));
      run.write("threshold.json", dump_json(resolved.report));
      out << "extracted evidence for " << records.size() << " records\n";
      run.finish();
    };
  });

  // match
  CorpusArgs m_corpus;
  std::string m_attr;
  ThresholdArgs m_thr;
  PostArgs m_post;
  MatchArgs m_args;
  auto* match = app.add_subcommand("match", "Classify model evidence against gold evidence");
  add_corpus(match, m_corpus);
  match->add_option("--attr", m_attr, "Attribution JSONL")->required();
  add_thresholds(match, m_thr);
  add_post(match, m_post);
  add_match(match, m_args);
  add_common(match, common);
  match->callback([&] {
    command = "match";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      const auto c = load_corpus(m_corpus, run);
      const auto resolved = resolve_thresholds(m_thr, run);
      const auto records = load_attr(m_attr, run);
      run.config("attr", m_attr);
      run.config("k", m_args.k);
      run.config("distance", m_args.distance);
      run.config("cutoff", m_args.cutoff);
      run.config("post", {{"expand_words", m_post.expand_words},
                          {"drop_punct", m_post.drop_punct},
                          {"dedupe", m_post.dedupe}});
      const auto outcome = run_matching(c, records, resolved.thresholds, m_post, m_args);
      const auto dist = write_match_outputs(outcome, run, "", resolved.report);
      out << "matched " << dist.total << " cases";
      for (auto t : matching::kAllMatchTypes) {
        out << ", " << matching::to_string(t) << "=" << dist.count(t);
      }
      out << "\n";
      run.finish();
    };
  });

  // compare
  auto* cmp = app.add_subcommand("compare", "Cross-model comparisons of match results");
  cmp->require_subcommand(1);

  std::string ag_a, ag_b;
  auto* agreement = cmp->add_subcommand("agreement", "5x5 match-type agreement matrix");
  agreement->add_option("--a", ag_a, "Match JSONL of model A (rows)")->required();
  agreement->add_option("--b", ag_b, "Match JSONL of model B (columns)")->required();
  add_common(agreement, common);
  agreement->callback([&] {
    command = "compare agreement";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      run.input(ag_a);
      run.input(ag_b);
      run.config("a", ag_a);
      run.config("b", ag_b);
      const auto m = compare::agreement_matrix(matching::load_results(ag_a),
                                               matching::load_results(ag_b));
      run.write_json("agreement.json", report::to_json(m));
      run.write_csv("agreement.csv", report::agreement_csv(m));
      run.write_csv("agreement_long.csv", report::agreement_long_csv(m));
      out << "shared cases " << m.total << ", agreement " << format_number(m.diagonal_rate)
          << "\n";
      run.finish();
    };
  });

  std::string pr_results;
  auto* probability = cmp->add_subcommand("probability", "Probability per match type");
  probability->add_option("--results", pr_results, "Match JSONL")->required();
  add_common(probability, common);
  probability->callback([&] {
    command = "compare probability";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      run.input(pr_results);
      run.config("results", pr_results);
      const auto results = matching::load_results(pr_results);
      const auto p = compare::probability_by_match(results);
      run.write_json("probability.json", report::to_json(p));
      run.write_csv("probability.csv", report::probability_csv(p));
      const auto conf = compare::code_level_confusion(results);
      run.write_json("confusion.json", report::to_json(conf));
      run.write_csv("confusion.csv", report::confusion_csv(conf));
      out << "cases " << p.total << ", mean probability " << format_number(p.global_mean)
          << ", TP " << conf.tp << "/" << conf.gold << "\n";
      run.finish();
    };
  });

  std::vector<std::string> len_results;
  std::size_t len_bins = 4;
  std::string len_source = "gt";
  std::string len_avg = "micro";
  auto* length = cmp->add_subcommand("length", "Recall by evidence word count");
  length->add_option("--results", len_results, "Match JSONL files (name=path allowed)")
      ->required();
  length->add_option("--bins", len_bins, "Quantile bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  length->add_option("--source", len_source, "Word count source: gt or model")
      ->check(CLI::IsMember({"gt", "model"}))
      ->capture_default_str();
  length->add_option("--averaging", len_avg, "Recall averaging: micro (cases) or macro (codes)")
      ->check(CLI::IsMember({"micro", "macro"}))
      ->capture_default_str();
  add_common(length, common);
  length->callback([&] {
    command = "compare length";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      run.config("results", len_results);
      run.config("bins", len_bins);
      run.config("source", len_source);
      run.config("averaging", len_avg);
      const auto sets = load_sets(len_results, run);
      const auto r = compare::recall_by_length(
          sets, len_bins, parse_source(len_source),
          len_avg == "macro" ? compare::RecallAveraging::kMacroCodes
                             : compare::RecallAveraging::kMicroCases);
      if (r.merged) err << "note: fewer distinct word counts than bins; bins merged\n";
      run.write_json("length.json", report::to_json(r));
      run.write_csv("length.csv", report::length_csv(r));
      out << "length: " << r.rows.size() << " bins\n";
      run.finish();
    };
  });

  std::vector<std::string> rk_results;
  auto* rank = cmp->add_subcommand("rank", "Rank result sets by token-level F1");
  rank->add_option("--results", rk_results, "Match JSONL files (name=path allowed)")
      ->required();
  add_common(rank, common);
  rank->callback([&] {
    command = "compare rank";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      run.config("results", rk_results);
      const auto rows = compare::rank_models(load_sets(rk_results, run));
      run.write_json("rank.json", report::to_json(rows));
      run.write_csv("rank.csv", report::rank_csv(rows));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        out << i + 1 << ". " << rows[i].name << " f1=" << format_number(rows[i].f1) << "\n";
      }
      run.finish();
    };
  });

  // synth
  auto* synth = app.add_subcommand("synth", "Synthetic corpora and attributions");
  synth->require_subcommand(1);

  std::string sc_spec;
  std::optional<std::uint64_t> sc_seed;
  auto* synth_corpus = synth->add_subcommand("corpus", "Generate a synthetic corpus");
  synth_corpus->add_option("--spec", sc_spec, "Synth spec JSON (defaults when omitted)");
  synth_corpus->add_option("--seed", sc_seed, "Seed (overrides the spec's seed)");
  add_common(synth_corpus, common);
  synth_corpus->callback([&] {
    command = "synth corpus";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      run.input(sc_spec);
      auto spec = sc_spec.empty() ? synthkit::SynthSpec{} : synthkit::SynthSpec::load(sc_spec);
      if (sc_seed) spec.seed = *sc_seed;
      if (spec.codes.empty()) spec.codes = synthkit::default_codes();
      run.seed(spec.seed);
      run.config("spec", Json::parse(spec.to_json()));
      const auto g = synthkit::generate_corpus(spec);
      run.write("corpus.json", corpus::serialize_corpus(g.corpus));
      Json planted;
      planted["annotations"] = report::to_json(g.planted);
      planted["unique_surfaces"] = g.unique_surfaces;
      run.write("planted.json", dump_json(planted));
      out << "generated " << g.corpus.note_count() << " notes, "
          << g.corpus.annotation_count() << " spans\n";
      run.finish();
    };
  });

  CorpusArgs sa_corpus;
  double sa_fidelity = 1.0;
  std::uint64_t sa_seed = 0;
  std::string sa_decoys = "independent";
  bool sa_gradients = false;
  auto* synth_attr = synth->add_subcommand("attributions", "Generate synthetic attributions");
  add_corpus(synth_attr, sa_corpus);
  synth_attr->add_option("--fidelity", sa_fidelity, "Share of score mass on gold tokens")
      ->check(CLI::Range(0.0, 1.0))
      ->required();
  synth_attr->add_option("--seed", sa_seed, "Random seed")->required();
  synth_attr->add_option("--decoys", sa_decoys, "Decoy tokens: independent or disjoint")
      ->check(CLI::IsMember({"independent", "disjoint"}))
      ->capture_default_str();
  synth_attr->add_flag("--gradients", sa_gradients,
                       "Emit attention + input gradients instead of scores");
  add_common(synth_attr, common);
  synth_attr->callback([&] {
    command = "synth attributions";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      const auto c = load_corpus(sa_corpus, run);
      run.seed(sa_seed);
      run.config("fidelity", sa_fidelity);
      run.config("decoys", sa_decoys);
      run.config("gradients", sa_gradients);
      synthkit::AttributionSynthOptions opts;
      opts.fidelity = sa_fidelity;
      opts.seed = sa_seed;
      opts.decoys = sa_decoys == "disjoint" ? synthkit::DecoyMode::kDisjoint
                                            : synthkit::DecoyMode::kIndependent;
      opts.emit_gradients = sa_gradients;
      const auto records = synthkit::generate_attributions(c, opts);
      std::string jsonl;
      for (const auto& r : records) jsonl += attribution::serialize_record(r) + "\n";
      run.write("attributions.jsonl", jsonl);
      out << "generated " << records.size() << " attribution records\n";
      run.finish();
    };
  });

  // report
  CorpusArgs rp_corpus;
  std::string rp_complete;
  std::vector<std::string> rp_attr;
  ThresholdArgs rp_thr;
  PostArgs rp_post;
  MatchArgs rp_match;
  std::size_t rp_bins = analysis::kDefaultPositionBins;
  std::size_t rp_len_bins = 4;
  std::string rp_norm;
  auto* rep = app.add_subcommand("report", "Run every analysis and bundle the outputs");
  add_corpus(rep, rp_corpus);
  rep->add_option("--complete", rp_complete,
                  "Complete-scheme corpus for the subset analysis (--corpus is sufficient)");
  rep->add_option("--attr", rp_attr, "Attribution JSONL files (name=path allowed)");
  rep->add_option("--bins", rp_bins, "Position histogram bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  rep->add_option("--length-bins", rp_len_bins, "Quantile bins for recall by length")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  rep->add_option("--norm-config", rp_norm, "Normalization config JSON");
  add_thresholds(rep, rp_thr);
  add_post(rep, rp_post);
  add_match(rep, rp_match);
  add_common(rep, common);
  rep->callback([&] {
    command = "report";
    action = [&] {
      RunRecorder run(command, common.out_dir, common.format);
      const auto c = load_corpus(rp_corpus, run);
      run.config("bins", rp_bins);
      run.config("length_bins", rp_len_bins);
      run.config("attr", rp_attr);
      run.config("k", rp_match.k);
      run.config("distance", rp_match.distance);
      run.config("cutoff", rp_match.cutoff);
      run.config("norm_config", rp_norm);
      run.config("post", {{"expand_words", rp_post.expand_words},
                          {"drop_punct", rp_post.drop_punct},
                          {"dedupe", rp_post.dedupe}});
      run.input(rp_norm);

      const auto stats = corpus::corpus_stats(c);
      run.write_json("corpus/stats.json", report::to_json(stats));
      run.write_csv("corpus/stats_by_category.csv", report::stats_csv(stats));
      const auto hist = analysis::position_distribution(c, std::nullopt, rp_bins);
      run.write_json("analysis/position.json", report::to_json(hist));
      run.write_csv("analysis/position.csv", report::histogram_csv(hist));
      std::set<std::string> categories;
      c.for_each_note([&](const corpus::Admission&, const corpus::Note& n) {
        categories.insert(n.category);
      });
      std::size_t cat_idx = 0;
      Json cat_index = Json::object();
      for (const auto& cat : categories) {
        const auto h = analysis::position_distribution(c, cat, rp_bins);
        const std::string name = "analysis/position_category_" + std::to_string(cat_idx++);
        cat_index[name] = cat;
        run.write_json(name + ".json", report::to_json(h));
        run.write_csv(name + ".csv", report::histogram_csv(h));
      }
      run.write("analysis/position_categories.json", dump_json(cat_index));
      const auto norm =
          rp_norm.empty() ? textproc::NormConfig::defaults() : textproc::NormConfig::load(rp_norm);
      const auto ov = analysis::description_overlap(c, norm);
      run.write_json("analysis/overlap.json", report::to_json(ov));
      run.write_csv("analysis/overlap.csv", report::overlap_csv(ov));
      const auto div_rows = analysis::diversity(c);
      run.write_json("analysis/diversity.json", report::to_json(div_rows));
      run.write_csv("analysis/diversity.csv", report::diversity_csv(div_rows));
      if (!rp_complete.empty()) {
        CorpusArgs ca;
        ca.path = rp_complete;
        ca.scheme = "complete";
        ca.schema_map = rp_corpus.schema_map;
        const auto complete = load_corpus(ca, run, "complete");
        const auto sub = corpus::common_subset(c, complete);
        run.write_json("analysis/subset.json", report::to_json(sub));
        run.write_csv("analysis/subset_detail.csv", report::subset_csv(sub));
      }

      if (!rp_attr.empty()) {
        const auto resolved = resolve_thresholds(rp_thr, run);
        std::vector<compare::ResultSet> sets;
        for (const auto& spec : rp_attr) {
          auto [name, path] = split_named(spec);
          const auto records = load_attr(path, run);
          auto outcome = run_matching(c, records, resolved.thresholds, rp_post, rp_match);
          const std::string prefix = "models/" + name + "/";
          write_match_outputs(outcome, run, prefix, resolved.report);
          const auto p = compare::probability_by_match(outcome.results);
          run.write_json(prefix + "probability.json", report::to_json(p));
          run.write_csv(prefix + "probability.csv", report::probability_csv(p));
          std::vector<matching::MatchResult> all = outcome.results;
          all.insert(all.end(), outcome.non_gold.begin(), outcome.non_gold.end());
          sets.push_back({name, std::move(all)});
        }
        for (auto src : {compare::LengthSource::kGtLength, compare::LengthSource::kModelLength}) {
          const auto r = compare::recall_by_length(sets, rp_len_bins, src);
          const std::string stem = src == compare::LengthSource::kGtLength
                                       ? "compare/length_gt"
                                       : "compare/length_model";
          run.write_json(stem + ".json", report::to_json(r));
          run.write_csv(stem + ".csv", report::length_csv(r));
        }
        if (sets.size() >= 2) {
          const auto rows = compare::rank_models(sets);
          run.write_json("compare/rank.json", report::to_json(rows));
          run.write_csv("compare/rank.csv", report::rank_csv(rows));
          for (std::size_t i = 0; i < sets.size(); ++i) {
            for (std::size_t j = i + 1; j < sets.size(); ++j) {
              std::vector<matching::MatchResult> a, b;
              for (const auto& r : sets[i].results) if (r.eval.gold) a.push_back(r);
              for (const auto& r : sets[j].results) if (r.eval.gold) b.push_back(r);
              const auto m = compare::agreement_matrix(a, b);
              const std::string stem =
                  "compare/agreement_" + sets[i].name + "_vs_" + sets[j].name;
              run.write_json(stem + ".json", report::to_json(m));
              run.write_csv(stem + ".csv", report::agreement_csv(m));
              run.write_csv(stem + "_long.csv", report::agreement_long_csv(m));
            }
          }
        }
      }
      out << "report written to " << common.out_dir << "\n";
      run.finish();
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (action) action();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace evidkit::cli
