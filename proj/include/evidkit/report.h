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

// JSON and CSV renderings of every analysis result.

#ifndef EVIDKIT_REPORT_H_
#define EVIDKIT_REPORT_H_

#include <string>
#include <vector>

#include "evidkit/analysis.h"
#include "evidkit/attribution.h"
#include "evidkit/compare.h"
#include "evidkit/corpus.h"
#include "evidkit/matching.h"
#include "evidkit/serialize.h"
#include "evidkit/synthkit.h"

namespace evidkit::report {

Json to_json(const corpus::StatsReport& r);
std::string stats_csv(const corpus::StatsReport& r);  // one row per category

Json to_json(const corpus::SubsetReport& r);
std::string subset_csv(const corpus::SubsetReport& r);

Json to_json(const analysis::Histogram& h);
std::string histogram_csv(const analysis::Histogram& h);

Json to_json(const analysis::OverlapReport& r);
std::string overlap_csv(const analysis::OverlapReport& r);

Json to_json(const std::vector<analysis::DiversityRow>& rows);
std::string diversity_csv(const std::vector<analysis::DiversityRow>& rows);

std::string duplicates_csv(const std::vector<analysis::DuplicateGroup>& groups);

Json to_json(const attribution::ThresholdConfig& t);

Json to_json(const matching::MatchDistribution& d);
std::string distribution_csv(const matching::MatchDistribution& d);

Json to_json(const compare::AgreementMatrix& m);
std::string agreement_csv(const compare::AgreementMatrix& m);       // 5x5 grid
std::string agreement_long_csv(const compare::AgreementMatrix& m);  // row,col,count

Json to_json(const compare::ProbabilityByMatch& p);
std::string probability_csv(const compare::ProbabilityByMatch& p);

Json to_json(const compare::LengthReport& r);
std::string length_csv(const compare::LengthReport& r);

Json to_json(const std::vector<compare::RankRow>& rows);
std::string rank_csv(const std::vector<compare::RankRow>& rows);

Json to_json(const compare::CodeConfusion& c);
std::string confusion_csv(const compare::CodeConfusion& c);

Json to_json(const std::vector<synthkit::PlantedAnnotation>& planted);

}  // namespace evidkit::report

#endif  // EVIDKIT_REPORT_H_
