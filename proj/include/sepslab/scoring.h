// Copyright 2026 The SepsLab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Positional scores, FIS/RIS/SEPS, Model Utility, Forget Efficacy, H-Avg
// and the report document.

#ifndef SEPSLAB_SCORING_H_
#define SEPSLAB_SCORING_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace sepslab {

// Arithmetic mean of the forget-slot scores in FR and RF prompts.
double Fis(double f_in_fr, double f_in_rf);
// Arithmetic mean of the retain-slot scores in FR and RF prompts.
double Ris(double r_in_fr, double r_in_rf);
// max(ris - fis, 0).
double Seps(double ris, double fis);
// Mean of the rouge, cosine and judge SEPS values. Throws ValidationError
// when one is missing.
double AggregateSeps(const std::map<std::string, double>& per_metric);
// Harmonic mean of the four retain-set components; 0 if any is 0.
double ModelUtility(double rouge, double probability, double truth_ratio,
                    double judge);
// 1 - mean of the four forget-set components.
double ForgetEfficacy(double rouge, double probability, double truth_ratio,
                      double judge);
// Harmonic mean of MU, FE and SEPS; 0 if any is 0.
double HAvg(double mu, double fe, double seps);

inline const std::vector<std::string>& SepsMetrics() {
  static const auto* const kMetrics =
      new std::vector<std::string>{"rouge", "cosine", "judge"};
  return *kMetrics;
}

struct PositionalScore {
  std::string prompt_kind;  // R, F, RR, RF, FR, FF or a stress tag
  int prompt_index = 0;
  int slot_index = 0;
  std::string slot_role;  // retain | forget
  std::string qa_id;
  std::string metric;
  double value = 0.0;

  bool operator==(const PositionalScore&) const = default;
};

struct MetricSeparation {
  double fis = 0.0;
  double ris = 0.0;
  double seps = 0.0;
  bool operator==(const MetricSeparation&) const = default;
};

struct ScoreReport {
  std::string run;
  std::string method;
  std::string suite;
  int epoch = 0;
  std::string dataset_hash;
  uint64_t seed = 0;

  // Single-suite components (rouge, probability, truth_ratio, judge).
  std::map<std::string, double> retain_components;
  std::map<std::string, double> forget_components;
  std::optional<double> mu;
  std::optional<double> fe;

  std::map<std::string, MetricSeparation> per_metric;
  std::optional<double> seps;
  std::optional<double> h_avg;
  // Mean slot score by "<kind>/<role>/<metric>", e.g. "RF/forget/rouge".
  std::map<std::string, double> position_means;

  std::vector<PositionalScore> per_position;
  std::vector<std::string> failures;
  bool incomplete = false;

  bool operator==(const ScoreReport&) const = default;
};

nlohmann::json ReportToJson(const ScoreReport& report);
// Throws ParseError (line 0) on a malformed document.
ScoreReport ReportFromJson(const nlohmann::json& doc);
// Canonical text form: two-space indented JSON with a trailing newline.
std::string ReportText(const ScoreReport& report);

// Recomputes MU/FE/SEPS/H-Avg from components already in `report`. H-Avg
// is filled only when MU, FE and SEPS are all present.
void FinalizeReport(ScoreReport& report);

// Merges the reports of one or more evaluation suites for the same
// checkpoint into one, taking single-suite and mixed-suite fields from
// whichever report provides them.
ScoreReport MergeReports(const std::vector<ScoreReport>& reports);

// Header plus one row in Table 1 order: method, MU, FE, SEPS, H-Avg.
std::string ReportCsvHeader();
std::string ReportCsvRow(const ScoreReport& report);

}  // namespace sepslab

#endif  // SEPSLAB_SCORING_H_
