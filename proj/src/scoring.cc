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

#include "sepslab/scoring.h"

#include <algorithm>
#include <cstdio>

#include "sepslab/errors.h"

namespace sepslab {
namespace {

using nlohmann::json;

void RequireUnit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError(std::string(name) + " must lie in [0, 1], got " +
                          std::to_string(v));
  }
}

double HarmonicMean(std::initializer_list<double> values) {
  double inv = 0.0;
  for (double v : values) {
    if (v <= 0.0) return 0.0;
    inv += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inv;
}

json Optional(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> OptionalFrom(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return doc.at(key).get<double>();
}

std::string Fixed4(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

}  // namespace

double Fis(double f_in_fr, double f_in_rf) {
  RequireUnit(f_in_fr, "forget score in FR");
  RequireUnit(f_in_rf, "forget score in RF");
  return (f_in_fr + f_in_rf) / 2.0;
}

double Ris(double r_in_fr, double r_in_rf) {
  RequireUnit(r_in_fr, "retain score in FR");
  RequireUnit(r_in_rf, "retain score in RF");
  return (r_in_fr + r_in_rf) / 2.0;
}

double Seps(double ris, double fis) {
  RequireUnit(ris, "RIS");
  RequireUnit(fis, "FIS");
  return std::max(ris - fis, 0.0);
}

double AggregateSeps(const std::map<std::string, double>& per_metric) {
  double sum = 0.0;
  for (const auto& m : SepsMetrics()) {
    const auto it = per_metric.find(m);
    if (it == per_metric.end()) {
      throw ValidationError("SEPS aggregate is missing metric '" + m + "'");
    }
    sum += it->second;
  }
  return sum / static_cast<double>(SepsMetrics().size());
}

double ModelUtility(double rouge, double probability, double truth_ratio,
                    double judge) {
  return HarmonicMean({rouge, probability, truth_ratio, judge});
}

double ForgetEfficacy(double rouge, double probability, double truth_ratio,
                      double judge) {
  return 1.0 - (rouge + probability + truth_ratio + judge) / 4.0;
}

double HAvg(double mu, double fe, double seps) {
  return HarmonicMean({mu, fe, seps});
}

json ReportToJson(const ScoreReport& r) {
  json per_metric = json::object();
  for (const auto& [m, s] : r.per_metric) {
    per_metric[m] = {{"fis", s.fis}, {"ris", s.ris}, {"seps", s.seps}};
  }
  json positions = json::array();
  for (const auto& p : r.per_position) {
    positions.push_back({{"prompt_kind", p.prompt_kind},
                         {"prompt_index", p.prompt_index},
                         {"slot_index", p.slot_index},
                         {"slot_role", p.slot_role},
                         {"qa_id", p.qa_id},
                         {"metric", p.metric},
                         {"value", p.value}});
  }
  return {{"run", r.run},
          {"method", r.method},
          {"suite", r.suite},
          {"epoch", r.epoch},
          {"dataset_hash", r.dataset_hash},
          {"seed", r.seed},
          {"mu", Optional(r.mu)},
          {"fe", Optional(r.fe)},
          {"seps", Optional(r.seps)},
          {"h_avg", Optional(r.h_avg)},
          {"retain_components", r.retain_components},
          {"forget_components", r.forget_components},
          {"per_metric", per_metric},
          {"position_means", r.position_means},
          {"per_position", positions},
          {"failures", r.failures},
          {"incomplete", r.incomplete}};
}

ScoreReport ReportFromJson(const json& doc) {
  ScoreReport r;
  try {
    r.run = doc.at("run").get<std::string>();
    r.method = doc.at("method").get<std::string>();
    r.suite = doc.at("suite").get<std::string>();
    r.epoch = doc.at("epoch").get<int>();
    r.dataset_hash = doc.at("dataset_hash").get<std::string>();
    r.seed = doc.at("seed").get<uint64_t>();
    r.mu = OptionalFrom(doc, "mu");
    r.fe = OptionalFrom(doc, "fe");
    r.seps = OptionalFrom(doc, "seps");
    r.h_avg = OptionalFrom(doc, "h_avg");
    r.retain_components =
        doc.at("retain_components").get<std::map<std::string, double>>();
    r.forget_components =
        doc.at("forget_components").get<std::map<std::string, double>>();
    for (const auto& [m, s] : doc.at("per_metric").items()) {
      r.per_metric[m] = {s.at("fis").get<double>(), s.at("ris").get<double>(),
                         s.at("seps").get<double>()};
    }
    r.position_means =
        doc.at("position_means").get<std::map<std::string, double>>();
    for (const auto& p : doc.at("per_position")) {
      r.per_position.push_back(
          {p.at("prompt_kind").get<std::string>(),
           p.at("prompt_index").get<int>(), p.at("slot_index").get<int>(),
           p.at("slot_role").get<std::string>(),
           p.at("qa_id").get<std::string>(), p.at("metric").get<std::string>(),
           p.at("value").get<double>()});
    }
    r.failures = doc.at("failures").get<std::vector<std::string>>();
    r.incomplete = doc.at("incomplete").get<bool>();
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string ReportText(const ScoreReport& report) {
  return ReportToJson(report).dump(2) + "\n";
}

void FinalizeReport(ScoreReport& r) {
  auto component = [](const std::map<std::string, double>& m, const char* key) {
    return m.at(key);
  };
  static constexpr const char* kKeys[] = {"rouge", "probability", "truth_ratio",
                                          "judge"};
  auto complete = [&](const std::map<std::string, double>& m) {
    return std::all_of(std::begin(kKeys), std::end(kKeys),
                       [&](const char* k) { return m.contains(k); });
  };
  if (complete(r.retain_components)) {
    const auto& c = r.retain_components;
    r.mu = ModelUtility(component(c, "rouge"), component(c, "probability"),
                        component(c, "truth_ratio"), component(c, "judge"));
  }
  if (complete(r.forget_components)) {
    const auto& c = r.forget_components;
    r.fe = ForgetEfficacy(component(c, "rouge"), component(c, "probability"),
                          component(c, "truth_ratio"), component(c, "judge"));
  }
  std::map<std::string, double> seps;
  for (const auto& [m, s] : r.per_metric) seps[m] = s.seps;
  if (std::all_of(SepsMetrics().begin(), SepsMetrics().end(),
                  [&](const std::string& m) { return seps.contains(m); })) {
    r.seps = AggregateSeps(seps);
  }
  r.h_avg.reset();
  if (r.mu && r.fe && r.seps) r.h_avg = HAvg(*r.mu, *r.fe, *r.seps);
}

ScoreReport MergeReports(const std::vector<ScoreReport>& reports) {
  if (reports.empty()) throw ValidationError("nothing to merge");
  ScoreReport out = reports.front();
  out.suite.clear();
  out.per_position.clear();
  out.failures.clear();
  out.incomplete = false;
  for (const auto& r : reports) {
    out.suite += (out.suite.empty() ? "" : "+") + r.suite;
    for (const auto& [k, v] : r.retain_components) out.retain_components[k] = v;
    for (const auto& [k, v] : r.forget_components) out.forget_components[k] = v;
    for (const auto& [k, v] : r.per_metric) out.per_metric[k] = v;
    for (const auto& [k, v] : r.position_means) out.position_means[k] = v;
    out.per_position.insert(out.per_position.end(), r.per_position.begin(),
                            r.per_position.end());
    out.failures.insert(out.failures.end(), r.failures.begin(),
                        r.failures.end());
    out.incomplete = out.incomplete || r.incomplete;
  }
  FinalizeReport(out);
  return out;
}

std::string ReportCsvHeader() { return "method,epoch,mu,fe,seps,h_avg\n"; }

std::string ReportCsvRow(const ScoreReport& r) {
  return r.method + "," + std::to_string(r.epoch) + "," + Fixed4(r.mu) + "," +
         Fixed4(r.fe) + "," + Fixed4(r.seps) + "," + Fixed4(r.h_avg) + "\n";
}

}  // namespace sepslab
