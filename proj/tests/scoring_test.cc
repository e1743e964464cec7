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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "paper_tables.h"
#include "sepslab/errors.h"

namespace sepslab {
namespace {

constexpr double kTol = 5e-4;

TEST(ScoringTest, PublishedExamples) {
  EXPECT_NEAR(ModelUtility(0.9050, 0.9344, 0.4391, 0.8850), 0.7165, kTol);
  EXPECT_NEAR(ForgetEfficacy(0.0141, 0.0010, 0.1073, 0.0000), 0.9694, kTol);
  EXPECT_NEAR(ForgetEfficacy(0.0153, 0.5243, 0.3627, 0.0000), 0.7744, kTol);
  EXPECT_NEAR(
      AggregateSeps({{"rouge", 0.0214}, {"cosine", 0.0471}, {"judge", 0.0500}}),
      0.0395, kTol);
  EXPECT_NEAR(
      AggregateSeps({{"rouge", 0.2041}, {"cosine", 0.3381}, {"judge", 0.2938}}),
      0.2787, kTol);
  EXPECT_NEAR(HAvg(0.7165, 0.9694, 0.0395), 0.1081, kTol);
  EXPECT_NEAR(HAvg(0.6810, 0.7744, 0.2787), 0.4726, kTol);
  EXPECT_EQ(HAvg(0.0, 0.8980, 0.0001), 0.0);
}

// Every published row except forget01 NPO+KL, whose per-metric SEPS columns
// (mean 0.0115) disagree with its summary SEPS of 0.0298.
TEST(ScoringTest, ReproducesPublishedTables) {
  int checked = 0;
  for (const auto& row : testing::kPaperRows) {
    SCOPED_TRACE(std::string(row.task) + " " + row.method);
    const double mu = ModelUtility(row.retain[0], row.retain[1], row.retain[2],
                                   row.retain[3]);
    const double fe = ForgetEfficacy(row.forget[0], row.forget[1],
                                     row.forget[2], row.forget[3]);
    const double seps = AggregateSeps({{"rouge", row.seps[0]},
                                       {"cosine", row.seps[1]},
                                       {"judge", row.seps[2]}});
    const bool defective = std::string(row.task) == "forget01" &&
                           std::string(row.method) == "NPO+KL";
    if (row.has_summary) {
      EXPECT_NEAR(mu, row.summary[0], kTol);
      EXPECT_NEAR(fe, row.summary[1], kTol);
      if (!defective) {
        EXPECT_NEAR(seps, row.summary[2], kTol);
      }
      EXPECT_NEAR(HAvg(row.summary[0], row.summary[1], row.summary[2]),
                  row.summary[3], kTol);
    }
    if (!defective) {
      EXPECT_NEAR(HAvg(mu, fe, seps), row.h_avg, kTol);
    }
    ++checked;
  }
  EXPECT_EQ(checked, 36);
}

TEST(ScoringTest, SeparationBasics) {
  EXPECT_DOUBLE_EQ(Fis(0.2, 0.4), 0.3);
  EXPECT_DOUBLE_EQ(Ris(0.6, 1.0), 0.8);
  EXPECT_DOUBLE_EQ(Seps(0.8, 0.3), 0.5);
  EXPECT_EQ(Seps(0.2, 0.9), 0.0);
  EXPECT_THROW(AggregateSeps({{"rouge", 0.1}, {"judge", 0.1}}),
               ValidationError);
}

TEST(ScoringTest, Properties) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double a = u(gen), b = u(gen), c = u(gen), d = u(gen);
    const double mu = ModelUtility(a, b, c, d);
    EXPECT_LE(mu, std::min({a, b, c, d}) * 4 + 1e-12);
    EXPECT_GE(mu, std::min({a, b, c, d}) - 1e-12);
    EXPECT_LE(mu, (a + b + c + d) / 4 + 1e-12);
    EXPECT_NEAR(ModelUtility(d, c, b, a), mu, 1e-12);
    EXPECT_NEAR(ForgetEfficacy(a, b, c, d), 1 - (a + b + c + d) / 4, 1e-12);
    const double h = HAvg(a, b, c);
    EXPECT_GE(h, std::min({a, b, c}) - 1e-12);
    EXPECT_LE(h, std::max({a, b, c}) + 1e-12);
    EXPECT_GE(Seps(a, b), 0.0);
  }
  EXPECT_EQ(ModelUtility(0.5, 0.0, 0.5, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(HAvg(0.5, 0.5, 0.5), 0.5);
}

ScoreReport SampleReport() {
  ScoreReport r;
  r.run = "run";
  r.method = "mp-idk";
  r.suite = "mixed";
  r.epoch = 5;
  r.dataset_hash = "abc123";
  r.seed = 7;
  r.retain_components = {{"rouge", 0.9},
                         {"probability", 0.8},
                         {"truth_ratio", 0.4},
                         {"judge", 0.7}};
  r.forget_components = {{"rouge", 0.1},
                         {"probability", 0.2},
                         {"truth_ratio", 0.3},
                         {"judge", 0.0}};
  r.per_metric = {{"rouge", {0.1, 0.7, 0.6}},
                  {"cosine", {0.2, 0.9, 0.7}},
                  {"judge", {0.3, 0.6, 0.3}}};
  r.per_position = {{"RF", 0, 0, "retain", "r1", "rouge", 0.75},
                    {"RF", 0, 1, "forget", "f1", "rouge", 1.0 / 3.0}};
  r.failures = {"judge failed on FR 3"};
  r.position_means = {{"RF/forget/rouge", 1.0 / 3.0}};
  FinalizeReport(r);
  return r;
}

TEST(ScoringTest, FinalizeFillsDerivedFields) {
  const ScoreReport r = SampleReport();
  ASSERT_TRUE(r.mu && r.fe && r.seps && r.h_avg);
  EXPECT_DOUBLE_EQ(*r.mu, ModelUtility(0.9, 0.8, 0.4, 0.7));
  EXPECT_DOUBLE_EQ(*r.fe, ForgetEfficacy(0.1, 0.2, 0.3, 0.0));
  EXPECT_NEAR(*r.seps, (0.6 + 0.7 + 0.3) / 3, 1e-15);
  EXPECT_DOUBLE_EQ(*r.h_avg, HAvg(*r.mu, *r.fe, *r.seps));

  ScoreReport only_mixed;
  only_mixed.per_metric = r.per_metric;
  FinalizeReport(only_mixed);
  EXPECT_TRUE(only_mixed.seps.has_value());
  EXPECT_FALSE(only_mixed.h_avg.has_value());
}

TEST(ScoringTest, JsonRoundTripIsExact) {
  const ScoreReport r = SampleReport();
  EXPECT_EQ(ReportFromJson(ReportToJson(r)), r);
  const std::string text = ReportText(r);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(ReportText(ReportFromJson(nlohmann::json::parse(text))), text);
  EXPECT_THROW(ReportFromJson(nlohmann::json::array()), ParseError);
}

TEST(ScoringTest, MergeCombinesSuites) {
  ScoreReport single = SampleReport();
  single.per_metric.clear();
  single.suite = "single";
  ScoreReport mixed = SampleReport();
  mixed.retain_components.clear();
  mixed.forget_components.clear();
  const ScoreReport merged = MergeReports({single, mixed});
  EXPECT_EQ(merged.h_avg, SampleReport().h_avg);
}

TEST(ScoringTest, CsvHasTableColumns) {
  const std::string header = ReportCsvHeader();
  EXPECT_LT(header.find("mu"), header.find("fe"));
  EXPECT_LT(header.find("fe"), header.find("seps"));
  EXPECT_LT(header.find("seps"), header.find("h_avg"));
  EXPECT_NE(ReportCsvRow(SampleReport()).find("mp-idk"), std::string::npos);
}

}  // namespace
}  // namespace sepslab
