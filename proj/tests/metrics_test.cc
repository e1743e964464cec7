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

#include "sepslab/metrics.h"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "oracles.h"
#include "sepslab/errors.h"
#include "test_util.h"

namespace sepslab {
namespace {

TEST(RougeTest, MatchesExhaustiveLcsOracle) {
  std::mt19937_64 gen(42);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> cand(gen() % 13), ref(1 + gen() % 12);
    for (auto& t : cand) t = alphabet[gen() % alphabet.size()];
    for (auto& t : ref) t = alphabet[gen() % alphabet.size()];
    std::string cs, rs;
    for (const auto& t : cand) cs += t + " ";
    for (const auto& t : ref) rs += t + " ";
    ASSERT_EQ(LcsLength(cand, ref), testing::BruteForceLcs(cand, ref));
    ASSERT_EQ(RougeLRecall(cs, rs),
              static_cast<double>(testing::BruteForceLcs(cand, ref)) /
                  static_cast<double>(ref.size()));
  }
}

TEST(RougeTest, Examples) {
  EXPECT_EQ(RougeLRecall("the cat sat", "the cat sat"), 1.0);
  EXPECT_EQ(RougeLRecall("", "any text"), 0.0);
  EXPECT_EQ(RougeLRecall("the cat sat", "the cat sat on a mat"), 0.5);
  EXPECT_EQ(RougeLRecall("The CAT, sat!", "the cat sat"), 1.0);
  EXPECT_THROW(RougeLRecall("x", " ... "), ValidationError);
  EXPECT_EQ(WordTokens("  Hello, World!  (ok) "),
            (std::vector<std::string>{"hello", "world", "ok"}));
}

TEST(ProbabilityTest, GeometricMeanOverAnswerContent) {
  const Tokenizer codec = testing::SmallCodec();
  const int ada = codec.Encode(" Ada")[0];
  const int oslo = codec.Encode(" Oslo")[0];
  ASSERT_EQ(codec.Encode(" Ada Oslo").size(), 2u);
  const testing::TableModel model(codec, {{ada, 0.8}, {oslo, 0.2}}, 0.5);
  EXPECT_EQ(
      AnswerTokenLogProbs(model, "Where was Ada born?", "Ada Oslo").size(), 2u);
  EXPECT_NEAR(NormalizedProbability(model, "Where was Ada born?", "Ada Oslo"),
              0.4, 1e-12);
  const testing::TableModel certain(codec, {}, 1.0);
  EXPECT_NEAR(NormalizedProbability(certain, "Where was Ada born?", "Ada Oslo"),
              1.0, 1e-12);

  TinyTransformer uniform = testing::SmallModel(1, codec);
  std::fill(uniform.mutable_parameters().begin(),
            uniform.mutable_parameters().end(), 0.0);
  EXPECT_NEAR(NormalizedProbability(uniform, "Where was Ada born?",
                                    "Ada was born in Oslo."),
              1.0 / codec.vocab_size(), 1e-12);
}

TEST(MultipleChoiceTest, RatioIncludesCorrectCandidate) {
  EXPECT_DOUBLE_EQ(MultipleChoiceRatio(0.1, {0.1, 0.1, 0.1, 0.1}), 0.2);
  EXPECT_DOUBLE_EQ(MultipleChoiceRatio(0.4, {0.6}), 0.4);
  EXPECT_NEAR(MultipleChoiceRatio(1.0, {1e-12, 1e-12}), 1.0, 1e-9);
  EXPECT_THROW(MultipleChoiceRatio(0.5, {}), ValidationError);
}

TEST(TruthRatioTest, MatchesDirectFormula) {
  EXPECT_DOUBLE_EQ(TruthRatio(0.5, {0.25, 0.25}), 0.5);
  EXPECT_DOUBLE_EQ(TruthRatio(0.3, {0.3, 0.3, 0.3}), 0.0);
  EXPECT_NEAR(TruthRatio(1.0, {1e-9, 1e-9}), 1.0, 1e-8);
  EXPECT_EQ(TruthRatio(0.0, {0.2}), 0.0);
  EXPECT_THROW(TruthRatio(0.5, {}), ValidationError);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double para = u(gen);
    std::vector<double> pert = {u(gen), u(gen), u(gen)};
    const double r = std::pow(pert[0] * pert[1] * pert[2], 1.0 / 3.0) / para;
    EXPECT_EQ(TruthRatio(para, pert), std::max(1.0 - r, 0.0));
    std::vector<double> rev(pert.rbegin(), pert.rend());
    EXPECT_NEAR(TruthRatio(para, rev), TruthRatio(para, pert), 1e-15);
  }
}

TEST(CosineTest, Examples) {
  const BagOfTokensEmbedder bag;
  EXPECT_NEAR(CosineSimilarity("the cat sat", "the cat sat", bag), 1.0, 1e-12);
  EXPECT_EQ(CosineSimilarity("red fox", "blue whale", bag), 0.0);
  EXPECT_NEAR(CosineOfVectors({1, 0}, {1, 1}), 1 / std::sqrt(2.0), 1e-12);
  EXPECT_EQ(CosineOfVectors({1, 0}, {-1, 0}), 0.0);
  EXPECT_EQ(CosineOfVectors({0, 0}, {1, 0}), 0.0);
}

}  // namespace
}  // namespace sepslab
