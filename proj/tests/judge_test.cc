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

#include "sepslab/judge.h"

#include <gtest/gtest.h>

#include <atomic>
#include <mutex>

#include "sepslab/errors.h"

namespace sepslab {
namespace {

TEST(JudgeParseTest, SingleScore) {
  EXPECT_EQ(ParseSingleScore("10"), 10);
  EXPECT_EQ(ParseSingleScore(" 7\n"), 7);
  EXPECT_EQ(ParseSingleScore("11"), std::nullopt);
  EXPECT_EQ(ParseSingleScore("seven"), std::nullopt);
  EXPECT_EQ(ParseSingleScore(""), std::nullopt);
}

TEST(JudgeParseTest, MixedScores) {
  EXPECT_EQ(ParseMixedScores("['7','3']"), std::make_pair(7, 3));
  EXPECT_EQ(ParseMixedScores("['0','10']"), std::make_pair(0, 10));
  EXPECT_EQ(ParseMixedScores("Scores: ['4', '6'] as requested."),
            std::make_pair(4, 6));
  EXPECT_EQ(ParseMixedScores("['1','2'] or ['3','4']"), std::nullopt);
  EXPECT_EQ(ParseMixedScores("['12','2']"), std::nullopt);
  EXPECT_EQ(ParseMixedScores("7 and 3"), std::nullopt);
}

TEST(JudgeParseTest, StressScores) {
  auto two = ParseStressScores("[1] 8 [2] 0", 2);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0], 8);
  EXPECT_EQ(two[1], 0);
  auto missing = ParseStressScores("[1] 5", 2);
  EXPECT_EQ(missing[0], 5);
  EXPECT_EQ(missing[1], std::nullopt);
  auto eight =
      ParseStressScores("[8] 1 [7] 2 [6] 3 [5] 4 [4] 5 [3] 6 [2] 7 [1] 8", 8);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(eight[i], 8 - i);
}

TEST(MockJudgeTest, ScoresTokenOverlap) {
  EXPECT_EQ(MockScore("Ada was born in Oslo.", "Ada was born in Oslo."), 10);
  EXPECT_EQ(MockScore("Ada was born in Oslo.", "I don't know."), 0);
  EXPECT_DOUBLE_EQ(TokenF1("a b c d", "a b"), 2.0 * 0.5 * 1.0 / 1.5);
  const MockJudge judge;
  EXPECT_EQ(JudgeSingle(judge, "Q?", "Oslo is cold.", "Oslo is cold."), 1.0);
  const auto mixed = JudgeMixed(judge, "Q1?", "red fox", "Q2?", "blue whale",
                                "1. red fox\n2. green tree");
  ASSERT_TRUE(mixed.has_value());
  EXPECT_EQ(mixed->first, 1.0);
  EXPECT_EQ(mixed->second, 0.0);
  // Purity: same request, same reply.
  const JudgeRequest request =
      MakeStressRequest({{"a?", "x y"}, {"b?", "z"}}, "[1] x y\n[2] q");
  EXPECT_EQ(judge.Complete(request), judge.Complete(request));
}

TEST(JudgeRequestTest, RendersQuestionsIntoTemplates) {
  const JudgeRequest single = MakeSingleRequest("Where?", "Oslo", "Bergen");
  EXPECT_NE(single.prompt.find("Where?"), std::string::npos);
  EXPECT_NE(single.prompt.find("Oslo"), std::string::npos);
  EXPECT_NE(single.prompt.find("Bergen"), std::string::npos);
  const JudgeRequest stress =
      MakeStressRequest({{"q1", "a1"}, {"q2", "a2"}, {"q3", "a3"}}, "out");
  EXPECT_EQ(stress.kind, JudgeKind::kStress);
  EXPECT_NE(stress.prompt.find("q3"), std::string::npos);
}

// Replies from a fixed script, one entry per call; "!" throws IoError.
class ScriptedClient : public JudgeClient {
 public:
  explicit ScriptedClient(std::vector<std::string> replies)
      : replies_(std::move(replies)) {}
  std::string Complete(const JudgeRequest&) const override {
    const size_t i = calls_++;
    const std::string& r = replies_.at(std::min(i, replies_.size() - 1));
    if (r == "!") throw IoError("connection reset");
    return r;
  }
  int calls() const { return static_cast<int>(calls_); }

 private:
  std::vector<std::string> replies_;
  mutable std::atomic<size_t> calls_{0};
};

TEST(RunJudgeTest, RetriesMalformedAndFailedReplies) {
  const ScriptedClient flaky({"!", "a lot", "7"});
  const JudgeResult r =
      RunJudge(flaky, MakeSingleRequest("q", "a", "o"), {.retries = 3});
  EXPECT_FALSE(r.failed);
  EXPECT_EQ(r.scores[0], 0.7);
  EXPECT_EQ(flaky.calls(), 3);

  const ScriptedClient broken({"nonsense"});
  const JudgeResult f = RunJudge(
      broken, MakeMixedRequest("q", "a", "q", "a", "o"), {.retries = 2});
  EXPECT_TRUE(f.failed);
  EXPECT_EQ(broken.calls(), 3);
  EXPECT_FALSE(f.scores[0].has_value());
}

TEST(RunJudgeTest, StressFallbacks) {
  const ScriptedClient partial({"[1] 8"});
  const JudgeResult r =
      JudgeStress(partial, {{"q1", "a1"}, {"q2", "a2"}}, "out");
  EXPECT_FALSE(r.failed);
  EXPECT_EQ(r.scores[0], 0.8);
  EXPECT_EQ(r.scores[1], 0.0);
  EXPECT_EQ(r.missing, std::vector<int>{2});

  const ScriptedClient garbage({"no scores here"});
  const JudgeResult g =
      JudgeStress(garbage, {{"q1", "a1"}, {"q2", "a2"}}, "out", {.retries = 1});
  EXPECT_TRUE(g.failed);
  EXPECT_EQ(g.scores, (std::vector<std::optional<double>>{0.0, 0.0}));
}

TEST(JudgeBatchTest, KeepsRequestOrder) {
  const MockJudge judge;
  std::vector<JudgeRequest> requests;
  for (int i = 0; i <= 10; ++i) {
    std::string out;
    for (int k = 0; k < i; ++k) out += "w" + std::to_string(k) + " ";
    std::string gt;
    for (int k = 0; k < 10; ++k) gt += "w" + std::to_string(k) + " ";
    requests.push_back(MakeSingleRequest("q", gt, out));
  }
  const auto results =
      JudgeBatch(judge, requests, {.retries = 0, .parallelism = 4});
  ASSERT_EQ(results.size(), requests.size());
  for (size_t i = 0; i < results.size(); ++i) {
    EXPECT_EQ(results[i].scores[0], RunJudge(judge, requests[i], {}).scores[0])
        << i;
  }
  EXPECT_EQ(results.front().scores[0], 0.0);
  EXPECT_EQ(results.back().scores[0], 1.0);
}

}  // namespace
}  // namespace sepslab
