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

// LLM-as-judge scoring with the paper's templates. A JudgeClient turns a
// rendered request into a raw reply; the wrappers parse replies, retry on
// malformed ones and normalize 0-10 scores to [0, 1].

#ifndef SEPSLAB_JUDGE_H_
#define SEPSLAB_JUDGE_H_

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sepslab/http.h"

namespace sepslab {

enum class JudgeKind { kSingle, kMixed, kStress };

struct JudgeItem {
  std::string question;
  std::string ground_truth;
};

struct JudgeRequest {
  JudgeKind kind = JudgeKind::kSingle;
  std::vector<JudgeItem> items;  // 1, 2 or n entries by kind
  std::string output;            // the response being judged
  std::string prompt;            // rendered template
};

class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  // Raw reply text. May throw IoError.
  virtual std::string Complete(const JudgeRequest& request) const = 0;
};

// Deterministic offline judge: each item scores round(10 * token-F1) between
// its ground truth and the matching part of the output. Mixed and stress
// outputs are split with ParseNumberedAnswers; missing parts score 0.
class MockJudge : public JudgeClient {
 public:
  std::string Complete(const JudgeRequest& request) const override;
};

// Unigram F1 over WordTokens.
double TokenF1(std::string_view ground_truth, std::string_view output);
int MockScore(std::string_view ground_truth, std::string_view output);

struct ChatJudgeConfig {
  HttpEndpoint endpoint;  // base URL of a chat-completions API
  std::string model;
};

// POST {model, messages: [{role: user, content: prompt}], temperature: 0}
// to <url>/chat/completions and returns choices[0].message.content.
class ChatJudgeClient : public JudgeClient {
 public:
  explicit ChatJudgeClient(ChatJudgeConfig config)
      : config_(std::move(config)) {}
  std::string Complete(const JudgeRequest& request) const override;

 private:
  ChatJudgeConfig config_;
};

// Reply parsers; nullopt when the reply is malformed.
std::optional<int> ParseSingleScore(std::string_view reply);
std::optional<std::pair<int, int>> ParseMixedScores(std::string_view reply);
// Index -> score for every "[i] s" entry with 1 <= i <= n and 0 <= s <= 10.
std::vector<std::optional<int>> ParseStressScores(std::string_view reply,
                                                  int n);

JudgeRequest MakeSingleRequest(const std::string& question,
                               const std::string& ground_truth,
                               const std::string& output);
JudgeRequest MakeMixedRequest(const std::string& q1, const std::string& gt1,
                              const std::string& q2, const std::string& gt2,
                              const std::string& output);
JudgeRequest MakeStressRequest(const std::vector<JudgeItem>& items,
                               const std::string& output);

struct JudgeOptions {
  int retries = 3;      // extra attempts after a malformed reply or error
  int parallelism = 4;  // concurrent requests in JudgeBatch
};

// Per-item scores in [0, 1]. `failed` marks exhausted retries (single and
// mixed: scores are absent) or a wholly unparseable stress reply (all
// zero). `missing` lists stress indices that fell back to 0.
struct JudgeResult {
  std::vector<std::optional<double>> scores;
  bool failed = false;
  std::vector<int> missing;
  std::string reply;
};

JudgeResult RunJudge(const JudgeClient& client, const JudgeRequest& request,
                     const JudgeOptions& options);

std::optional<double> JudgeSingle(const JudgeClient& client,
                                  const std::string& question,
                                  const std::string& ground_truth,
                                  const std::string& output,
                                  const JudgeOptions& options = {});
std::optional<std::pair<double, double>> JudgeMixed(
    const JudgeClient& client, const std::string& q1, const std::string& gt1,
    const std::string& q2, const std::string& gt2, const std::string& output,
    const JudgeOptions& options = {});
JudgeResult JudgeStress(const JudgeClient& client,
                        const std::vector<JudgeItem>& items,
                        const std::string& output,
                        const JudgeOptions& options = {});

// Runs requests with at most options.parallelism in flight; results keep
// request order.
std::vector<JudgeResult> JudgeBatch(const JudgeClient& client,
                                    const std::vector<JudgeRequest>& requests,
                                    const JudgeOptions& options);

}  // namespace sepslab

#endif  // SEPSLAB_JUDGE_H_
