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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <regex>
#include <thread>

#include "sepslab/errors.h"
#include "sepslab/metrics.h"
#include "sepslab/prompt_composer.h"
#include "sepslab/templates.h"

namespace sepslab {
namespace {

std::string Part(const std::vector<std::optional<std::string>>& parts,
                 size_t i) {
  return i < parts.size() && parts[i] ? *parts[i] : std::string();
}

bool InRange(int v) { return v >= 0 && v <= 10; }

int ToInt(const std::string& digits) {
  return digits.size() > 3 ? 1000 : std::stoi(digits);
}

}  // namespace

double TokenF1(std::string_view ground_truth, std::string_view output) {
  const auto truth = WordTokens(ground_truth);
  const auto out = WordTokens(output);
  if (truth.empty() || out.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& w : truth) ++counts[w];
  int common = 0;
  for (const auto& w : out) {
    if (auto it = counts.find(w); it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / out.size();
  const double recall = static_cast<double>(common) / truth.size();
  return 2.0 * precision * recall / (precision + recall);
}

int MockScore(std::string_view ground_truth, std::string_view output) {
  return static_cast<int>(std::lround(10.0 * TokenF1(ground_truth, output)));
}

std::string MockJudge::Complete(const JudgeRequest& request) const {
  const int n = static_cast<int>(request.items.size());
  const auto parts = ParseNumberedAnswers(request.output, n);
  switch (request.kind) {
    case JudgeKind::kSingle: {
      const std::string answer = parts.at(0) ? *parts[0] : request.output;
      return std::to_string(
          MockScore(request.items.at(0).ground_truth, answer));
    }
    case JudgeKind::kMixed:
      return "['" +
             std::to_string(
                 MockScore(request.items.at(0).ground_truth, Part(parts, 0))) +
             "','" +
             std::to_string(
                 MockScore(request.items.at(1).ground_truth, Part(parts, 1))) +
             "']";
    case JudgeKind::kStress: {
      std::string reply;
      for (int i = 0; i < n; ++i) {
        if (i > 0) reply += " ";
        reply += "[" + std::to_string(i + 1) + "] " +
                 std::to_string(
                     MockScore(request.items[i].ground_truth, Part(parts, i)));
      }
      return reply;
    }
  }
  return "";
}

std::string ChatJudgeClient::Complete(const JudgeRequest& request) const {
  const nlohmann::json body = {
      {"model", config_.model},
      {"messages", {{{"role", "user"}, {"content", request.prompt}}}},
      {"temperature", 0}};
  const nlohmann::json reply =
      PostJson(config_.endpoint, "/chat/completions", body);
  try {
    return reply.at("choices")
        .at(0)
        .at("message")
        .at("content")
        .get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("unexpected judge reply: ") + e.what());
  }
}

std::optional<int> ParseSingleScore(std::string_view reply) {
  static const std::regex kNumber(R"(\d+)");
  const std::string text(reply);
  std::vector<int> found;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kNumber);
       it != std::sregex_iterator(); ++it) {
    found.push_back(ToInt(it->str()));
  }
  if (found.size() != 1 || !InRange(found[0])) return std::nullopt;
  return found[0];
}

std::optional<std::pair<int, int>> ParseMixedScores(std::string_view reply) {
  static const std::regex kList(
      R"re(\[\s*['"]?\s*(\d+)\s*['"]?\s*,\s*['"]?\s*(\d+)\s*['"]?\s*\])re");
  const std::string text(reply);
  std::optional<std::pair<int, int>> result;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kList);
       it != std::sregex_iterator(); ++it) {
    const std::pair<int, int> v{ToInt((*it)[1]), ToInt((*it)[2])};
    if (result && *result != v) return std::nullopt;  // ambiguous
    result = v;
  }
  if (result && (!InRange(result->first) || !InRange(result->second))) {
    return std::nullopt;
  }
  return result;
}

std::vector<std::optional<int>> ParseStressScores(std::string_view reply,
                                                  int n) {
  static const std::regex kEntry(R"(\[\s*(\d+)\s*\]\s*(\d+))");
  const std::string text(reply);
  std::vector<std::optional<int>> out(std::max(n, 0));
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kEntry);
       it != std::sregex_iterator(); ++it) {
    const int index = ToInt((*it)[1]);
    const int score = ToInt((*it)[2]);
    if (index >= 1 && index <= n && InRange(score) && !out[index - 1]) {
      out[index - 1] = score;
    }
  }
  return out;
}

JudgeRequest MakeSingleRequest(const std::string& question,
                               const std::string& ground_truth,
                               const std::string& output) {
  JudgeRequest r;
  r.kind = JudgeKind::kSingle;
  r.items = {{question, ground_truth}};
  r.output = output;
  r.prompt = Interpolate(TemplateAsset("judge_single"),
                         {{"question", question},
                          {"ground_truth", ground_truth},
                          {"output", output}});
  return r;
}

JudgeRequest MakeMixedRequest(const std::string& q1, const std::string& gt1,
                              const std::string& q2, const std::string& gt2,
                              const std::string& output) {
  JudgeRequest r;
  r.kind = JudgeKind::kMixed;
  r.items = {{q1, gt1}, {q2, gt2}};
  r.output = output;
  r.prompt = Interpolate(TemplateAsset("judge_mixed"), {{"question_1", q1},
                                                        {"ground_truth_1", gt1},
                                                        {"question_2", q2},
                                                        {"ground_truth_2", gt2},
                                                        {"output", output}});
  return r;
}

JudgeRequest MakeStressRequest(const std::vector<JudgeItem>& items,
                               const std::string& output) {
  if (items.empty())
    throw ValidationError("stress judging needs at least one pair");
  JudgeRequest r;
  r.kind = JudgeKind::kStress;
  r.items = items;
  r.output = output;
  std::string pairs;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i > 0) pairs += "\n\n";
    pairs += "[" + std::to_string(i + 1) + "] Q: " + items[i].question +
             ", A: " + items[i].ground_truth;
  }
  r.prompt = Interpolate(TemplateAsset("judge_stress"),
                         {{"qa_pairs", pairs}, {"output", output}});
  return r;
}

JudgeResult RunJudge(const JudgeClient& client, const JudgeRequest& request,
                     const JudgeOptions& options) {
  const int n = static_cast<int>(request.items.size());
  JudgeResult result;
  result.scores.assign(n, std::nullopt);
  for (int attempt = 0; attempt <= std::max(options.retries, 0); ++attempt) {
    std::string reply;
    try {
      reply = client.Complete(request);
    } catch (const IoError&) {
      continue;
    }
    result.reply = reply;
    switch (request.kind) {
      case JudgeKind::kSingle:
        if (auto v = ParseSingleScore(reply)) {
          result.scores[0] = *v / 10.0;
          return result;
        }
        break;
      case JudgeKind::kMixed:
        if (auto v = ParseMixedScores(reply)) {
          result.scores[0] = v->first / 10.0;
          result.scores[1] = v->second / 10.0;
          return result;
        }
        break;
      case JudgeKind::kStress: {
        const auto parsed = ParseStressScores(reply, n);
        if (std::none_of(parsed.begin(), parsed.end(),
                         [](const auto& v) { return v.has_value(); })) {
          break;
        }
        for (int i = 0; i < n; ++i) {
          if (parsed[i]) {
            result.scores[i] = *parsed[i] / 10.0;
          } else {
            result.scores[i] = 0.0;
            result.missing.push_back(i + 1);
          }
        }
        return result;
      }
    }
  }
  result.failed = true;
  if (request.kind == JudgeKind::kStress) result.scores.assign(n, 0.0);
  return result;
}

std::optional<double> JudgeSingle(const JudgeClient& client,
                                  const std::string& question,
                                  const std::string& ground_truth,
                                  const std::string& output,
                                  const JudgeOptions& options) {
  return RunJudge(client, MakeSingleRequest(question, ground_truth, output),
                  options)
      .scores[0];
}

std::optional<std::pair<double, double>> JudgeMixed(
    const JudgeClient& client, const std::string& q1, const std::string& gt1,
    const std::string& q2, const std::string& gt2, const std::string& output,
    const JudgeOptions& options) {
  const JudgeResult r =
      RunJudge(client, MakeMixedRequest(q1, gt1, q2, gt2, output), options);
  if (r.failed) return std::nullopt;
  return std::make_pair(*r.scores[0], *r.scores[1]);
}

JudgeResult JudgeStress(const JudgeClient& client,
                        const std::vector<JudgeItem>& items,
                        const std::string& output,
                        const JudgeOptions& options) {
  return RunJudge(client, MakeStressRequest(items, output), options);
}

std::vector<JudgeResult> JudgeBatch(const JudgeClient& client,
                                    const std::vector<JudgeRequest>& requests,
                                    const JudgeOptions& options) {
  std::vector<JudgeResult> results(requests.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < requests.size(); i = next++) {
      results[i] = RunJudge(client, requests[i], options);
    }
  };
  const int threads =
      std::clamp<int>(options.parallelism, 1,
                      std::max<int>(1, static_cast<int>(requests.size())));
  if (threads == 1) {
    worker();
    return results;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace sepslab
