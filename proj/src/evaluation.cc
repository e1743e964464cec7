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

#include "sepslab/evaluation.h"

#include <algorithm>
#include <map>
#include <set>

#include "sepslab/errors.h"
#include "sepslab/prompt_composer.h"
#include "sepslab/rng.h"

namespace sepslab {
namespace {

const char* RoleName(SlotRole role) {
  return role == SlotRole::kRetain ? "retain" : "forget";
}

// Greedy generations for `queries`, each limited to its slot budget and to
// the model context. Prompts that do not fit yield nullopt.
std::vector<std::optional<std::string>> GenerateAll(
    const LanguageModel& model, const std::vector<std::string>& queries,
    const std::vector<int>& budgets) {
  std::map<int, std::vector<size_t>> by_budget;
  for (size_t i = 0; i < queries.size(); ++i) {
    const int used =
        static_cast<int>(model.tokenizer().Encode(queries[i]).size());
    const int budget = std::min(budgets[i], model.max_context() - used);
    if (budget > 0) by_budget[budget].push_back(i);
  }
  std::vector<std::optional<std::string>> out(queries.size());
  for (const auto& [budget, idx] : by_budget) {
    std::vector<std::string> batch;
    for (size_t i : idx) batch.push_back(queries[i]);
    const std::vector<std::string> gen =
        model.GenerateGreedyBatch(batch, budget);
    for (size_t k = 0; k < idx.size(); ++k) out[idx[k]] = gen[k];
  }
  return out;
}

// Accumulates slot scores and their per-kind means.
class Tally {
 public:
  explicit Tally(ScoreReport& report) : report_(report) {}

  void Add(const std::string& kind, int prompt_index, int slot, SlotRole role,
           const std::string& qa_id, const std::string& metric, double value) {
    report_.per_position.push_back(
        {kind, prompt_index, slot, RoleName(role), qa_id, metric, value});
    Accumulate(kind + "/" + RoleName(role) + "/" + metric, value);
    Accumulate(kind + "/" + std::to_string(slot + 1) + "/" + metric, value);
  }

  void Finish() {
    for (const auto& [key, acc] : sums_)
      report_.position_means[key] = acc.first / acc.second;
  }

  double Mean(const std::string& key) const {
    const auto it = sums_.find(key);
    return it == sums_.end() ? 0.0 : it->second.first / it->second.second;
  }

 private:
  void Accumulate(const std::string& key, double v) {
    auto& acc = sums_[key];
    acc.first += v;
    acc.second += 1;
  }

  ScoreReport& report_;
  std::map<std::string, std::pair<double, int>> sums_;
};

struct JudgeTracker {
  int calls = 0;
  int failed = 0;
};

double ScoreOrZero(const JudgeResult& r, size_t slot, const std::string& label,
                   ScoreReport& report, JudgeTracker& tracker) {
  if (slot == 0) {
    ++tracker.calls;
    if (r.failed) {
      ++tracker.failed;
      report.failures.push_back("judge failed: " + label);
    }
    for (int m : r.missing) {
      report.failures.push_back("judge omitted slot " + std::to_string(m) +
                                ": " + label);
    }
  }
  return slot < r.scores.size() && r.scores[slot] ? *r.scores[slot] : 0.0;
}

std::vector<const QAPair*> SampleRetain(const UnlearnSplit& split, int count,
                                        Rng& rng) {
  const size_t n = std::min<size_t>(std::max(count, 0), split.retain.size());
  std::set<size_t> picked;
  while (picked.size() < n)
    picked.insert(UniformIndex(rng, split.retain.size()));
  std::vector<const QAPair*> out;
  for (size_t i : picked) out.push_back(&split.retain[i]);
  return out;
}

void EvaluateSingle(const LanguageModel& model, const UnlearnSplit& split,
                    const JudgeClient& judge, const EvalConfig& config,
                    ScoreReport& report, JudgeTracker& tracker) {
  Rng rng = SubStream(config.seed, "eval/single");
  const std::vector<const QAPair*> retain =
      SampleRetain(split, config.retain_sample, rng);
  std::vector<const QAPair*> forget;
  for (const auto& p : split.forget) forget.push_back(&p);
  Tally tally(report);
  const Tokenizer& codec = model.tokenizer();

  for (SlotRole role : {SlotRole::kRetain, SlotRole::kForget}) {
    const auto& pairs = role == SlotRole::kRetain ? retain : forget;
    if (pairs.empty()) continue;
    const std::string kind = role == SlotRole::kRetain ? "R" : "F";
    std::vector<std::string> queries;
    for (const QAPair* p : pairs)
      queries.push_back(ComposeMixed({{role, p}}, codec).query_text);
    const auto outputs = GenerateAll(
        model, queries,
        std::vector<int>(pairs.size(), config.max_new_tokens_per_slot));
    std::vector<JudgeRequest> requests;
    std::vector<std::string> answers;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const std::string raw = outputs[i].value_or("");
      if (!outputs[i])
        report.failures.push_back("prompt exceeds context: " + pairs[i]->id);
      const auto parsed = ParseNumberedAnswers(raw, 1);
      answers.push_back(parsed[0].value_or(raw));
      requests.push_back(
          MakeSingleRequest(pairs[i]->question, pairs[i]->answer, raw));
    }
    const std::vector<JudgeResult> verdicts =
        JudgeBatch(judge, requests, config.judge);
    double rouge = 0.0, prob = 0.0, tr = 0.0, jd = 0.0;
    int tr_count = 0;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const QAPair& p = *pairs[i];
      const int idx = static_cast<int>(i);
      const double r = RougeLRecall(answers[i], p.answer);
      const double pr = NormalizedProbability(model, p.question, p.answer);
      const double j =
          ScoreOrZero(verdicts[i], 0, kind + "#" + p.id, report, tracker);
      tally.Add(kind, idx, 0, role, p.id, "rouge", r);
      tally.Add(kind, idx, 0, role, p.id, "probability", pr);
      tally.Add(kind, idx, 0, role, p.id, "judge", j);
      rouge += r;
      prob += pr;
      jd += j;
      if (!p.paraphrased_answer.empty() && !p.perturbed_answers.empty()) {
        const double t = TruthRatio(model, p.question, p.paraphrased_answer,
                                    p.perturbed_answers);
        tally.Add(kind, idx, 0, role, p.id, "truth_ratio", t);
        tr += t;
        ++tr_count;
      }
    }
    const double n = static_cast<double>(pairs.size());
    auto& components = role == SlotRole::kRetain ? report.retain_components
                                                 : report.forget_components;
    components["rouge"] = rouge / n;
    components["probability"] = prob / n;
    components["judge"] = jd / n;
    if (tr_count > 0) components["truth_ratio"] = tr / tr_count;
  }
  tally.Finish();
}

void EvaluateMixed(const LanguageModel& model, const LanguageModel* ref,
                   const UnlearnSplit& split, const JudgeClient& judge,
                   const Embedder& embedder, const EvalConfig& config,
                   ScoreReport& report, JudgeTracker& tracker) {
  if (split.forget.empty() || split.retain.size() < 2) {
    throw ValidationError(
        "mixed evaluation needs forget pairs and two retain pairs");
  }
  const Tokenizer& codec = model.tokenizer();
  const size_t n =
      config.mixed_pairs > 0
          ? std::min<size_t>(config.mixed_pairs, split.forget.size())
          : split.forget.size();
  Rng rng = SubStream(config.seed, "eval/mixed");

  struct Prompt {
    std::string kind;
    int index;
    std::vector<SlotInput> slots;
  };
  std::vector<Prompt> prompts;
  for (size_t i = 0; i < n; ++i) {
    const QAPair* f = &split.forget[i];
    const QAPair* r = &split.retain[UniformIndex(rng, split.retain.size())];
    const QAPair* r2 = r;
    while (r2 == r) r2 = &split.retain[UniformIndex(rng, split.retain.size())];
    const int idx = static_cast<int>(i);
    prompts.push_back(
        {"RF", idx, {{SlotRole::kRetain, r}, {SlotRole::kForget, f}}});
    prompts.push_back(
        {"FR", idx, {{SlotRole::kForget, f}, {SlotRole::kRetain, r}}});
    prompts.push_back(
        {"RR", idx, {{SlotRole::kRetain, r}, {SlotRole::kRetain, r2}}});
    if (n > 1) {
      const QAPair* f2 = &split.forget[(i + 1) % n];
      prompts.push_back(
          {"FF", idx, {{SlotRole::kForget, f}, {SlotRole::kForget, f2}}});
    }
    prompts.push_back({"R", idx, {{SlotRole::kRetain, r}}});
    prompts.push_back({"F", idx, {{SlotRole::kForget, f}}});
  }

  std::vector<std::string> queries;
  std::vector<int> budgets;
  for (const auto& p : prompts) {
    queries.push_back(ComposeMixed(p.slots, codec).query_text);
    budgets.push_back(config.max_new_tokens_per_slot *
                      static_cast<int>(p.slots.size()));
  }
  const auto outputs = GenerateAll(model, queries, budgets);

  // Cosine targets: the reference model's single-question answers.
  std::map<std::string, std::string> cosine_target;
  {
    std::vector<const QAPair*> unique;
    for (const auto& p : prompts) {
      for (const auto& s : p.slots) {
        if (cosine_target.emplace(s.pair->id, s.pair->answer).second)
          unique.push_back(s.pair);
      }
    }
    if (ref != nullptr && !config.cosine_against_ground_truth) {
      std::vector<std::string> ref_queries;
      for (const QAPair* q : unique) {
        ref_queries.push_back(
            ComposeMixed({{SlotRole::kRetain, q}}, ref->tokenizer())
                .query_text);
      }
      const auto ref_out = GenerateAll(
          *ref, ref_queries,
          std::vector<int>(unique.size(), config.max_new_tokens_per_slot));
      for (size_t i = 0; i < unique.size(); ++i) {
        const std::string raw = ref_out[i].value_or("");
        cosine_target[unique[i]->id] =
            ParseNumberedAnswers(raw, 1)[0].value_or(raw);
      }
    }
  }

  std::vector<JudgeRequest> requests;
  for (size_t k = 0; k < prompts.size(); ++k) {
    const auto& s = prompts[k].slots;
    const std::string out = outputs[k].value_or("");
    if (s.size() == 1) {
      requests.push_back(
          MakeSingleRequest(s[0].pair->question, s[0].pair->answer, out));
    } else {
      requests.push_back(
          MakeMixedRequest(s[0].pair->question, s[0].pair->answer,
                           s[1].pair->question, s[1].pair->answer, out));
    }
  }
  const std::vector<JudgeResult> verdicts =
      JudgeBatch(judge, requests, config.judge);

  Tally tally(report);
  for (size_t k = 0; k < prompts.size(); ++k) {
    const Prompt& p = prompts[k];
    const std::string label = p.kind + "#" + std::to_string(p.index);
    if (!outputs[k])
      report.failures.push_back("prompt exceeds context: " + label);
    const auto parts = ParseNumberedAnswers(outputs[k].value_or(""),
                                            static_cast<int>(p.slots.size()));
    for (size_t s = 0; s < p.slots.size(); ++s) {
      const QAPair& qa = *p.slots[s].pair;
      const SlotRole role = p.slots[s].role;
      const int slot = static_cast<int>(s);
      double rouge = 0.0, cosine = 0.0;
      if (parts[s]) {
        rouge = RougeLRecall(*parts[s], qa.answer);
        cosine = CosineSimilarity(*parts[s], cosine_target.at(qa.id), embedder);
      }
      const double j = ScoreOrZero(verdicts[k], s, label, report, tracker);
      tally.Add(p.kind, p.index, slot, role, qa.id, "rouge", rouge);
      tally.Add(p.kind, p.index, slot, role, qa.id, "cosine", cosine);
      tally.Add(p.kind, p.index, slot, role, qa.id, "judge", j);
    }
  }
  tally.Finish();
  for (const auto& m : SepsMetrics()) {
    MetricSeparation sep;
    sep.fis = Fis(tally.Mean("FR/forget/" + m), tally.Mean("RF/forget/" + m));
    sep.ris = Ris(tally.Mean("FR/retain/" + m), tally.Mean("RF/retain/" + m));
    sep.seps = Seps(sep.ris, sep.fis);
    report.per_metric[m] = sep;
  }
}

void EvaluateStress(const LanguageModel& model, const UnlearnSplit& split,
                    const JudgeClient& judge, const EvalConfig& config,
                    ScoreReport& report, JudgeTracker& tracker) {
  const Tokenizer& codec = model.tokenizer();
  const ChatTemplate chat = codec.chat_template();
  const StressGrid grid = BuildStressGrid(split, config.seed, codec);
  std::vector<std::string> queries;
  std::vector<int> budgets;
  for (const auto& p : grid.prompts) {
    queries.push_back(config.stress_format == StressFormat::kInstruction
                          ? chat.instruction_start +
                                RenderStressInstruction(p) +
                                chat.instruction_end
                          : p.query_text);
    budgets.push_back(config.max_new_tokens_per_slot *
                      static_cast<int>(p.slots.size()));
  }
  const auto outputs = GenerateAll(model, queries, budgets);
  std::vector<JudgeRequest> requests;
  for (size_t k = 0; k < grid.prompts.size(); ++k) {
    std::vector<JudgeItem> items;
    for (const auto& s : grid.prompts[k].slots)
      items.push_back({s.question, s.answer});
    requests.push_back(MakeStressRequest(items, outputs[k].value_or("")));
  }
  const std::vector<JudgeResult> verdicts =
      JudgeBatch(judge, requests, config.judge);

  Tally tally(report);
  for (size_t k = 0; k < grid.prompts.size(); ++k) {
    const MixedPrompt& p = grid.prompts[k];
    const std::string label = p.order_tag + "#" + std::to_string(k);
    if (!outputs[k])
      report.failures.push_back("prompt exceeds context: " + label);
    const auto parts = ParseNumberedAnswers(outputs[k].value_or(""),
                                            static_cast<int>(p.slots.size()));
    for (size_t s = 0; s < p.slots.size(); ++s) {
      const auto& slot = p.slots[s];
      const double j = ScoreOrZero(verdicts[k], s, label, report, tracker);
      const double rouge =
          parts[s] ? RougeLRecall(*parts[s], slot.answer) : 0.0;
      tally.Add(p.order_tag, static_cast<int>(k), static_cast<int>(s),
                slot.role, slot.qa_id, "judge", j);
      tally.Add(p.order_tag, static_cast<int>(k), static_cast<int>(s),
                slot.role, slot.qa_id, "rouge", rouge);
      tally.Add("stress", static_cast<int>(k), static_cast<int>(s), slot.role,
                slot.qa_id, "judge", j);
    }
  }
  // The "stress" rows only exist to feed the role averages.
  std::erase_if(report.per_position, [](const PositionalScore& s) {
    return s.prompt_kind == "stress";
  });
  tally.Finish();
}

}  // namespace

Suite ParseSuite(std::string_view name) {
  if (name == "single") return Suite::kSingle;
  if (name == "mixed") return Suite::kMixed;
  if (name == "stress") return Suite::kStress;
  throw UsageError("unknown suite '" + std::string(name) +
                   "'; accepted: single, mixed, stress");
}

std::string SuiteName(Suite suite) {
  switch (suite) {
    case Suite::kSingle:
      return "single";
    case Suite::kMixed:
      return "mixed";
    case Suite::kStress:
      return "stress";
  }
  return "";
}

ScoreReport EvaluateSuite(const LanguageModel& model, const LanguageModel* ref,
                          const UnlearnSplit& split, const JudgeClient& judge,
                          const Embedder& embedder, Suite suite,
                          const EvalConfig& config) {
  split.Validate();
  ScoreReport report;
  report.suite = SuiteName(suite);
  report.dataset_hash = split.Hash();
  report.seed = config.seed;
  JudgeTracker tracker;
  switch (suite) {
    case Suite::kSingle:
      EvaluateSingle(model, split, judge, config, report, tracker);
      break;
    case Suite::kMixed:
      EvaluateMixed(model, ref, split, judge, embedder, config, report,
                    tracker);
      break;
    case Suite::kStress:
      EvaluateStress(model, split, judge, config, report, tracker);
      break;
  }
  report.incomplete =
      tracker.calls > 0 && static_cast<double>(tracker.failed) / tracker.calls >
                               config.max_judge_failure_rate;
  FinalizeReport(report);
  return report;
}

}  // namespace sepslab
