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

// Command implementations behind the sepslab CLI: run configuration,
// dataset resolution, reference fine-tuning, unlearning runs, evaluation,
// stress-prompt export and cross-run reports.

#ifndef SEPSLAB_PIPELINE_H_
#define SEPSLAB_PIPELINE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sepslab/dataset.h"
#include "sepslab/evaluation.h"
#include "sepslab/judge.h"
#include "sepslab/losses.h"
#include "sepslab/metrics.h"
#include "sepslab/tiny_transformer.h"
#include "sepslab/trainer.h"

namespace sepslab {

struct ReadinessConfig {
  double threshold = 0.95;  // minimum mean retain ROUGE-L recall
  int sample = 100;         // retain pairs checked after each epoch
};

struct JudgeSettings {
  bool mock = false;
  std::string url;    // falls back to $SEPSLAB_JUDGE_URL
  std::string model;  // falls back to $SEPSLAB_JUDGE_MODEL
  int timeout_seconds = 60;
  JudgeOptions options;
};

struct EmbedderSettings {
  std::string kind = "bag";  // bag | http
  std::string url;
  std::string model;
  int timeout_seconds = 30;
};

// What `eval` scores: checkpoints of a run, the scripted responders, or a
// model server.
enum class EvalTarget { kRun, kScripted, kIdentity, kRemote };

struct RunConfig {
  uint64_t seed = 0;
  std::string dataset;  // split JSONL; empty synthesizes `corpus`
  CorpusSpec corpus;
  // Seed of the synthetic corpus; the root seed when unset, so runs with
  // different training seeds can share one dataset.
  std::optional<uint64_t> corpus_seed;
  TransformerConfig model;
  TrainConfig finetune;
  ReadinessConfig readiness;
  std::string method = "mp-idk";
  LossConfig loss;
  TrainConfig unlearn;
  EvalConfig eval;
  std::vector<std::string> suites = {"single", "mixed"};
  EvalTarget target = EvalTarget::kRun;
  std::string remote_url;
  JudgeSettings judge;
  EmbedderSettings embedder;
  std::string output_dir = "runs";
  std::string reference;  // default <output_dir>/reference/model.bin
  std::string run_id;     // default <method>-s<seed>

  RunConfig();
  // Throws UsageError on inconsistent settings.
  void Validate() const;
  std::string ReferencePath() const;
  std::string RunDirectory() const;
};

// Overlays a JSON document onto `config`. Throws UsageError on unknown keys
// or mistyped values.
void ApplyConfigJson(RunConfig& config, const nlohmann::json& doc);
RunConfig LoadRunConfig(const std::string& path);
nlohmann::json RunConfigToJson(const RunConfig& config);

EvalTarget ParseEvalTarget(std::string_view name);

// Codec over every text of the split plus the stress instruction template.
Tokenizer BuildCorpusTokenizer(const UnlearnSplit& split);
// Loads config.dataset or synthesizes the corpus with the root seed. Throws
// UsageError when the dataset file does not exist.
UnlearnSplit ResolveDataset(const RunConfig& config);

// The mock judge when requested or when no endpoint is configured (from the
// config or the environment); otherwise a chat-completions client whose key
// comes from $SEPSLAB_JUDGE_API_KEY.
std::unique_ptr<JudgeClient> MakeJudge(const RunConfig& config);
std::unique_ptr<Embedder> MakeEmbedder(const RunConfig& config);

// Mean ROUGE-L recall of greedy single-question answers on a seeded retain
// sample.
double RetainRouge(const LanguageModel& model, const UnlearnSplit& split,
                   int sample, uint64_t seed);

struct FinetuneResult {
  std::string checkpoint;
  std::string sha256;
  int epochs = 0;
  double retain_rouge = 0.0;
  bool ready = false;
};
// Trains the reference model until the readiness gate holds or the epoch
// budget runs out. The checkpoint is written either way.
FinetuneResult CmdFinetune(const RunConfig& config, std::ostream& log);

struct UnlearnResult {
  std::string run_dir;
  std::vector<int> epochs;  // saved checkpoints
  bool diverged = false;
  std::string message;
};
UnlearnResult CmdUnlearn(const RunConfig& config, std::ostream& log);

struct EvalResult {
  std::string report_path;
  std::string csv_path;
  int selected_epoch = 0;
  bool incomplete = false;
  ScoreReport report;  // the selected epoch's merged report
};
// Scores every saved epoch for the configured suites, writes per-epoch
// reports plus report.json and report.csv for the epoch with the best H-Avg.
EvalResult CmdEval(const RunConfig& config, std::ostream& log);

// Writes the 180 stress prompts as JSONL and returns the path.
std::string CmdGenStress(const RunConfig& config, const std::string& out_path);

// Merges report.json from each run directory into a table sorted by H-Avg,
// writing <out_prefix>.csv and <out_prefix>.txt. Throws ValidationError when
// the runs disagree on the dataset hash. Returns the text table.
std::string CmdReport(const std::vector<std::string>& run_dirs,
                      const std::string& out_prefix);

// Writes the resolved split as JSONL.
void CmdSynth(const RunConfig& config, const std::string& out_path);

}  // namespace sepslab

#endif  // SEPSLAB_PIPELINE_H_
