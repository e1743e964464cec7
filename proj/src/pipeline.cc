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

#include "sepslab/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "sepslab/checkpoint.h"
#include "sepslab/errors.h"
#include "sepslab/prompt_composer.h"
#include "sepslab/remote_model.h"
#include "sepslab/rng.h"
#include "sepslab/scripted_responder.h"
#include "sepslab/templates.h"

namespace sepslab {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Reads typed keys from one config object and rejects the rest.
class Section {
 public:
  Section(const json& doc, std::string path)
      : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object())
      throw UsageError("config '" + Name("") + "' must be an object");
  }

  template <typename T>
  void Get(const char* key, T& out) {
    seen_.insert(key);
    if (!doc_.contains(key)) return;
    try {
      out = doc_.at(key).get<T>();
    } catch (const json::exception&) {
      throw UsageError("config key '" + Name(key) + "' has the wrong type");
    }
  }

  // Returns null when absent.
  const json* Child(const char* key) {
    seen_.insert(key);
    return doc_.contains(key) ? &doc_.at(key) : nullptr;
  }

  std::string Name(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  void Finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.contains(key))
        throw UsageError("unknown config key '" + Name(key) + "'");
    }
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

void ReadTrain(const json& doc, const std::string& path, TrainConfig& c) {
  Section s(doc, path);
  s.Get("learning_rate", c.learning_rate);
  s.Get("weight_decay", c.weight_decay);
  s.Get("effective_batch", c.effective_batch);
  s.Get("micro_batch", c.micro_batch);
  s.Get("epochs", c.epochs);
  s.Get("beta1", c.beta1);
  s.Get("beta2", c.beta2);
  s.Get("epsilon", c.epsilon);
  s.Get("checkpoint_epochs", c.checkpoint_epochs);
  s.Get("mixed_prompt_ratio", c.mixed_prompt_ratio);
  s.Finish();
}

json TrainToJson(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"effective_batch", c.effective_batch},
          {"micro_batch", c.micro_batch},
          {"epochs", c.epochs},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"checkpoint_epochs", c.checkpoint_epochs},
          {"mixed_prompt_ratio", c.mixed_prompt_ratio}};
}

std::string StressFormatName(StressFormat f) {
  return f == StressFormat::kInstruction ? "instruction" : "numbered";
}

std::string EvalTargetName(EvalTarget t) {
  switch (t) {
    case EvalTarget::kRun:
      return "run";
    case EvalTarget::kScripted:
      return "scripted";
    case EvalTarget::kIdentity:
      return "identity";
    case EvalTarget::kRemote:
      return "remote";
  }
  return "";
}

std::string EnvOr(const std::string& value, const char* name) {
  if (!value.empty()) return value;
  const char* env = std::getenv(name);
  return env == nullptr ? "" : env;
}

std::string Fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string Relative(const std::string& path, const std::string& base) {
  return fs::path(path).lexically_relative(base).generic_string();
}

// One report per configured suite.
std::vector<ScoreReport> EvaluateModel(const LanguageModel& model,
                                       const LanguageModel* ref,
                                       const UnlearnSplit& split,
                                       const RunConfig& config,
                                       const JudgeClient& judge,
                                       const Embedder& embedder) {
  EvalConfig ec = config.eval;
  ec.seed = config.seed;
  ec.judge = config.judge.options;
  std::vector<ScoreReport> parts;
  for (const auto& name : config.suites) {
    parts.push_back(EvaluateSuite(model, ref, split, judge, embedder,
                                  ParseSuite(name), ec));
  }
  return parts;
}

// One row per stress prompt: order tag, role counts, role means and the
// per-slot judge scores.
std::string StressTable(const ScoreReport& stress) {
  struct Row {
    std::string tag;
    std::vector<double> scores;
    std::vector<std::string> roles;
  };
  std::map<int, Row> rows;
  for (const auto& s : stress.per_position) {
    if (s.metric != "judge") continue;
    Row& row = rows[s.prompt_index];
    row.tag = s.prompt_kind;
    if (static_cast<int>(row.scores.size()) <= s.slot_index) {
      row.scores.resize(s.slot_index + 1);
      row.roles.resize(s.slot_index + 1);
    }
    row.scores[s.slot_index] = s.value;
    row.roles[s.slot_index] = s.slot_role;
  }
  std::string out =
      "prompt,line,order_tag,num_retain,num_forget,retain_judge,forget_judge,"
      "slot_judges\n";
  for (const auto& [index, row] : rows) {
    double retain_sum = 0, forget_sum = 0;
    int retain_n = 0, forget_n = 0;
    std::string slots;
    for (size_t i = 0; i < row.scores.size(); ++i) {
      if (row.roles[i] == "retain") {
        retain_sum += row.scores[i];
        ++retain_n;
      } else {
        forget_sum += row.scores[i];
        ++forget_n;
      }
      if (i > 0) slots += ";";
      slots += Fixed4(row.scores[i]);
    }
    out += std::to_string(index) + "," +
           std::to_string(index / kStressPerLine) + "," + row.tag + "," +
           std::to_string(retain_n) + "," + std::to_string(forget_n) + "," +
           Fixed4(retain_n ? retain_sum / retain_n : 0.0) + "," +
           Fixed4(forget_n ? forget_sum / forget_n : 0.0) + "," + slots + "\n";
  }
  return out;
}

// Values as printed in tables, so ties follow what the reader sees.
long Rounded4(double v) { return std::lround(v * 1e4); }

}  // namespace

RunConfig::RunConfig() {
  finetune.learning_rate = 5e-3;
  finetune.epochs = 30;
  finetune.effective_batch = 32;
  finetune.mixed_prompt_ratio = 0.1;
  finetune.checkpoint_epochs = {};
  unlearn.learning_rate = 1e-2;
  unlearn.epochs = 10;
  unlearn.effective_batch = 32;
  unlearn.checkpoint_epochs = {5, 10};
  loss.method = ParseMethod(method);
}

void RunConfig::Validate() const {
  ParseMethod(method);
  for (const auto& s : suites) ParseSuite(s);
  if (suites.empty()) throw UsageError("at least one suite is required");
  if (readiness.threshold < 0 || readiness.threshold > 1 ||
      readiness.sample <= 0) {
    throw UsageError(
        "readiness threshold must be in [0, 1] with a positive sample");
  }
  if (target == EvalTarget::kRemote && remote_url.empty()) {
    throw UsageError("target 'remote' needs remote_url");
  }
  if (embedder.kind != "bag" && embedder.kind != "http") {
    throw UsageError("embedder kind must be 'bag' or 'http'");
  }
  if (embedder.kind == "http" && embedder.url.empty()) {
    throw UsageError("the http embedder needs a url");
  }
  if (output_dir.empty()) throw UsageError("output_dir must not be empty");
  try {
    finetune.Validate();
    unlearn.Validate();
    LossConfig l = loss;
    l.method = ParseMethod(method);
    l.Validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
}

std::string RunConfig::ReferencePath() const {
  if (!reference.empty()) return reference;
  return (fs::path(output_dir) / "reference" / "model.bin").string();
}

std::string RunConfig::RunDirectory() const {
  std::string id = run_id;
  if (id.empty()) {
    id = (target == EvalTarget::kRun ? method : EvalTargetName(target)) + "-s" +
         std::to_string(seed);
  }
  return (fs::path(output_dir) / id).string();
}

EvalTarget ParseEvalTarget(std::string_view name) {
  for (EvalTarget t : {EvalTarget::kRun, EvalTarget::kScripted,
                       EvalTarget::kIdentity, EvalTarget::kRemote}) {
    if (EvalTargetName(t) == name) return t;
  }
  throw UsageError("unknown eval target '" + std::string(name) +
                   "'; accepted: run, scripted, identity, remote");
}

void ApplyConfigJson(RunConfig& c, const json& doc) {
  Section root(doc, "");
  root.Get("seed", c.seed);
  root.Get("dataset", c.dataset);
  if (const json* j = root.Child("corpus")) {
    Section s(*j, "corpus");
    s.Get("num_entities", c.corpus.num_entities);
    s.Get("qa_per_entity", c.corpus.qa_per_entity);
    s.Get("forget_fraction", c.corpus.forget_fraction);
    s.Get("num_perturbed", c.corpus.num_perturbed);
    // null (as written back into manifests) leaves the seed unset.
    if (const json* seed = s.Child("seed");
        seed != nullptr && !seed->is_null()) {
      uint64_t value = 0;
      s.Get("seed", value);
      c.corpus_seed = value;
    }
    s.Finish();
  }
  if (const json* j = root.Child("model")) {
    Section s(*j, "model");
    s.Get("max_context", c.model.max_context);
    s.Get("d_model", c.model.d_model);
    s.Get("n_heads", c.model.n_heads);
    s.Get("n_layers", c.model.n_layers);
    s.Get("d_ff", c.model.d_ff);
    s.Finish();
  }
  if (const json* j = root.Child("finetune"))
    ReadTrain(*j, "finetune", c.finetune);
  if (const json* j = root.Child("readiness")) {
    Section s(*j, "readiness");
    s.Get("threshold", c.readiness.threshold);
    s.Get("sample", c.readiness.sample);
    s.Finish();
  }
  root.Get("method", c.method);
  if (const json* j = root.Child("loss")) {
    Section s(*j, "loss");
    s.Get("beta", c.loss.beta);
    s.Get("alpha", c.loss.alpha);
    s.Get("forget_coeff", c.loss.forget_coeff);
    s.Get("reg_coeff", c.loss.reg_coeff);
    s.Get("me_include_question", c.loss.me_include_question);
    s.Finish();
  }
  if (const json* j = root.Child("unlearn"))
    ReadTrain(*j, "unlearn", c.unlearn);
  if (const json* j = root.Child("eval")) {
    Section s(*j, "eval");
    s.Get("retain_sample", c.eval.retain_sample);
    s.Get("mixed_pairs", c.eval.mixed_pairs);
    s.Get("max_new_tokens_per_slot", c.eval.max_new_tokens_per_slot);
    s.Get("cosine_against_ground_truth", c.eval.cosine_against_ground_truth);
    s.Get("max_judge_failure_rate", c.eval.max_judge_failure_rate);
    std::string format = StressFormatName(c.eval.stress_format);
    s.Get("stress_format", format);
    if (format == "instruction") {
      c.eval.stress_format = StressFormat::kInstruction;
    } else if (format == "numbered") {
      c.eval.stress_format = StressFormat::kNumbered;
    } else {
      throw UsageError(
          "eval.stress_format must be 'instruction' or 'numbered'");
    }
    s.Finish();
  }
  root.Get("suites", c.suites);
  std::string target = EvalTargetName(c.target);
  root.Get("target", target);
  c.target = ParseEvalTarget(target);
  root.Get("remote_url", c.remote_url);
  if (const json* j = root.Child("judge")) {
    Section s(*j, "judge");
    s.Get("mock", c.judge.mock);
    s.Get("url", c.judge.url);
    s.Get("model", c.judge.model);
    s.Get("timeout_seconds", c.judge.timeout_seconds);
    s.Get("retries", c.judge.options.retries);
    s.Get("parallelism", c.judge.options.parallelism);
    s.Finish();
  }
  if (const json* j = root.Child("embedder")) {
    Section s(*j, "embedder");
    s.Get("kind", c.embedder.kind);
    s.Get("url", c.embedder.url);
    s.Get("model", c.embedder.model);
    s.Get("timeout_seconds", c.embedder.timeout_seconds);
    s.Finish();
  }
  root.Get("output_dir", c.output_dir);
  root.Get("reference", c.reference);
  root.Get("run_id", c.run_id);
  root.Finish();
  c.loss.method = ParseMethod(c.method);
}

RunConfig LoadRunConfig(const std::string& path) {
  if (!fs::exists(path))
    throw UsageError("config file '" + path + "' does not exist");
  json doc;
  try {
    doc = json::parse(ReadFile(path));
  } catch (const json::parse_error& e) {
    throw UsageError("config file '" + path +
                     "' is not valid JSON: " + e.what());
  }
  RunConfig c;
  ApplyConfigJson(c, doc);
  return c;
}

json RunConfigToJson(const RunConfig& c) {
  return {
      {"seed", c.seed},
      {"dataset", c.dataset},
      {"corpus",
       {{"num_entities", c.corpus.num_entities},
        {"qa_per_entity", c.corpus.qa_per_entity},
        {"forget_fraction", c.corpus.forget_fraction},
        {"num_perturbed", c.corpus.num_perturbed},
        {"seed", c.corpus_seed ? json(*c.corpus_seed) : json(nullptr)}}},
      {"model",
       {{"max_context", c.model.max_context},
        {"d_model", c.model.d_model},
        {"n_heads", c.model.n_heads},
        {"n_layers", c.model.n_layers},
        {"d_ff", c.model.d_ff}}},
      {"finetune", TrainToJson(c.finetune)},
      {"readiness",
       {{"threshold", c.readiness.threshold}, {"sample", c.readiness.sample}}},
      {"method", c.method},
      {"loss",
       {{"beta", c.loss.beta},
        {"alpha", c.loss.alpha},
        {"forget_coeff", c.loss.forget_coeff},
        {"reg_coeff", c.loss.reg_coeff},
        {"me_include_question", c.loss.me_include_question}}},
      {"unlearn", TrainToJson(c.unlearn)},
      {"eval",
       {{"retain_sample", c.eval.retain_sample},
        {"mixed_pairs", c.eval.mixed_pairs},
        {"max_new_tokens_per_slot", c.eval.max_new_tokens_per_slot},
        {"cosine_against_ground_truth", c.eval.cosine_against_ground_truth},
        {"max_judge_failure_rate", c.eval.max_judge_failure_rate},
        {"stress_format", StressFormatName(c.eval.stress_format)}}},
      {"suites", c.suites},
      {"target", EvalTargetName(c.target)},
      {"remote_url", c.remote_url},
      {"judge",
       {{"mock", c.judge.mock},
        {"url", c.judge.url},
        {"model", c.judge.model},
        {"timeout_seconds", c.judge.timeout_seconds},
        {"retries", c.judge.options.retries},
        {"parallelism", c.judge.options.parallelism}}},
      {"embedder",
       {{"kind", c.embedder.kind},
        {"url", c.embedder.url},
        {"model", c.embedder.model},
        {"timeout_seconds", c.embedder.timeout_seconds}}},
      {"output_dir", c.output_dir},
      {"reference", c.reference},
      {"run_id", c.run_id},
  };
}

Tokenizer BuildCorpusTokenizer(const UnlearnSplit& split) {
  std::vector<std::string> texts;
  for (const auto* set : {&split.retain, &split.forget}) {
    for (const auto& p : *set) {
      texts.push_back(p.question);
      texts.push_back(p.answer);
      texts.push_back(p.paraphrased_answer);
      for (const auto& x : p.perturbed_answers) texts.push_back(x);
    }
  }
  for (const auto& s : split.idk_pool) texts.push_back(s);
  texts.emplace_back(TemplateAsset("stress_instruction"));
  return Tokenizer::Build(texts);
}

UnlearnSplit ResolveDataset(const RunConfig& config) {
  if (!config.dataset.empty()) {
    if (!fs::exists(config.dataset)) {
      throw UsageError("dataset '" + config.dataset + "' does not exist");
    }
    return LoadSplit(config.dataset);
  }
  CorpusSpec spec = config.corpus;
  spec.seed = config.corpus_seed.value_or(config.seed);
  return SynthesizeCorpus(spec);
}

std::unique_ptr<JudgeClient> MakeJudge(const RunConfig& config) {
  const std::string url = EnvOr(config.judge.url, "SEPSLAB_JUDGE_URL");
  if (config.judge.mock || url.empty()) return std::make_unique<MockJudge>();
  ChatJudgeConfig jc;
  jc.endpoint.url = url;
  jc.endpoint.bearer_token = EnvOr("", "SEPSLAB_JUDGE_API_KEY");
  jc.endpoint.timeout_seconds = config.judge.timeout_seconds;
  jc.model = EnvOr(config.judge.model, "SEPSLAB_JUDGE_MODEL");
  return std::make_unique<ChatJudgeClient>(jc);
}

std::unique_ptr<Embedder> MakeEmbedder(const RunConfig& config) {
  if (config.embedder.kind == "http") {
    return std::make_unique<HttpEmbedder>(
        config.embedder.url, config.embedder.model,
        EnvOr("", "SEPSLAB_EMBED_API_KEY"), config.embedder.timeout_seconds);
  }
  return std::make_unique<BagOfTokensEmbedder>();
}

double RetainRouge(const LanguageModel& model, const UnlearnSplit& split,
                   int sample, uint64_t seed) {
  Rng rng = SubStream(seed, "finetune/readiness");
  const size_t n = std::min<size_t>(sample, split.retain.size());
  if (n == 0) return 0.0;
  std::set<size_t> picked;
  while (picked.size() < n)
    picked.insert(UniformIndex(rng, split.retain.size()));
  std::vector<std::string> queries;
  std::vector<const QAPair*> pairs;
  for (size_t i : picked) {
    pairs.push_back(&split.retain[i]);
    queries.push_back(
        ComposeMixed({{SlotRole::kRetain, pairs.back()}}, model.tokenizer())
            .query_text);
  }
  const auto outputs = model.GenerateGreedyBatch(queries, 40);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const auto parsed = ParseNumberedAnswers(outputs[i], 1);
    sum += RougeLRecall(parsed[0].value_or(outputs[i]), pairs[i]->answer);
  }
  return sum / static_cast<double>(n);
}

FinetuneResult CmdFinetune(const RunConfig& config, std::ostream& log) {
  config.Validate();
  const UnlearnSplit split = ResolveDataset(config);
  const Tokenizer codec = BuildCorpusTokenizer(split);
  TransformerConfig mc = config.model;
  mc.vocab_size = codec.vocab_size();
  TinyTransformer model(mc, codec, config.seed);
  TrainConfig tc = config.finetune;
  tc.seed = config.seed;
  log << "fine-tuning " << model.num_parameters() << " parameters on "
      << split.retain.size() + split.forget.size() << " pairs\n";

  FinetuneResult result;
  json rouge_log = json::array();
  const std::vector<double> losses = Finetune(
      model, split, tc, [&](const TinyTransformer& m, EpochStats& stats) {
        result.epochs = stats.epoch;
        result.retain_rouge =
            RetainRouge(m, split, config.readiness.sample, config.seed);
        rouge_log.push_back(result.retain_rouge);
        log << "epoch " << stats.epoch << " loss " << Fixed4(stats.mean_loss)
            << " retain_rouge " << Fixed4(result.retain_rouge) << "\n";
        if (result.retain_rouge >= config.readiness.threshold)
          stats.stop = true;
      });
  result.ready = result.retain_rouge >= config.readiness.threshold;
  result.checkpoint = config.ReferencePath();
  const std::string bytes = SerializeModel(model);
  WriteFileAtomic(result.checkpoint, bytes);
  result.sha256 = Sha256Hex(bytes);
  const std::string dir = fs::path(result.checkpoint).parent_path().string();
  WriteManifest(
      dir, {{"kind", "reference"},
            {"dataset_hash", split.Hash()},
            {"seed", config.seed},
            {"checkpoint", fs::path(result.checkpoint).filename().string()},
            {"sha256", result.sha256},
            {"epochs", result.epochs},
            {"losses", losses},
            {"retain_rouge", rouge_log},
            {"ready", result.ready},
            {"readiness_threshold", config.readiness.threshold},
            {"config", RunConfigToJson(config)}});
  return result;
}

UnlearnResult CmdUnlearn(const RunConfig& config, std::ostream& log) {
  config.Validate();
  const std::string ref_path = config.ReferencePath();
  if (!fs::exists(ref_path)) {
    throw UsageError("reference checkpoint '" + ref_path +
                     "' does not exist; run finetune");
  }
  const UnlearnSplit split = ResolveDataset(config);
  const std::string ref_dir = fs::path(ref_path).parent_path().string();
  if (fs::exists(ManifestPath(ref_dir))) {
    const json ref_manifest = ReadManifest(ref_dir);
    const std::string expected = ref_manifest.value("dataset_hash", "");
    if (!expected.empty() && expected != split.Hash()) {
      throw ValidationError("reference was trained on dataset " + expected +
                            " but the configured dataset is " + split.Hash());
    }
  }
  const std::string ref_bytes = ReadFile(ref_path);
  const TinyTransformer ref = DeserializeModel(ref_bytes);
  TinyTransformer model = ref;
  LossConfig lc = config.loss;
  lc.method = ParseMethod(config.method);
  TrainConfig tc = config.unlearn;
  tc.seed = config.seed;

  UnlearnResult result;
  result.run_dir = config.RunDirectory();
  fs::create_directories(result.run_dir);
  json manifest = {
      {"kind", "unlearning"},
      {"run_id", fs::path(result.run_dir).filename().string()},
      {"method", MethodName(lc.method)},
      {"dataset_hash", split.Hash()},
      {"seed", config.seed},
      {"reference", fs::absolute(ref_path).lexically_normal().string()},
      {"reference_sha256", Sha256Hex(ref_bytes)},
      {"status", "running"},
      {"epochs", json::array()},
      {"losses", json::array()},
      {"config", RunConfigToJson(config)}};
  auto save = [&](const TinyTransformer& m, int epoch) {
    const std::string path =
        EpochDirectory(result.run_dir, epoch) + "/model.bin";
    const std::string bytes = SerializeModel(m);
    WriteFileAtomic(path, bytes);
    manifest["epochs"].push_back({{"epoch", epoch},
                                  {"path", Relative(path, result.run_dir)},
                                  {"sha256", Sha256Hex(bytes)}});
    result.epochs.push_back(epoch);
    WriteManifest(result.run_dir, manifest);
  };
  const bool arithmetic = lc.method.forget == ForgetObjective::kTaskArithmetic;
  auto wanted = [&](int epoch) {
    return epoch == tc.epochs ||
           std::find(tc.checkpoint_epochs.begin(), tc.checkpoint_epochs.end(),
                     epoch) != tc.checkpoint_epochs.end();
  };
  log << "unlearning with " << MethodName(lc.method) << " for " << tc.epochs
      << " epochs\n";
  try {
    const auto checkpoints = RunUnlearning(
        model, ref, split, lc, tc,
        [&](const TinyTransformer& m, EpochStats& s) {
          manifest["losses"].push_back(s.mean_loss);
          log << "epoch " << s.epoch << " loss " << Fixed4(s.mean_loss) << "\n";
          if (!arithmetic && wanted(s.epoch)) save(m, s.epoch);
        });
    if (arithmetic) {
      for (const auto& c : checkpoints) {
        save(TinyTransformer(ref.config(), ref.tokenizer(), c.parameters),
             c.epoch);
      }
    }
    manifest["status"] = "complete";
  } catch (const DivergenceError& e) {
    result.diverged = true;
    result.message = e.what();
    manifest["status"] = "diverged";
    manifest["error"] = e.what();
  }
  WriteManifest(result.run_dir, manifest);
  return result;
}

EvalResult CmdEval(const RunConfig& config, std::ostream& log) {
  config.Validate();
  const UnlearnSplit split = ResolveDataset(config);
  const auto judge = MakeJudge(config);
  const auto embedder = MakeEmbedder(config);
  const std::string run_dir = config.RunDirectory();

  // (epoch, model) pairs to score plus the cosine reference.
  std::vector<std::pair<int, std::unique_ptr<LanguageModel>>> models;
  std::unique_ptr<LanguageModel> ref;
  std::string method = EvalTargetName(config.target);
  switch (config.target) {
    case EvalTarget::kRun: {
      if (!fs::exists(ManifestPath(run_dir))) {
        throw UsageError("no manifest in '" + run_dir + "'; run unlearn first");
      }
      const json manifest = ReadManifest(run_dir);
      if (manifest.value("dataset_hash", "") != split.Hash()) {
        throw ValidationError("run '" + run_dir + "' used dataset " +
                              manifest.value("dataset_hash", "") +
                              " but the configured dataset is " + split.Hash());
      }
      method = manifest.value("method", config.method);
      for (const auto& e : manifest.at("epochs")) {
        const std::string path =
            (fs::path(run_dir) / e.at("path").get<std::string>()).string();
        models.emplace_back(e.at("epoch").get<int>(),
                            std::make_unique<TinyTransformer>(LoadModel(path)));
      }
      if (models.empty())
        throw ValidationError("run '" + run_dir + "' has no checkpoints");
      const std::string ref_path =
          manifest.value("reference", config.ReferencePath());
      if (fs::exists(ref_path))
        ref = std::make_unique<TinyTransformer>(LoadModel(ref_path));
      break;
    }
    case EvalTarget::kScripted:
    case EvalTarget::kIdentity: {
      const Tokenizer codec = BuildCorpusTokenizer(split);
      models.emplace_back(
          0, std::make_unique<ScriptedResponder>(
                 split, codec, config.target == EvalTarget::kScripted));
      ref = std::make_unique<ScriptedResponder>(split, codec, false);
      break;
    }
    case EvalTarget::kRemote: {
      HttpEndpoint endpoint;
      endpoint.url = config.remote_url;
      models.emplace_back(0, std::make_unique<RemoteModel>(endpoint));
      break;
    }
  }

  EvalResult result;
  std::map<int, double> h_by_epoch;
  std::map<int, ScoreReport> reports;
  std::string csv = ReportCsvHeader();
  for (const auto& [epoch, model] : models) {
    log << "evaluating epoch " << epoch << "\n";
    const std::vector<ScoreReport> parts =
        EvaluateModel(*model, ref.get(), split, config, *judge, *embedder);
    ScoreReport report = MergeReports(parts);
    report.run = fs::path(run_dir).filename().string();
    report.method = method;
    report.epoch = epoch;
    const std::string stem =
        (fs::path(run_dir) / "reports" / ("epoch_" + std::to_string(epoch)))
            .string();
    WriteFileAtomic(stem + ".json", ReportText(report));
    for (const auto& part : parts) {
      if (part.suite != "stress") continue;
      WriteFileAtomic(stem + "_stress.csv", StressTable(part));
    }
    csv += ReportCsvRow(report);
    h_by_epoch[epoch] = report.h_avg.value_or(0.0);
    result.incomplete = result.incomplete || report.incomplete;
    reports.emplace(epoch, std::move(report));
  }
  result.selected_epoch = SelectBestEpoch(h_by_epoch);
  result.report = reports.at(result.selected_epoch);
  result.report_path = (fs::path(run_dir) / "report.json").string();
  result.csv_path = (fs::path(run_dir) / "report.csv").string();
  WriteFileAtomic(result.report_path, ReportText(result.report));
  WriteFileAtomic(result.csv_path, csv);
  log << "selected epoch " << result.selected_epoch << "\n";
  return result;
}

std::string CmdGenStress(const RunConfig& config, const std::string& out_path) {
  const UnlearnSplit split = ResolveDataset(config);
  const Tokenizer codec = BuildCorpusTokenizer(split);
  const ChatTemplate chat = codec.chat_template();
  const StressGrid grid = BuildStressGrid(split, config.seed, codec);
  std::string out;
  for (size_t k = 0; k < grid.prompts.size(); ++k) {
    const MixedPrompt& p = grid.prompts[k];
    json slots = json::array();
    for (const auto& s : p.slots) {
      slots.push_back(
          {{"role", s.role == SlotRole::kRetain ? "retain" : "forget"},
           {"qa_id", s.qa_id},
           {"question", s.question},
           {"answer", s.answer}});
    }
    const std::string prompt =
        config.eval.stress_format == StressFormat::kInstruction
            ? chat.instruction_start + RenderStressInstruction(p) +
                  chat.instruction_end
            : p.query_text;
    out += json{{"index", k},
                {"line", grid.prompt_line[k]},
                {"order_tag", p.order_tag},
                {"prompt", prompt},
                {"slots", slots}}
               .dump() +
           "\n";
  }
  WriteFileAtomic(out_path, out);
  return out_path;
}

std::string CmdReport(const std::vector<std::string>& run_dirs,
                      const std::string& out_prefix) {
  if (run_dirs.empty())
    throw UsageError("report needs at least one run directory");
  std::vector<ScoreReport> reports;
  for (const auto& dir : run_dirs) {
    const std::string path = (fs::path(dir) / "report.json").string();
    if (!fs::exists(path))
      throw UsageError("no report.json in '" + dir + "'; run eval first");
    json doc;
    try {
      doc = json::parse(ReadFile(path));
    } catch (const json::parse_error& e) {
      throw ParseError(0, "bad report '" + path + "': " + e.what());
    }
    reports.push_back(ReportFromJson(doc));
  }
  for (size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].dataset_hash != reports[0].dataset_hash) {
      throw ValidationError(
          "cannot merge runs over different datasets: " + run_dirs[0] +
          " has " + reports[0].dataset_hash + ", " + run_dirs[i] + " has " +
          reports[i].dataset_hash);
    }
  }
  std::stable_sort(reports.begin(), reports.end(),
                   [](const auto& a, const auto& b) {
                     return a.h_avg.value_or(-1.0) > b.h_avg.value_or(-1.0);
                   });

  std::string csv = ReportCsvHeader();
  for (const auto& r : reports) csv += ReportCsvRow(r);

  using Getter = std::optional<double> (*)(const ScoreReport&);
  const std::vector<std::pair<std::string, Getter>> columns = {
      {"MU", [](const ScoreReport& r) { return r.mu; }},
      {"FE", [](const ScoreReport& r) { return r.fe; }},
      {"SEPS", [](const ScoreReport& r) { return r.seps; }},
      {"H-Avg", [](const ScoreReport& r) { return r.h_avg; }},
  };
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Method", "Epoch"});
  for (const auto& [name, get] : columns) cells[0].push_back(name);
  for (const auto& r : reports) {
    cells.push_back({r.method, std::to_string(r.epoch)});
  }
  for (const auto& [name, get] : columns) {
    std::optional<double> best;
    for (const auto& r : reports) {
      const auto v = get(r);
      if (v && (!best || Rounded4(*v) > Rounded4(*best))) best = v;
    }
    for (size_t i = 0; i < reports.size(); ++i) {
      const auto v = get(reports[i]);
      std::string cell = v ? Fixed4(*v) : "-";
      if (v && Rounded4(*v) == Rounded4(*best)) cell = "**" + cell + "**";
      cells[i + 1].push_back(cell);
    }
  }
  std::vector<size_t> width(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  }
  std::string text;
  for (const auto& row : cells) {
    for (size_t c = 0; c < row.size(); ++c) {
      text += row[c];
      if (c + 1 < row.size())
        text += std::string(width[c] - row[c].size() + 2, ' ');
    }
    text += "\n";
  }
  WriteFileAtomic(out_prefix + ".csv", csv);
  WriteFileAtomic(out_prefix + ".txt", text);
  return text;
}

void CmdSynth(const RunConfig& config, const std::string& out_path) {
  SaveSplit(ResolveDataset(config), out_path);
}

}  // namespace sepslab
