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

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "loss_fixture.h"
#include "oracles.h"
#include "paper_tables.h"
#include "sepslab/evaluation.h"
#include "sepslab/losses.h"
#include "sepslab/metrics.h"
#include "sepslab/pipeline.h"
#include "sepslab/prompt_composer.h"
#include "sepslab/scoring.h"
#include "sepslab/scripted_responder.h"

namespace sepslab {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates failed checks into one outcome.
class Checker {
 public:
  void Near(const std::string& what, double got, double want, double tol) {
    ++checks_;
    if (std::abs(got - want) <= tol) return;
    Fail(what + " = " + Fmt(got) + ", expected " + Fmt(want) + " +/- " +
         Fmt(tol));
  }
  void True(const std::string& what, bool ok) {
    ++checks_;
    if (!ok) Fail(what);
  }
  void Fail(const std::string& why) {
    ++failures_;
    if (failures_ <= 5) notes_.push_back(why);
  }
  Outcome Done(const std::string& summary) const {
    Outcome o{failures_ == 0, summary + " (" +
                                  std::to_string(checks_ - failures_) + "/" +
                                  std::to_string(checks_) + " checks)"};
    for (const auto& n : notes_) o.detail += "; " + n;
    if (failures_ > static_cast<int>(notes_.size())) {
      o.detail +=
          "; ... " + std::to_string(failures_ - notes_.size()) + " more";
    }
    return o;
  }
  static std::string Fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
  }

 private:
  int checks_ = 0;
  int failures_ = 0;
  std::vector<std::string> notes_;
};

Outcome AggregationFidelity() {
  Checker c;
  c.Near("MU(0.9050, 0.9344, 0.4391, 0.8850)",
         ModelUtility(0.9050, 0.9344, 0.4391, 0.8850), 0.7165, 5e-4);
  c.Near("FE(0.0141, 0.0010, 0.1073, 0.0000)",
         ForgetEfficacy(0.0141, 0.0010, 0.1073, 0.0), 0.9694, 5e-4);
  c.Near(
      "SEPS(0.0214, 0.0471, 0.0500)",
      AggregateSeps({{"rouge", 0.0214}, {"cosine", 0.0471}, {"judge", 0.0500}}),
      0.0395, 5e-4);
  c.Near("H-Avg(0.7165, 0.9694, 0.0395)", HAvg(0.7165, 0.9694, 0.0395), 0.1081,
         5e-4);
  c.Near("H-Avg(0.6810, 0.7744, 0.2787)", HAvg(0.6810, 0.7744, 0.2787), 0.4726,
         5e-4);
  return c.Done("published aggregation examples");
}

Outcome FullTableRegression() {
  Checker c;
  int rows = 0;
  for (const auto& row : testing::kPaperRows) {
    if (!row.has_summary) continue;
    ++rows;
    const std::string name = std::string(row.task) + " " + row.method;
    c.Near(name + " MU",
           ModelUtility(row.retain[0], row.retain[1], row.retain[2],
                        row.retain[3]),
           row.summary[0], 5e-4);
    c.Near(name + " FE",
           ForgetEfficacy(row.forget[0], row.forget[1], row.forget[2],
                          row.forget[3]),
           row.summary[1], 5e-4);
    c.Near(name + " SEPS",
           AggregateSeps({{"rouge", row.seps[0]},
                          {"cosine", row.seps[1]},
                          {"judge", row.seps[2]}}),
           row.summary[2], 5e-4);
  }
  return c.Done(std::to_string(rows) + " method rows");
}

Outcome LossFixedPoints() {
  const testing::LossFixture fx;
  const TinyTransformer model = fx.Model(1, 0.3);
  const TinyTransformer& ref = model;
  const double ln2 = std::log(2.0);
  Checker c;
  c.Near("NPO at theta_ref", LossNpo(model, ref, fx.forget, 0.1), 2 / 0.1 * ln2,
         1e-6);
  c.Near("DPO at theta_ref", LossDpo(model, ref, fx.dpo, 0.1), 1 / 0.1 * ln2,
         1e-6);
  const std::vector<PreferencePair> tie = {{fx.retain[0], fx.retain[0]},
                                           {fx.retain[1], fx.retain[1]}};
  c.Near("AP at indifference", LossAp(model, tie, 0.1), 1 / 0.1 * ln2, 1e-6);
  TinyTransformer uniform = fx.Model(2, 0.0);
  std::fill(uniform.mutable_parameters().begin(),
            uniform.mutable_parameters().end(), 0.0);
  c.Near("ME on a uniform model", LossMe(uniform, fx.forget), 0.0, 1e-8);
  c.Near("MP-ME on a uniform model equal to its reference",
         LossMpMe(uniform, uniform, fx.mixed), 0.0, 1e-8);
  return c.Done("NPO " + Checker::Fmt(LossNpo(model, ref, fx.forget, 0.1)) +
                ", DPO/AP " + Checker::Fmt(LossDpo(model, ref, fx.dpo, 0.1)));
}

Outcome GradientChecks() {
  const testing::LossFixture fx;
  const TinyTransformer model = fx.Model(9, 0.3);
  const TinyTransformer ref = fx.Model(10, 0.3);
  Checker c;
  c.True("toy model has at most 5000 parameters",
         model.num_parameters() <= 5000);
  double worst = 0.0;
  for (const auto& [name, fn] : fx.Losses(ref)) {
    const double err = testing::MaxGradientError(model, fn, 10, 11);
    worst = std::max(worst, err);
    c.True(name + " relative error " + Checker::Fmt(err), err < 1e-4);
  }
  return c.Done("10 losses, " + std::to_string(model.num_parameters()) +
                " parameters, worst relative error " + Checker::Fmt(worst));
}

Outcome MetricOracles() {
  Checker c;
  std::mt19937_64 gen(2026);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> cand(gen() % 13), ref(1 + gen() % 12);
    std::string cs, rs;
    for (auto& t : cand) cs += (t = alphabet[gen() % alphabet.size()]) + " ";
    for (auto& t : ref) rs += (t = alphabet[gen() % alphabet.size()]) + " ";
    const double want = static_cast<double>(testing::BruteForceLcs(cand, ref)) /
                        static_cast<double>(ref.size());
    c.True("rouge_l_recall('" + cs + "', '" + rs + "')",
           RougeLRecall(cs, rs) == want);
  }

  // Truth ratio on a model whose per-token probabilities are fixed by table.
  const Tokenizer codec =
      Tokenizer::Build({"Where is it? Oslo Bergen Paris Rome Lima"});
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<int, double> table;
    std::vector<double> p;
    for (const char* w : {" Oslo", " Bergen", " Paris", " Rome"}) {
      p.push_back(u(gen));
      table[codec.Encode(w)[0]] = p.back();
    }
    const testing::TableModel model(codec, table, 0.5);
    const double direct =
        std::max(1.0 - std::pow(p[1] * p[2] * p[3], 1.0 / 3.0) / p[0], 0.0);
    c.True("truth_ratio from probabilities",
           TruthRatio(p[0], {p[1], p[2], p[3]}) == direct);
    c.Near(
        "truth_ratio through the model",
        TruthRatio(model, "Where is it?", "Oslo", {"Bergen", "Paris", "Rome"}),
        direct, 1e-12);
  }
  return c.Done("1000 random LCS cases, 200 truth-ratio assignments");
}

Outcome StressGridStructure() {
  const UnlearnSplit split = SynthesizeCorpus(CorpusSpec{});
  const Tokenizer codec = BuildCorpusTokenizer(split);
  const StressGrid grid = BuildStressGrid(split, 0, codec);
  Checker c;
  c.True("180 prompts", grid.prompts.size() == 180);
  std::multiset<std::tuple<int, int, char>> expected;
  for (int r : {1, 2, 4}) {
    for (int f : {1, 2, 4}) {
      expected.insert({r, f, 'R'});
      expected.insert({r, f, 'F'});
    }
  }
  std::map<int, std::multiset<std::tuple<int, int, char>>> by_line;
  for (size_t i = 0; i < grid.prompts.size(); ++i) {
    const std::string& tag = grid.prompts[i].order_tag;
    const int r = static_cast<int>(std::count(tag.begin(), tag.end(), 'R'));
    const int f = static_cast<int>(std::count(tag.begin(), tag.end(), 'F'));
    by_line[grid.prompt_line[i]].insert({r, f, tag.front()});
    if (r == 4 && f == 4) {
      c.True("4-4 prompt has 8 questions", grid.prompts[i].slots.size() == 8);
    }
  }
  c.True("10 lines", by_line.size() == 10);
  for (const auto& [line, counts] : by_line) {
    c.True("line " + std::to_string(line) + " has 18 prompts",
           counts.size() == 18);
    c.True("line " + std::to_string(line) +
               " covers {1,2,4}x{1,2,4} in both orders",
           counts == expected);
  }
  return c.Done("180 prompts over 10 lines");
}

Outcome ScriptedOracleBounds() {
  const UnlearnSplit split = SynthesizeCorpus(CorpusSpec{});
  const Tokenizer codec = BuildCorpusTokenizer(split);
  const ScriptedResponder oracle(split, codec, true);
  const ScriptedResponder identity(split, codec, false);
  const MockJudge judge;
  const BagOfTokensEmbedder embedder;
  EvalConfig config;
  const ScoreReport good = EvaluateSuite(oracle, &identity, split, judge,
                                         embedder, Suite::kMixed, config);
  const ScoreReport none = EvaluateSuite(identity, &identity, split, judge,
                                         embedder, Suite::kMixed, config);
  Checker c;
  c.True("scripted SEPS >= 0.95", good.seps.value_or(-1) >= 0.95);
  c.True("identity SEPS <= 0.05", none.seps.value_or(2) <= 0.05);
  return c.Done("scripted SEPS " + Checker::Fmt(good.seps.value_or(NAN)) +
                ", identity SEPS " + Checker::Fmt(none.seps.value_or(NAN)));
}

// Desk-scale configuration shared by the directional experiment.
RunConfig DeskConfig(const fs::path& dir) {
  RunConfig c;
  c.output_dir = dir.string();
  c.corpus_seed = 0;
  c.judge.mock = true;
  return c;
}

Outcome DirectionalExperiment(const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  fs::remove_all(dir);
  std::ostringstream log;
  RunConfig base = DeskConfig(dir);
  const FinetuneResult ft = CmdFinetune(base, log);
  const std::vector<std::string> methods = {"mp-idk", "idk+gd", "mp-me",
                                            "me+gd"};
  std::map<std::string, double> mean;
  std::string per_seed;
  for (uint64_t seed : {1, 2, 3}) {
    for (const auto& method : methods) {
      RunConfig c = base;
      c.seed = seed;
      c.method = method;
      const UnlearnResult u = CmdUnlearn(c, log);
      const EvalResult e = CmdEval(c, log);
      const double seps = e.report.seps.value_or(0.0);
      mean[method] += seps / 3;
      per_seed += " " + method + "/s" + std::to_string(seed) + "=" +
                  Checker::Fmt(seps) + "@" + std::to_string(e.selected_epoch);
    }
  }
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count() /
      60;
  Checker c;
  c.True("reference ready (retain ROUGE " + Checker::Fmt(ft.retain_rouge) + ")",
         ft.ready);
  c.True("MP-IDK > IDK+GD", mean["mp-idk"] > mean["idk+gd"]);
  c.True("MP-ME > ME+GD", mean["mp-me"] > mean["me+gd"]);
  c.True("runtime under 30 minutes", minutes < 30);
  std::string summary = "mean SEPS";
  for (const auto& m : methods)
    summary += " " + m + "=" + Checker::Fmt(mean[m]);
  summary += ", " + Checker::Fmt(minutes) + " min, reference retain ROUGE " +
             Checker::Fmt(ft.retain_rouge) + " after " +
             std::to_string(ft.epochs) + " epochs;" + per_seed;
  return c.Done(summary);
}

// Every report file of a run directory, keyed by relative path.
std::map<std::string, std::string> ReportFiles(const fs::path& run) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(run)) {
    const std::string ext = entry.path().extension().string();
    if (entry.path().filename() == "manifest.json") continue;
    if (ext != ".json" && ext != ".csv") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(entry.path(), run).string()] = ss.str();
  }
  return out;
}

Outcome Determinism(const fs::path& dir) {
  fs::remove_all(dir);
  std::vector<std::map<std::string, std::string>> files;
  for (const std::string sub : {"first", "second"}) {
    RunConfig c;
    c.output_dir = (dir / sub).string();
    c.judge.mock = true;
    c.seed = 7;
    c.corpus = {
        .num_entities = 20, .qa_per_entity = 20, .forget_fraction = 0.1};
    c.model.d_model = 16;
    c.model.n_heads = 2;
    c.model.n_layers = 1;
    c.model.d_ff = 32;
    c.model.max_context = 400;
    c.finetune.epochs = 2;
    c.readiness.sample = 20;
    c.unlearn.epochs = 2;
    c.unlearn.checkpoint_epochs = {1, 2};
    c.eval.retain_sample = 10;
    c.eval.max_new_tokens_per_slot = 12;
    c.suites = {"single", "mixed", "stress"};
    std::ostringstream log;
    CmdFinetune(c, log);
    std::map<std::string, std::string> all;
    for (const std::string method : {"mp-me", "idk+ap"}) {
      c.method = method;
      c.run_id.clear();
      CmdUnlearn(c, log);
      CmdEval(c, log);
      for (auto& [name, bytes] : ReportFiles(c.RunDirectory()))
        all[method + "/" + name] = bytes;
    }
    files.push_back(std::move(all));
  }
  Checker c;
  c.True("report files written", !files[0].empty());
  c.True("same report file set", files[0].size() == files[1].size());
  for (const auto& [name, bytes] : files[0]) {
    const auto it = files[1].find(name);
    c.True(name + " byte-identical",
           it != files[1].end() && it->second == bytes);
  }
  return c.Done(std::to_string(files[0].size()) + " report files compared");
}

}  // namespace
}  // namespace sepslab

int main(int argc, char** argv) {
  using sepslab::Outcome;
  CLI::App app("SEPS acceptance suite");
  std::vector<int> only;
  std::string work =
      (std::filesystem::temp_directory_path() / "sepslab_acceptance").string();
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--work-dir", work, "Scratch directory for pipeline runs");
  CLI11_PARSE(app, argc, argv);

  const std::filesystem::path dir(work);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria =
      {
          {"aggregation fidelity", sepslab::AggregationFidelity},
          {"full-table regression", sepslab::FullTableRegression},
          {"loss fixed points", sepslab::LossFixedPoints},
          {"gradient checks", sepslab::GradientChecks},
          {"metric oracles", sepslab::MetricOracles},
          {"stress-grid structure", sepslab::StressGridStructure},
          {"scripted-oracle SEPS bounds", sepslab::ScriptedOracleBounds},
          {"directional desk-scale experiment",
           [&] { return sepslab::DirectionalExperiment(dir / "directional"); }},
          {"determinism",
           [&] { return sepslab::Determinism(dir / "determinism"); }},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
      continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("criterion %d: %s - %s [%.1fs] %s\n", id,
                o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), seconds,
                o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
