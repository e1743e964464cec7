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

// sepslab: fine-tune, unlearn, evaluate and report from the command line.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sepslab/checkpoint.h"
#include "sepslab/errors.h"
#include "sepslab/model_server.h"
#include "sepslab/pipeline.h"

namespace {

using sepslab::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Turns "a.b.c=value" into {"a": {"b": {"c": value}}}; the value is parsed
// as JSON when possible and kept as a string otherwise.
nlohmann::json OverrideDoc(const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw sepslab::UsageError("--set expects key=value, got '" + assignment +
                              "'");
  }
  nlohmann::json value =
      nlohmann::json::parse(assignment.substr(eq + 1), nullptr, false);
  if (value.is_discarded()) value = assignment.substr(eq + 1);
  std::vector<std::string> keys;
  std::string key = assignment.substr(0, eq);
  for (size_t dot; (dot = key.find('.')) != std::string::npos;
       key.erase(0, dot + 1)) {
    keys.push_back(key.substr(0, dot));
  }
  keys.push_back(key);
  for (auto it = keys.rbegin(); it != keys.rend(); ++it) value = {{*it, value}};
  return value;
}

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<uint64_t> seed;
  std::string dataset, output_dir, run_id, reference, method, target,
      remote_url;
  std::vector<std::string> suites;
  bool mock_judge = false;
};

RunConfig Resolve(const Options& o) {
  RunConfig c = o.config_path.empty() ? RunConfig()
                                      : sepslab::LoadRunConfig(o.config_path);
  for (const auto& s : o.sets) sepslab::ApplyConfigJson(c, OverrideDoc(s));
  if (o.seed) c.seed = *o.seed;
  if (!o.dataset.empty()) c.dataset = o.dataset;
  if (!o.output_dir.empty()) c.output_dir = o.output_dir;
  if (!o.run_id.empty()) c.run_id = o.run_id;
  if (!o.reference.empty()) c.reference = o.reference;
  if (!o.method.empty()) {
    c.method = o.method;
    c.loss.method = sepslab::ParseMethod(o.method);
  }
  if (!o.target.empty()) c.target = sepslab::ParseEvalTarget(o.target);
  if (!o.remote_url.empty()) c.remote_url = o.remote_url;
  if (!o.suites.empty()) c.suites = o.suites;
  if (o.mock_judge) c.judge.mock = true;
  c.Validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-prompt unlearning benchmark harness"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "JSON run configuration");
  app.add_option("--set", o.sets,
                 "Override a config key, e.g. unlearn.epochs=5");
  app.add_option("--seed", o.seed, "Root seed");
  app.add_option("--dataset", o.dataset, "Split JSONL (default: synthesize)");
  app.add_option("--output-dir", o.output_dir,
                 "Directory for checkpoints and reports");
  app.add_option("--run-id", o.run_id,
                 "Run directory name under the output directory");
  app.add_option("--reference", o.reference, "Reference checkpoint path");
  app.add_flag("--mock-judge", o.mock_judge, "Use the offline judge");

  auto* finetune = app.add_subcommand("finetune", "Train the reference model");
  auto* unlearn = app.add_subcommand("unlearn", "Unlearn the forget set");
  unlearn->add_option("--method", o.method, "Unlearning method");
  auto* eval = app.add_subcommand("eval", "Evaluate a run");
  eval->add_option("--suite", o.suites, "single, mixed or stress (repeatable)");
  eval->add_option("--target", o.target, "run, scripted, identity or remote");
  eval->add_option("--remote-url", o.remote_url,
                   "Model server for target remote");
  std::string stress_out = "stress_prompts.jsonl";
  auto* gen_stress =
      app.add_subcommand("gen-stress", "Export the stress prompts");
  gen_stress->add_option("--out", stress_out, "Output JSONL");
  std::vector<std::string> run_dirs;
  std::string report_out = "report";
  auto* report = app.add_subcommand("report", "Compare evaluated runs");
  report->add_option("runs", run_dirs, "Run directories")->required();
  report->add_option("--out", report_out, "Output prefix for .csv and .txt");
  std::string synth_out = "split.jsonl";
  auto* synth = app.add_subcommand("synth", "Write the synthetic split");
  synth->add_option("--out", synth_out, "Output JSONL");
  std::string checkpoint;
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve a checkpoint over HTTP");
  serve->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*report) {
      std::cout << sepslab::CmdReport(run_dirs, report_out);
      return kExitOk;
    }
    if (*serve) {
      const sepslab::TinyTransformer model = sepslab::LoadModel(checkpoint);
      sepslab::ModelServer server(model);
      std::cerr << "serving " << checkpoint << " on " << host << ":" << port
                << "\n";
      server.Serve(host, port);
      return kExitOk;
    }
    const RunConfig config = Resolve(o);
    if (*finetune) {
      const auto r = sepslab::CmdFinetune(config, std::cerr);
      std::cout << r.checkpoint << "\n";
      if (!r.ready) {
        std::cerr << "readiness gate unmet: retain ROUGE " << r.retain_rouge
                  << " < " << config.readiness.threshold << " after "
                  << r.epochs << " epochs\n";
        return kExitFailure;
      }
    } else if (*unlearn) {
      const auto r = sepslab::CmdUnlearn(config, std::cerr);
      std::cout << r.run_dir << "\n";
      if (r.diverged) {
        std::cerr << "unlearning diverged: " << r.message << "\n";
        return kExitFailure;
      }
    } else if (*eval) {
      const auto r = sepslab::CmdEval(config, std::cerr);
      std::cout << r.report_path << "\n";
      if (r.incomplete) {
        std::cerr << "report incomplete: judge failures above threshold\n";
        return kExitFailure;
      }
    } else if (*gen_stress) {
      std::cout << sepslab::CmdGenStress(config, stress_out) << "\n";
    } else if (*synth) {
      sepslab::CmdSynth(config, synth_out);
      std::cout << synth_out << "\n";
    }
    return kExitOk;
  } catch (const sepslab::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
