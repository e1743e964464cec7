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

// Runs the sepslab binary as a subprocess on tiny configurations.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "test_util.h"

namespace sepslab {
namespace {

namespace fs = std::filesystem;

constexpr char kTinyConfig[] = R"({
  "corpus": {"num_entities": 10, "qa_per_entity": 4, "forget_fraction": 0.2},
  "model": {"d_model": 16, "n_heads": 2, "n_layers": 1, "d_ff": 32, "max_context": 160},
  "finetune": {"epochs": 3, "learning_rate": 0.01, "effective_batch": 8},
  "readiness": {"threshold": 1.0, "sample": 10},
  "unlearn": {"epochs": 2, "effective_batch": 4, "checkpoint_epochs": [1, 2]},
  "eval": {"retain_sample": 5, "max_new_tokens_per_slot": 24},
  "judge": {"mock": true}
})";

struct Result {
  int code = -1;
  std::string output;
};

class CliTest : public ::testing::Test {
 protected:
  CliTest() : dir_("cli") {
    std::ofstream(fs::path(dir_.path()) / "tiny.json") << kTinyConfig;
  }

  // Runs the binary from the scratch directory with stderr folded in.
  Result Run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.path() +
                            "' && '" SEPSLAB_CLI_PATH "' --config tiny.json " +
                            args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    std::array<char, 4096> buf;
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
      r.output.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
  }

  std::string Slurp(const fs::path& relative) const {
    std::ifstream in(fs::path(dir_.path()) / relative, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  testing::TempDir dir_;
};

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  Result r = Run("--dataset missing.jsonl finetune");
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("missing.jsonl"), std::string::npos);

  r = Run("unlearn --method sgd");
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("mp-idk"), std::string::npos)
      << "lists accepted methods";

  r = Run("unlearn --method ga+gd");
  EXPECT_EQ(r.code, 2) << "no reference checkpoint yet: " << r.output;

  r = Run("eval --suite everything");
  EXPECT_EQ(r.code, 2) << r.output;

  r = Run("--set finetune.epochs=\\\"many\\\" finetune");
  EXPECT_EQ(r.code, 2) << r.output;

  EXPECT_EQ(Run("--help").code, 0);
  EXPECT_EQ(Run("frobnicate").code, 2);
}

TEST_F(CliTest, PipelineIsDeterministic) {
  for (const std::string out : {"a", "b"}) {
    const std::string base = "--seed 4 --output-dir " + out + " ";
    ASSERT_EQ(Run(base + "finetune").code, 1)
        << "readiness 1.0 is unreachable in 3 epochs";
    ASSERT_EQ(Run(base + "unlearn --method mp-me").code, 0);
    const Result e = Run(base + "--run-id mp-me-s4 eval");
    ASSERT_EQ(e.code, 0) << e.output;
  }
  const std::string a = Slurp("a/mp-me-s4/report.json");
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a, Slurp("b/mp-me-s4/report.json"));
  EXPECT_EQ(Slurp("a/mp-me-s4/report.csv"), Slurp("b/mp-me-s4/report.csv"));
  EXPECT_EQ(Slurp("a/mp-me-s4/epoch_2/model.bin"),
            Slurp("b/mp-me-s4/epoch_2/model.bin"));

  const auto report = nlohmann::json::parse(a);
  EXPECT_TRUE(report.contains("h_avg"));
  EXPECT_TRUE(report.contains("per_metric"));
  const auto manifest =
      nlohmann::json::parse(Slurp("a/mp-me-s4/manifest.json"));
  EXPECT_EQ(manifest["status"], "complete");
  EXPECT_EQ(manifest["epochs"].size(), 2u);
}

TEST_F(CliTest, TaskArithmeticWritesOneCheckpoint) {
  ASSERT_EQ(Run("finetune").code, 1);
  const Result r = Run("unlearn --method ta");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto manifest =
      nlohmann::json::parse(Slurp("runs/ta-s0/manifest.json"));
  ASSERT_EQ(manifest["epochs"].size(), 1u);
  EXPECT_EQ(manifest["epochs"][0]["epoch"], 2);
}

TEST_F(CliTest, ScriptedTargetSeparates) {
  const Result r = Run("--run-id oracle eval --target scripted");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto report = nlohmann::json::parse(Slurp("runs/oracle/report.json"));
  EXPECT_GE(report["seps"].get<double>(), 0.95);
}

TEST_F(CliTest, ReportRejectsMixedDatasets) {
  ASSERT_EQ(Run("--run-id one eval --target scripted").code, 0);
  ASSERT_EQ(Run("--seed 9 --run-id two eval --target identity").code, 0);
  const Result bad = Run("report runs/one runs/two --out table");
  EXPECT_NE(bad.code, 0);
  EXPECT_NE(bad.output.find("different datasets"), std::string::npos)
      << bad.output;

  ASSERT_EQ(Run("--run-id three eval --target identity").code, 0);
  const Result ok = Run("report runs/one runs/three --out table");
  ASSERT_EQ(ok.code, 0) << ok.output;
  const std::string text = Slurp("table.txt");
  EXPECT_NE(text.find("**"), std::string::npos) << text;
  EXPECT_LT(text.find("scripted"), text.find("identity")) << "sorted by H-Avg";
}

TEST_F(CliTest, ExportsStressPrompts) {
  const Result r =
      Run("--set corpus.num_entities=200 --set corpus.qa_per_entity=20 "
          "--set corpus.forget_fraction=0.01 gen-stress --out stress.jsonl");
  ASSERT_EQ(r.code, 0) << r.output;
  std::istringstream lines(Slurp("stress.jsonl"));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const auto doc = nlohmann::json::parse(line);
    EXPECT_EQ(doc["index"], count);
    ++count;
  }
  EXPECT_EQ(count, 180);
}

TEST_F(CliTest, SynthRoundTripsThroughDataset) {
  ASSERT_EQ(Run("synth --out split.jsonl").code, 0);
  const Result r =
      Run("--dataset split.jsonl --run-id s eval --target scripted");
  ASSERT_EQ(r.code, 0) << r.output;
  ASSERT_EQ(Run("--run-id t eval --target scripted").code, 0);
  const auto a = nlohmann::json::parse(Slurp("runs/s/report.json"));
  const auto b = nlohmann::json::parse(Slurp("runs/t/report.json"));
  EXPECT_EQ(a["dataset_hash"], b["dataset_hash"]);
}

}  // namespace
}  // namespace sepslab
