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

#include "sepslab/trainer.h"

#include <gtest/gtest.h>

#include <cmath>

#include "sepslab/errors.h"
#include "sepslab/pipeline.h"
#include "test_util.h"

namespace sepslab {
namespace {

TEST(LrAtTest, WarmupThenLinearDecay) {
  EXPECT_EQ(LrAt(0, 40, 4, 1e-3), 0.0);
  EXPECT_DOUBLE_EQ(LrAt(4, 40, 4, 1e-3), 1e-3);
  EXPECT_DOUBLE_EQ(LrAt(2, 40, 4, 1e-3), 5e-4);
  EXPECT_DOUBLE_EQ(LrAt(22, 40, 4, 1e-3), 5e-4);
  EXPECT_EQ(LrAt(40, 40, 4, 1e-3), 0.0);
  EXPECT_DOUBLE_EQ(LrAt(2, 4, 4, 1.0), 1.0);
  EXPECT_THROW(LrAt(41, 40, 4, 1e-3), ValidationError);
  EXPECT_THROW(LrAt(-1, 40, 4, 1e-3), ValidationError);
}

TEST(SelectBestEpochTest, Examples) {
  EXPECT_EQ(SelectBestEpoch({{5, 0.10}, {10, 0.37}}), 10);
  EXPECT_EQ(SelectBestEpoch({{5, 0.2}, {10, 0.2}}), 5);
  EXPECT_EQ(SelectBestEpoch({{7, 0.0}}), 7);
  EXPECT_THROW(SelectBestEpoch({}), ValidationError);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  c.learning_rate = 0;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = TrainConfig();
  c.epochs = 0;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = TrainConfig();
  c.effective_batch = 0;
  EXPECT_THROW(c.Validate(), ValidationError);
}

TEST(AdamWTest, FirstStepMovesBySignTimesRate) {
  TrainConfig c;
  c.weight_decay = 0.0;
  AdamW opt(3, c);
  std::vector<double> theta = {1.0, 1.0, 1.0};
  opt.Step(theta, std::vector<double>{2.0, -0.5, 0.0}, 0.1);
  EXPECT_NEAR(theta[0], 0.9, 1e-7);
  EXPECT_NEAR(theta[1], 1.1, 1e-7);
  EXPECT_EQ(theta[2], 1.0);
  EXPECT_THROW(opt.Step(theta, std::vector<double>{1.0}, 0.1), ValidationError);
}

class TrainerTest : public ::testing::Test {
 protected:
  TrainerTest()
      : split_(testing::SmallSplit(8, 4, 0.25)),
        codec_(BuildCorpusTokenizer(split_)) {}

  TinyTransformer Model(uint64_t seed, int d_model = 8,
                        int max_context = 96) const {
    return testing::SmallModel(seed, codec_, d_model, 1, max_context);
  }

  std::vector<TokenSequence> Singles() const {
    std::vector<TokenSequence> out;
    for (const auto& p : split_.retain) {
      out.push_back(ComposeMixed({{SlotRole::kRetain, &p}}, codec_).tokens);
    }
    for (const auto& p : split_.forget) {
      out.push_back(ComposeMixed({{SlotRole::kForget, &p}}, codec_).tokens);
    }
    return out;
  }

  UnlearnSplit split_;
  Tokenizer codec_;
};

TEST_F(TrainerTest, AccumulationMatchesFullBatch) {
  const std::vector<TokenSequence> batch = Singles();
  ASSERT_EQ(batch.size(), 32u);
  TrainConfig c;
  TinyTransformer full = Model(1), accumulated = Model(1);
  AdamW opt_full(full.num_parameters(), c),
      opt_acc(accumulated.num_parameters(), c);
  for (int step = 0; step < 3; ++step) {
    const double a = NllStep(full, opt_full, batch, 0, 1e-2);
    const double b = NllStep(accumulated, opt_acc, batch, 4, 1e-2);
    EXPECT_NEAR(a, b, 1e-6);
  }
  for (size_t i = 0; i < full.num_parameters(); ++i) {
    ASSERT_NEAR(full.parameters()[i], accumulated.parameters()[i], 1e-9) << i;
  }
}

TEST_F(TrainerTest, ZeroCoefficientsLeaveOnlyWeightDecay) {
  const TinyTransformer ref = Model(2);
  TinyTransformer model = ref;
  LossConfig loss;
  loss.method = ParseMethod("npo+kl");
  loss.forget_coeff = 0.0;
  loss.reg_coeff = 0.0;
  TrainConfig c;
  c.learning_rate = 0.05;
  c.weight_decay = 0.1;
  c.effective_batch = 4;
  c.epochs = 3;
  RunUnlearning(model, ref, split_, loss, c);
  const int per_epoch = static_cast<int>((split_.forget.size() + 3) / 4);
  const int total = per_epoch * c.epochs;
  double factor = 1.0;
  for (int s = 0; s < total; ++s)
    factor *= 1.0 - LrAt(s, total, per_epoch, 0.05) * 0.1;
  for (size_t i = 0; i < model.num_parameters(); ++i) {
    ASSERT_NEAR(model.parameters()[i], ref.parameters()[i] * factor, 1e-12)
        << i;
  }
}

TEST_F(TrainerTest, SeededRunsAreIdentical) {
  TrainConfig c;
  c.epochs = 2;
  c.effective_batch = 8;
  c.seed = 9;
  TinyTransformer a = Model(3), b = Model(3);
  EXPECT_EQ(Finetune(a, split_, c), Finetune(b, split_, c));
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(),
                         b.parameters().begin()));

  LossConfig loss;
  loss.method = ParseMethod("mp-idk");
  const TinyTransformer ref = a;
  TinyTransformer ua = a, ub = a;
  const auto ca = RunUnlearning(ua, ref, split_, loss, c);
  const auto cb = RunUnlearning(ub, ref, split_, loss, c);
  ASSERT_EQ(ca.size(), cb.size());
  EXPECT_EQ(ca.back().parameters, cb.back().parameters);
}

TEST_F(TrainerTest, ObserverCanStopFinetuning) {
  TrainConfig c;
  c.epochs = 5;
  TinyTransformer m = Model(4);
  int calls = 0;
  const auto losses =
      Finetune(m, split_, c, [&](const TinyTransformer&, EpochStats& s) {
        ++calls;
        s.stop = s.epoch == 2;
      });
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(losses.size(), 2u);
}

TEST_F(TrainerTest, CheckpointEpochsAndTaskArithmetic) {
  const TinyTransformer ref = Model(5);
  TrainConfig c;
  c.epochs = 4;
  c.checkpoint_epochs = {2, 4};
  LossConfig loss;
  loss.method = ParseMethod("ga+gd");
  TinyTransformer m = ref;
  auto cps = RunUnlearning(m, ref, split_, loss, c);
  ASSERT_EQ(cps.size(), 2u);
  EXPECT_EQ(cps[0].epoch, 2);
  EXPECT_EQ(cps[1].epoch, 4);

  loss.method = ParseMethod("ta");
  TinyTransformer t = ref;
  TinyTransformer reinforced = ref;
  cps = RunUnlearning(
      t, ref, split_, loss, c,
      [&](const TinyTransformer& r, EpochStats&) { reinforced = r; });
  ASSERT_EQ(cps.size(), 1u);
  EXPECT_EQ(cps[0].epoch, 4);
  const auto expected =
      TaskArithmetic(ref.parameters(), reinforced.parameters(), loss.alpha);
  EXPECT_EQ(cps[0].parameters, expected);
}

TEST_F(TrainerTest, NonFiniteLossDiverges) {
  std::vector<double> huge(Model(6).num_parameters(), 1e300);
  TinyTransformer ref(Model(6).config(), codec_, huge);
  TinyTransformer m = ref;
  LossConfig loss;
  loss.method = ParseMethod("ga");
  TrainConfig c;
  c.epochs = 1;
  EXPECT_THROW(RunUnlearning(m, ref, split_, loss, c), DivergenceError);
}

// Mean per-token entropy of the model's predictions over the forget answer
// positions of RF and FR prompts.
double ForgetAnswerEntropy(const TinyTransformer& model,
                           const UnlearnSplit& split, const Tokenizer& codec) {
  double total = 0.0;
  int count = 0;
  for (const auto& f : split.forget) {
    const QAPair& r = split.retain.front();
    for (const auto& prompt :
         {ComposeMixed({{SlotRole::kRetain, &r}, {SlotRole::kForget, &f}},
                       codec),
          ComposeMixed({{SlotRole::kForget, &f}, {SlotRole::kRetain, &r}},
                       codec)}) {
      for (const auto& slot : prompt.slots) {
        if (slot.role != SlotRole::kForget) continue;
        for (int t = slot.answer_content.begin; t < slot.answer_content.end;
             ++t) {
          const auto lp =
              model.NextTokenLogProbs(std::span(prompt.tokens.ids).first(t));
          for (double x : lp) total -= std::exp(x) * x;
          ++count;
        }
      }
    }
  }
  return total / count;
}

class UnlearningBehaviorTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    split_ = new UnlearnSplit(testing::SmallSplit(6, 4, 0.5, 21));
    split_->idk_pool = {"I don't know."};
    codec_ = new Tokenizer(BuildCorpusTokenizer(*split_));
    reference_ =
        new TinyTransformer(testing::SmallModel(8, *codec_, 32, 1, 128));
    TrainConfig c;
    c.learning_rate = 3e-3;
    c.epochs = 30;
    c.effective_batch = 4;
    c.mixed_prompt_ratio = 0.5;
    Finetune(*reference_, *split_, c);
  }
  static void TearDownTestSuite() {
    delete reference_;
    delete codec_;
    delete split_;
  }

  static TrainConfig UnlearnConfig() {
    TrainConfig c;
    c.learning_rate = 5e-2;
    c.epochs = 10;
    c.effective_batch = 1;
    c.checkpoint_epochs = {10};
    return c;
  }

  static UnlearnSplit* split_;
  static Tokenizer* codec_;
  static TinyTransformer* reference_;
};

UnlearnSplit* UnlearningBehaviorTest::split_ = nullptr;
Tokenizer* UnlearningBehaviorTest::codec_ = nullptr;
TinyTransformer* UnlearningBehaviorTest::reference_ = nullptr;

TEST_F(UnlearningBehaviorTest, MpMeFlattensForgetAnswers) {
  const double log_k = std::log(static_cast<double>(codec_->vocab_size()));
  EXPECT_LT(ForgetAnswerEntropy(*reference_, *split_, *codec_), 0.5 * log_k);
  TinyTransformer m = *reference_;
  LossConfig loss;
  loss.method = ParseMethod("mp-me");
  RunUnlearning(m, *reference_, *split_, loss, UnlearnConfig());
  EXPECT_GE(ForgetAnswerEntropy(m, *split_, *codec_), 0.9 * log_k);
}

TEST_F(UnlearningBehaviorTest, IdkGdRefusesForgetQuestions) {
  TinyTransformer m = *reference_;
  LossConfig loss;
  loss.method = ParseMethod("idk+gd");
  RunUnlearning(m, *reference_, *split_, loss, UnlearnConfig());
  for (const auto& f : split_->forget) {
    const MixedPrompt p = ComposeMixed({{SlotRole::kForget, &f}}, *codec_);
    const std::string out = m.GenerateGreedy(p.query_text, 12);
    EXPECT_EQ(out.rfind("1. I don't know", 0), 0u)
        << f.question << " -> " << out;
  }
}

}  // namespace
}  // namespace sepslab
