// Copyright 2026 The SELD Forge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "grad_check.h"
#include "seld/checkpoint.h"
#include "seld/toynet.h"
#include "test_util.h"
#include "toy_data.h"

namespace seld {
namespace {

ToyNetConfig SmallConfig(bool soft_sharing = true) {
  ToyNetConfig c;
  c.in_bins = 16;
  c.freq_pool = 2;
  c.conv_widths = {4, 6};
  c.hidden = 8;
  c.num_classes = 5;
  c.soft_sharing = soft_sharing;
  return c;
}

FeatureTensor RandomInput(uint64_t seed, int frames = 12, int bins = 16) {
  Rng rng(seed);
  FeatureTensor f(FeatureLayout::kStackedLogMelIv, BinScale::kMel, frames, bins);
  for (double& v : f.data) v = rng.Normal();
  return f;
}

TrackwiseSeq RandomLabels(uint64_t seed, int frames, int classes) {
  Rng rng(seed);
  TrackwiseSeq seq(frames, TrackwiseFrame(3, classes));
  for (auto& f : seq) {
    for (int m = 0; m < 3; ++m) {
      if (rng.Uniform() < 0.5) continue;
      f.Sed(m, rng.UniformInt(0, classes - 1)) = 1.0;
      f.SetDoa(m, testing::RandomDirection(rng));
    }
  }
  return seq;
}

TEST(ToyNet, DefaultParameterBudget) {
  ToyNet net(ToyNetConfig{}, 1);
  EXPECT_LT(net.NumParameters(), 200000);
  EXPECT_GT(net.NumParameters(), 1000);
  ToyNetConfig dense;
  dense.dense = true;
  EXPECT_LT(ToyNet(dense, 1).NumParameters(), 200000);
}

TEST(ToyNet, OutputShapeAndRange) {
  ToyNet net(SmallConfig(), 2);
  const TrackwiseSeq out = net.Forward(RandomInput(1, 13));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(ToyNet::OutputFrames(13), 3);
  for (const auto& f : out) {
    EXPECT_EQ(f.num_tracks, 3);
    EXPECT_EQ(f.num_classes, 5);
    for (double v : f.sed) EXPECT_TRUE(v > 0.0 && v < 1.0);
    for (double v : f.doa) EXPECT_TRUE(v > -1.0 && v < 1.0);
  }
}

TEST(ToyNet, ZeroWeightsGiveNeutralOutputs) {
  ToyNet net(SmallConfig(), 3);
  for (nn::Param* p : net.Params()) {
    if (p->trainable) p->value.setZero();
  }
  FeatureTensor x = RandomInput(2);
  for (const auto& f : net.Forward(x)) {
    for (double v : f.sed) EXPECT_EQ(v, 0.5);
    for (double v : f.doa) EXPECT_EQ(v, 0.0);
  }
}

TEST(ToyNet, RejectsWrongInputShape) {
  ToyNet net(SmallConfig(), 4);
  EXPECT_THROW(net.Forward(RandomInput(1, 12, 20)), DataError);
  FeatureTensor seven(FeatureLayout::kLogMelIv, BinScale::kMel, 12, 16);
  EXPECT_THROW(net.Forward(seven), DataError);
  EXPECT_THROW(net.Forward(RandomInput(1, 3)), DataError);
}

TEST(ToyNet, ConfigValidation) {
  ToyNetConfig c;
  c.in_channels = 5;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = ToyNetConfig{};
  c.num_tracks = 5;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = ToyNetConfig{};
  c.in_bins = 8;
  c.freq_pool = 4;
  EXPECT_THROW(c.Validate(), ConfigError);
  EXPECT_EQ(ToyNetConfig::FromJson(SmallConfig().ToJson()).ToJson(), SmallConfig().ToJson());
}

TEST(ToyNet, GradientsMatchFiniteDifferences) {
  for (bool dense : {false, true}) {
    ToyNetConfig cfg = SmallConfig();
    cfg.dense = dense;
    ToyNet net(cfg, 5);
    const FeatureTensor x = RandomInput(3);
    LossConfig loss;
    loss.lambda = 0.4;
    const auto res = testing::CheckNetGradients(net, x, RandomLabels(4, 3, 5), loss, 240, 6);
    EXPECT_EQ(res.checked, 240);
    EXPECT_LE(res.max_rel_err, 1e-4) << "dense=" << dense;
  }
}

TEST(ToyNet, DisabledSharingIsolatesBranches) {
  ToyNet net(SmallConfig(false), 7);
  const FeatureTensor x = RandomInput(5);
  const TrackwiseSeq before = net.Forward(x);
  for (nn::Param* p : net.BranchParams(Branch::kDoa)) p->value.array() += 0.3;
  const TrackwiseSeq after = net.Forward(x);
  for (size_t t = 0; t < before.size(); ++t) {
    EXPECT_EQ(before[t].sed, after[t].sed);
    EXPECT_NE(before[t].doa, after[t].doa);
  }
  for (nn::CrossStitch* g : net.Gates()) {
    EXPECT_EQ(g->gate_ab().value(0, 0), 0.0);
    EXPECT_FALSE(g->gate_ab().trainable);
  }
}

TEST(ToyNet, DisabledSharingBlocksCrossGradient) {
  ToyNet net(SmallConfig(false), 8);
  const FeatureTensor x = RandomInput(6);
  TrackwiseSeq pred = net.Forward(x);
  // gradient only on the sed outputs
  TrackwiseSeq grad(pred.size(), TrackwiseFrame(3, 5));
  for (auto& f : grad) std::fill(f.sed.begin(), f.sed.end(), 1.0);
  net.ZeroGrad();
  net.Backward(grad);
  for (nn::Param* p : net.BranchParams(Branch::kDoa)) {
    EXPECT_EQ(p->grad.norm(), 0.0) << p->name;
  }
  double sed_norm = 0.0;
  for (nn::Param* p : net.BranchParams(Branch::kSed)) sed_norm += p->grad.norm();
  EXPECT_GT(sed_norm, 0.0);
}

TEST(ToyNet, EnabledSharingCouplesBranches) {
  ToyNet net(SmallConfig(true), 9);
  const FeatureTensor x = RandomInput(7);
  const TrackwiseSeq before = net.Forward(x);
  for (nn::Param* p : net.BranchParams(Branch::kDoa)) p->value.array() += 0.3;
  EXPECT_NE(before[0].sed, net.Forward(x)[0].sed);
}

TEST(Schedule, SwitchesAtNinetyPercent) {
  TrainConfig cfg;
  cfg.lr = 3e-4;
  cfg.lr_final = 3e-5;
  EXPECT_EQ(ScheduledLr(cfg, 0), 3e-4);
  EXPECT_EQ(ScheduledLr(cfg, 89), 3e-4);   // epoch 90
  EXPECT_EQ(ScheduledLr(cfg, 90), 3e-5);   // epoch 91
  EXPECT_EQ(ScheduledLr(cfg, 99), 3e-5);
  cfg.epochs = 20;
  EXPECT_EQ(ScheduledLr(cfg, 17), 3e-4);
  EXPECT_EQ(ScheduledLr(cfg, 18), 3e-5);
}

TEST(Train, ZeroLearningRateLeavesParametersBitIdentical) {
  ToyNet net(SmallConfig(), 10);
  std::vector<nn::Matrix> before;
  for (nn::Param* p : net.Params()) before.push_back(p->value);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.lr = 0.0;
  cfg.lr_final = 0.0;
  cfg.weight_decay = 0.0;
  Train(net, {{RandomInput(8, 16), RandomLabels(9, 4, 5)}}, {}, cfg, 1);
  const auto params = net.Params();
  for (size_t i = 0; i < params.size(); ++i) EXPECT_EQ(params[i]->value, before[i]);
}

TEST(Train, DeterministicGivenSeed) {
  auto run = [] {
    ToyNet net(SmallConfig(), 11);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.lr = 1e-3;
    cfg.batch_size = 2;
    std::vector<TrainExample> data;
    for (int i = 0; i < 4; ++i) data.push_back({RandomInput(20 + i, 16), RandomLabels(30 + i, 4, 5)});
    return Train(net, data, {}, cfg, 5).train_loss;
  };
  EXPECT_EQ(run(), run());
}

TEST(Train, LossStrictlyDecreasesOverFirstTenEpochs) {
  const testing::ToyData data = testing::MakeToyData(10, 77, 2.0, 32);
  int decreasing = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    ToyNetConfig cfg;
    cfg.in_bins = 32;
    ToyNet net(cfg, seed);
    testing::NormalizeFrom(net, data);
    TrainConfig tc;
    tc.epochs = 10;
    tc.lr = 1e-3;
    tc.lr_final = 1e-3;
    tc.batch_size = 2;
    const auto loss = Train(net, data.train, {}, tc, seed).train_loss;
    bool ok = true;
    for (size_t e = 1; e < loss.size(); ++e) ok = ok && loss[e] < loss[e - 1];
    decreasing += ok;
  }
  EXPECT_GE(decreasing, 9);
}

TEST(Train, NonFiniteInputRaisesNumericalError) {
  ToyNet net(SmallConfig(), 12);
  FeatureTensor x = RandomInput(10, 16);
  x.data[5] = std::nan("");
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(Train(net, {{x, RandomLabels(1, 4, 5)}}, {}, cfg, 1), NumericalError);
}

TEST(Checkpoint, RoundTripRestoresOutputs) {
  const auto dir = testing::ScratchDir("ckpt");
  ToyNet net(SmallConfig(), 13);
  net.SetInputNormalization(std::vector<double>(14, 0.5), std::vector<double>(14, 2.0));
  const FeatureTensor x = RandomInput(11);
  const TrackwiseSeq want = net.Forward(x);
  const std::string path = (dir / "m.sldm").string();
  WriteCheckpoint(path, {{"type", "toynet"}, {"model", SmallConfig().ToJson()}}, net.Params());
  const Checkpoint ck = ReadCheckpoint(path);
  EXPECT_EQ(ck.arch["type"], "toynet");
  ToyNet other(ToyNetConfig::FromJson(ck.arch["model"]), 999);
  other.LoadParams(ck.tensors);
  EXPECT_EQ(other.Forward(x), want);
  auto tensors = ck.tensors;
  tensors.erase(tensors.begin());
  EXPECT_THROW(other.LoadParams(tensors), DataError);
}

}  // namespace
}  // namespace seld
