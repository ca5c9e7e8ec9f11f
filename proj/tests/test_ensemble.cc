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
#include "seld/ensemble.h"
#include "seld/pipeline.h"
#include "test_util.h"

namespace seld {
namespace {

TrackwiseSeq RandomPredictions(uint64_t seed, int frames, int m = 3, int k = 14) {
  Rng rng(seed);
  TrackwiseSeq seq(frames, TrackwiseFrame(m, k));
  for (auto& f : seq) {
    for (double& v : f.sed) v = rng.Uniform();
    for (double& v : f.doa) v = rng.Uniform(-1, 1);
  }
  return seq;
}

TEST(AverageEnsemble, IdenticalInputsAndSingleModel) {
  const TrackwiseSeq p = RandomPredictions(1, 5);
  EXPECT_EQ(AverageEnsemble({p}), p);
  const TrackwiseSeq avg = AverageEnsemble({p, p, p});
  for (size_t t = 0; t < p.size(); ++t) {
    for (size_t i = 0; i < p[t].sed.size(); ++i) EXPECT_NEAR(avg[t].sed[i], p[t].sed[i], 1e-15);
  }
}

TEST(AverageEnsemble, PermutedOneHotCollapses) {
  TrackwiseFrame a(2, 3), b(2, 3);
  a.Sed(0, 1) = 1.0;
  a.SetDoa(0, {1, 0, 0});
  a.Sed(1, 2) = 1.0;
  a.SetDoa(1, {0, 1, 0});
  b.Sed(1, 1) = 1.0;  // same events, tracks swapped
  b.SetDoa(1, {1, 0, 0});
  b.Sed(0, 2) = 1.0;
  b.SetDoa(0, {0, 1, 0});
  const TrackwiseSeq avg = AverageEnsemble({{a}, {b}});
  EXPECT_EQ(avg[0].Sed(0, 1), 0.5);
  EXPECT_EQ(avg[0].Sed(0, 2), 0.5);
  EXPECT_EQ(avg[0].Doa(0), (Vec3{0.5, 0.5, 0}));
  // nothing survives a strict majority threshold
  EXPECT_TRUE(Binarize(avg, 0.51).empty());
  EXPECT_EQ(Binarize({a}, 0.51).size(), 2u);
}

TEST(AverageEnsemble, ShapeMismatch) {
  EXPECT_THROW(AverageEnsemble({RandomPredictions(1, 4), RandomPredictions(2, 5)}), DataError);
}

TEST(EnsembleInput, LayoutContract) {
  const TrackwiseSeq a = RandomPredictions(3, 4), b = RandomPredictions(4, 4);
  const EnsembleInput in = BuildEnsembleInput({a, b});
  EXPECT_EQ(in.Width(), 102);
  ASSERT_EQ(in.frames.size(), 4u);
  EXPECT_EQ(in.frames[0].size(), 102u);
  EXPECT_EQ(in.frames[2][0], a[2].Sed(0, 0));
  EXPECT_EQ(in.frames[2][42], a[2].doa[0]);
  EXPECT_EQ(in.frames[2][51], b[2].Sed(0, 0));
  EXPECT_EQ(in.frames[2][101], b[2].doa[8]);
  const auto back = SplitEnsembleInput(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
  EXPECT_THROW(BuildEnsembleInput({a}), DataError);
}

TEST(EnsembleNet, GradientsMatchFiniteDifferences) {
  EnsembleNetConfig cfg;
  cfg.num_models = 2;
  cfg.num_classes = 4;
  cfg.conv_channels = 3;
  cfg.hidden = 3;
  EnsembleNet net(cfg, 5);
  const EnsembleInput in = BuildEnsembleInput(
      {RandomPredictions(5, 6, 3, 4), RandomPredictions(6, 6, 3, 4)});
  Rng rng(7);
  TrackwiseSeq labels(6, TrackwiseFrame(3, 4));
  for (auto& f : labels) {
    f.Sed(rng.UniformInt(0, 2), rng.UniformInt(0, 3)) = 1.0;
  }
  for (auto& f : labels) {
    for (int m = 0; m < 3; ++m) {
      if (f.ActiveClass(m) >= 0) f.SetDoa(m, testing::RandomDirection(rng));
    }
  }
  const auto res = testing::CheckNetGradients(net, in, labels, LossConfig{}, 220, 8);
  EXPECT_LE(res.max_rel_err, 1e-4);
}

TEST(EnsembleNet, FrameInFrameOut) {
  EnsembleNet net(EnsembleNetConfig{}, 1);
  std::vector<TrackwiseSeq> models;
  for (int i = 0; i < 3; ++i) models.push_back(RandomPredictions(10 + i, 7));
  EXPECT_EQ(net.Forward(BuildEnsembleInput(models)).size(), 7u);
  models.pop_back();
  EXPECT_THROW(net.Forward(BuildEnsembleInput(models)), DataError);
}

TEST(EnsembleNet, ZeroLearningRateIsNullUpdate) {
  EnsembleNetConfig cfg;
  cfg.num_models = 2;
  EnsembleNet net(cfg, 2);
  std::vector<nn::Matrix> before;
  for (nn::Param* p : net.Params()) before.push_back(p->value);
  TrainConfig tc;
  tc.epochs = 1;
  tc.lr = tc.lr_final = 0.0;
  tc.weight_decay = 0.0;
  const auto in = BuildEnsembleInput({RandomPredictions(1, 5), RandomPredictions(2, 5)});
  TrainEnsemble(net, {{in, TrackwiseSeq(5)}}, {}, tc, 1);
  const auto params = net.Params();
  for (size_t i = 0; i < params.size(); ++i) EXPECT_EQ(params[i]->value, before[i]);
}

TEST(EnsembleNet, IdenticalPerfectPredictorsAreLearnable) {
  DatasetConfig dc;
  dc.duration_s = 3.0;
  PredictorNoise clean;
  clean.permute = false;
  clean.doa_sigma_rad = 0.0;
  clean.sed_jitter = 0.0;
  std::vector<EnsembleExample> data;
  std::vector<EnsembleEvalClip> clips;
  double single = 0.0;
  std::vector<TrackwiseSeq> singles;
  std::vector<std::vector<EventInstance>> refs;
  for (int i = 0; i < 8; ++i) {
    const SceneSpec s = GenerateScene(dc, MixSeed(3, i));
    const TrackwiseSeq lab = SceneLabels(s, dc.label_hop_samples);
    const auto preds = SynthPermutedPredictors(lab, 2, clean, 1);
    ASSERT_EQ(preds[0], preds[1]);
    const EnsembleInput in = BuildEnsembleInput(preds);
    data.push_back({in, lab});
    refs.push_back(ReferenceEvents(s, dc.label_hop_samples, static_cast<int>(lab.size())));
    clips.push_back({in, refs.back()});
    singles.push_back(preds[0]);
  }
  single = ScoreSequences(singles, refs, 1.0);
  EnsembleNetConfig cfg;
  cfg.num_models = 2;
  EnsembleNet net(cfg, 4);
  TrainConfig tc;
  tc.epochs = 30;
  tc.lr = 3e-3;
  tc.lr_final = 3e-4;
  tc.weight_decay = 0.0;
  tc.batch_size = 2;
  TrainEnsemble(net, data, {}, tc, 2);
  EXPECT_GE(EvaluateEnsembleF(net, clips, 1.0, 0.5), single);
}

TEST(Predictors, CleanIdentityMatchesSmoothedLabels) {
  DatasetConfig dc;
  const SceneSpec s = GenerateScene(dc, 17);
  const TrackwiseSeq lab = SceneLabels(s, dc.label_hop_samples);
  PredictorNoise noise;
  noise.doa_sigma_rad = 0.0;
  noise.sed_jitter = 0.0;
  noise.permute = false;
  const auto p = SynthPermutedPredictors(lab, 1, noise, 5);
  ASSERT_EQ(p.size(), 1u);
  for (size_t t = 0; t < lab.size(); ++t) {
    for (size_t i = 0; i < lab[t].sed.size(); ++i) {
      EXPECT_EQ(p[0][t].sed[i], lab[t].sed[i] > 0.5 ? 0.9 : 0.1);
    }
    for (size_t i = 0; i < lab[t].doa.size(); ++i) {
      EXPECT_NEAR(p[0][t].doa[i], lab[t].doa[i], 1e-12);
    }
  }
}

TEST(Predictors, PerClipPermutationAndBoundedNoise) {
  DatasetConfig dc;
  PredictorNoise noise;
  int non_identity = 0;
  for (int clip = 0; clip < 10; ++clip) {
    const SceneSpec s = GenerateScene(dc, 100 + clip);
    const TrackwiseSeq lab = SceneLabels(s, dc.label_hop_samples);
    const auto preds = SynthPermutedPredictors(lab, 3, noise, clip);
    for (const auto& p : preds) {
      // recover the permutation from the first active row of each label track
      std::vector<int> perm(3, -1);
      for (size_t t = 0; t < lab.size(); ++t) {
        for (int j = 0; j < 3; ++j) {
          const int cls = lab[t].ActiveClass(j);
          if (cls < 0) continue;
          // two tracks may carry the same class; the nearest one is ours
          int dst = -1;
          for (int m = 0; m < 3; ++m) {
            if (p[t].Sed(m, cls) <= 0.5) continue;
            if (dst < 0 || AngleDegrees(p[t].Doa(m), lab[t].Doa(j)) <
                               AngleDegrees(p[t].Doa(dst), lab[t].Doa(j))) {
              dst = m;
            }
          }
          ASSERT_GE(dst, 0);
          if (perm[j] < 0) perm[j] = dst;
          EXPECT_EQ(perm[j], dst) << "permutation changed within a clip";
          EXPECT_LT(AngleDegrees(p[t].Doa(dst), lab[t].Doa(j)), 6 * 0.05 * 180 / M_PI);
          EXPECT_NEAR(Norm(p[t].Doa(dst)), 1.0, 1e-9);
        }
      }
      for (const auto& f : p) {
        for (double v : f.sed) {
          EXPECT_TRUE((v >= 0.85 && v <= 0.95) || (v >= 0.05 && v <= 0.15));
        }
      }
      for (int j = 0; j < 3; ++j) non_identity += perm[j] >= 0 && perm[j] != j;
    }
  }
  EXPECT_GT(non_identity, 0);
}

TEST(Predictors, SinglesScoreHighAverageCollapses) {
  EnsembleGapConfig cfg;
  std::vector<TrackwiseSeq> singles[3], averaged;
  std::vector<std::vector<EventInstance>> refs;
  for (int clip = 0; clip < 15; ++clip) {
    const SceneSpec s = GenerateScene(cfg.synth, MixSeed(8, clip));
    const TrackwiseSeq lab = SceneLabels(s, cfg.synth.label_hop_samples);
    refs.push_back(ReferenceEvents(s, cfg.synth.label_hop_samples, static_cast<int>(lab.size())));
    const auto preds = SynthPermutedPredictors(lab, 3, cfg.noise, MixSeed(9, clip));
    for (int i = 0; i < 3; ++i) singles[i].push_back(preds[i]);
    averaged.push_back(AverageEnsemble(preds));
  }
  const double avg = ScoreSequences(averaged, refs, 1.0);
  for (const auto& s : singles) {
    const double f = ScoreSequences(s, refs, 1.0);
    EXPECT_GE(f, 0.95);
    EXPECT_LT(avg, f);
  }
}

TEST(EnsembleNetConfig, Validation) {
  EnsembleNetConfig c;
  c.num_models = 1;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = EnsembleNetConfig{};
  c.hidden = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  EXPECT_EQ(EnsembleNetConfig::FromJson(EnsembleNetConfig{}.ToJson()).ToJson(),
            EnsembleNetConfig{}.ToJson());
}

}  // namespace
}  // namespace seld
