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

#include <algorithm>
#include <cmath>

#include "seld/pit.h"
#include "seld/rng.h"

namespace seld {
namespace {

TrackwiseFrame RandomPred(Rng& rng, int m = 3, int k = 14) {
  TrackwiseFrame f(m, k);
  for (double& v : f.sed) v = rng.Uniform(0.01, 0.99);
  for (double& v : f.doa) v = rng.Uniform(-1.0, 1.0);
  return f;
}

TrackwiseFrame RandomLabel(Rng& rng, int m = 3, int k = 14) {
  TrackwiseFrame f(m, k);
  for (int t = 0; t < m; ++t) {
    if (rng.Uniform() < 0.4) continue;
    f.Sed(t, rng.UniformInt(0, k - 1)) = 1.0;
    f.SetDoa(t, {rng.Normal(), rng.Normal(), rng.Normal()});
  }
  return f;
}

// Independent reference for one track pair, written out from the loss
// definition.
double RefPair(const TrackwiseFrame& p, int i, const TrackwiseFrame& y, int j,
               double lambda) {
  double bce = 0.0;
  for (int c = 0; c < p.num_classes; ++c) {
    const double q = std::min(std::max(p.Sed(i, c), 1e-7), 1.0 - 1e-7);
    bce += y.Sed(j, c) > 0.5 ? -std::log(q) : -std::log(1.0 - q);
  }
  const Vec3 a = p.Doa(i), b = y.Doa(j);
  const double mse = ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                      (a[2] - b[2]) * (a[2] - b[2])) / 3.0;
  return lambda * bce / p.num_classes + (1.0 - lambda) * mse;
}

const int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                          {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

TEST(PitLoss, MatchesSixPermutationBruteForce) {
  Rng rng(2024);
  LossConfig cfg;
  for (int inst = 0; inst < 100; ++inst) {
    TrackwiseSeq pred, target;
    for (int t = 0; t < 5; ++t) {
      pred.push_back(RandomPred(rng));
      target.push_back(RandomLabel(rng));
    }
    const PitResult r = PitLoss(pred, target, cfg);
    double total = 0.0;
    for (int t = 0; t < 5; ++t) {
      double best = 1e300;
      int arg = -1;
      for (int p = 0; p < 6; ++p) {
        double l = 0.0;
        for (int m = 0; m < 3; ++m) l += RefPair(pred[t], m, target[t], kPerms[p][m], 0.5);
        if (l < best) {
          best = l;
          arg = p;
        }
      }
      EXPECT_NEAR(r.frame_loss[t], best, 1e-12);
      EXPECT_EQ(r.perms[t], TrackPermutation(kPerms[arg], kPerms[arg] + 3));
      total += best;
    }
    EXPECT_NEAR(r.loss, total / 5.0, 1e-12);
  }
}

TEST(PitLoss, TargetPermutationInvarianceIsExact) {
  Rng rng(7);
  LossConfig cfg;
  for (int inst = 0; inst < 50; ++inst) {
    TrackwiseSeq pred{RandomPred(rng), RandomPred(rng)};
    TrackwiseSeq target{RandomLabel(rng), RandomLabel(rng)};
    const double base = PitLoss(pred, target, cfg).loss;
    for (const auto& perm : kPerms) {
      TrackwiseSeq shuffled = target;
      for (size_t t = 0; t < target.size(); ++t) {
        for (int m = 0; m < 3; ++m) {
          for (int c = 0; c < 14; ++c) shuffled[t].Sed(perm[m], c) = target[t].Sed(m, c);
          shuffled[t].SetDoa(perm[m], target[t].Doa(m));
        }
      }
      EXPECT_EQ(PitLoss(pred, shuffled, cfg).loss, base);
    }
  }
}

TEST(PitLoss, NeverAboveIdentityAssignment) {
  Rng rng(8);
  LossConfig cfg;
  for (int inst = 0; inst < 100; ++inst) {
    const TrackwiseFrame p = RandomPred(rng), y = RandomLabel(rng);
    EXPECT_LE(PitLoss({p}, {y}, cfg).loss, FrameLoss(p, y, {0, 1, 2}, cfg));
  }
}

TEST(PitLoss, PerfectPredictionIsNearZero) {
  Rng rng(9);
  const TrackwiseFrame y = RandomLabel(rng);
  TrackwiseFrame p = y;
  // swap tracks 0 and 2; PIT undoes it
  for (int c = 0; c < 14; ++c) std::swap(p.sed[c], p.sed[28 + c]);
  for (int d = 0; d < 3; ++d) std::swap(p.doa[d], p.doa[6 + d]);
  const PitResult r = PitLoss({p}, {y}, {});
  EXPECT_LT(r.loss, 3 * 0.5 * 1.1e-7 + 1e-12);
}

TEST(PitLoss, SingleTrack) {
  Rng rng(10);
  const TrackwiseFrame p = RandomPred(rng, 1, 5), y = RandomLabel(rng, 1, 5);
  const PitResult r = PitLoss({p}, {y}, {});
  EXPECT_NEAR(r.loss, RefPair(p, 0, y, 0, 0.5), 1e-12);
  EXPECT_EQ(r.perms[0], TrackPermutation{0});
}

TEST(PitLoss, LambdaEndpointsIgnoreOtherTerm) {
  Rng rng(11);
  for (int inst = 0; inst < 20; ++inst) {
    const TrackwiseFrame y = RandomLabel(rng);
    TrackwiseFrame p = RandomPred(rng);
    TrackwiseFrame p_doa = p, p_sed = p;
    for (double& v : p_doa.doa) v = rng.Uniform(-1, 1);
    for (double& v : p_sed.sed) v = rng.Uniform(0.01, 0.99);
    LossConfig sed_only{1.0}, doa_only{0.0};
    EXPECT_EQ(PitLoss({p}, {y}, sed_only).loss, PitLoss({p_doa}, {y}, sed_only).loss);
    EXPECT_EQ(PitLoss({p}, {y}, doa_only).loss, PitLoss({p_sed}, {y}, doa_only).loss);
  }
}

TEST(PitLoss, ClippedProbabilitiesStayFinite) {
  TrackwiseFrame p, y;
  y.Sed(0, 3) = 1.0;
  y.SetDoa(0, {1, 0, 0});
  std::fill(p.sed.begin(), p.sed.end(), 0.0);
  p.Sed(1, 4) = 1.0;
  const PitResult r = PitLoss({p}, {y}, {});
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_NEAR(r.loss, 0.5 * -std::log(1e-7) / 14 * 2 + 0.5 / 3, 0.2);
}

TEST(PitLoss, RejectsBadShapes) {
  TrackwiseFrame five(5, 3);
  EXPECT_THROW(PitLoss({five}, {five}, {}), ConfigError);
  EXPECT_THROW(PitLoss({TrackwiseFrame()}, {TrackwiseFrame(), TrackwiseFrame()}, {}),
               DataError);
  EXPECT_THROW(PitLoss({TrackwiseFrame(3, 14)}, {TrackwiseFrame(3, 13)}, {}), DataError);
  LossConfig bad;
  bad.lambda = 1.5;
  EXPECT_THROW(PitLoss({TrackwiseFrame()}, {TrackwiseFrame()}, bad), ConfigError);
}

TEST(PitLoss, FourTracksUseTwentyFourPermutations) {
  Rng rng(12);
  const TrackwiseFrame p = RandomPred(rng, 4, 6), y = RandomLabel(rng, 4, 6);
  std::vector<int> perm = {0, 1, 2, 3};
  double best = 1e300;
  do {
    best = std::min(best, FrameLoss(p, y, perm, {}));
  } while (std::next_permutation(perm.begin(), perm.end()));
  EXPECT_NEAR(PitLoss({p}, {y}, {}).loss, best, 1e-12);
}

TEST(PitLossGradient, MatchesFiniteDifferences) {
  Rng rng(13);
  LossConfig cfg;
  cfg.lambda = 0.3;
  TrackwiseSeq pred{RandomPred(rng), RandomPred(rng), RandomPred(rng)};
  const TrackwiseSeq target{RandomLabel(rng), RandomLabel(rng), RandomLabel(rng)};
  const PitResult r = PitLoss(pred, target, cfg);
  const TrackwiseSeq g = PitLossGradient(pred, target, r.perms, cfg);
  const double h = 1e-6;
  auto loss_at = [&](const TrackwiseSeq& p) {
    double total = 0.0;
    for (size_t t = 0; t < p.size(); ++t) total += FrameLoss(p[t], target[t], r.perms[t], cfg);
    return total / p.size();
  };
  for (size_t t = 0; t < pred.size(); ++t) {
    for (size_t i = 0; i < pred[t].sed.size(); ++i) {
      TrackwiseSeq a = pred, b = pred;
      a[t].sed[i] += h;
      b[t].sed[i] -= h;
      const double fd = (loss_at(a) - loss_at(b)) / (2 * h);
      EXPECT_NEAR(g[t].sed[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
    for (size_t i = 0; i < pred[t].doa.size(); ++i) {
      TrackwiseSeq a = pred, b = pred;
      a[t].doa[i] += h;
      b[t].doa[i] -= h;
      const double fd = (loss_at(a) - loss_at(b)) / (2 * h);
      EXPECT_NEAR(g[t].doa[i], fd, 1e-7);
    }
  }
}

TEST(PitLossGradient, ZeroInsideClampedRegion) {
  TrackwiseFrame p, y;
  p.Sed(0, 0) = 0.0;
  p.Sed(0, 1) = 1.0;
  const TrackwiseSeq g = PitLossGradient({p}, {y}, {{0, 1, 2}}, {});
  EXPECT_EQ(g[0].Sed(0, 0), 0.0);
  EXPECT_EQ(g[0].Sed(0, 1), 0.0);
}

TEST(Binarize, ArgmaxAboveThreshold) {
  TrackwiseFrame f;
  f.Sed(0, 4) = 0.7;
  f.Sed(0, 5) = 0.6;
  f.SetDoa(0, {0, 3, 4});
  f.Sed(1, 2) = 0.49;
  f.Sed(2, 9) = 0.5;
  f.SetDoa(2, {0, 0, -2});
  const auto ev = Binarize({TrackwiseFrame(), f});
  ASSERT_EQ(ev.size(), 2u);
  const DetectedEvent want[2] = {{1, 0, 4, {0, 0.6, 0.8}}, {1, 2, 9, {0, 0, -1}}};
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(ev[i].frame, want[i].frame);
    EXPECT_EQ(ev[i].track, want[i].track);
    EXPECT_EQ(ev[i].class_id, want[i].class_id);
    for (int d = 0; d < 3; ++d) EXPECT_NEAR(ev[i].doa[d], want[i].doa[d], 1e-15);
  }
  EXPECT_TRUE(Binarize({f}, 0.8).empty());
}

}  // namespace
}  // namespace seld
