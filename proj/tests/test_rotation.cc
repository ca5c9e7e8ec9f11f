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
#include <set>

#include "seld/features.h"
#include "seld/rotation.h"
#include "seld/scene.h"
#include "test_util.h"

namespace seld {
namespace {

const std::vector<RotationElement>& G() { return RotationGroup(); }

TEST(RotationGroup, FortyEightDistinctSignedPermutations) {
  ASSERT_EQ(G().size(), 48u);
  std::set<std::pair<std::array<int, 3>, std::array<int, 3>>> seen;
  int proper = 0, improper = 0;
  for (const auto& r : G()) {
    seen.insert({r.perm, r.sign});
    const auto m = r.matrix();
    for (int i = 0; i < 3; ++i) {
      int nonzero = 0;
      for (int j = 0; j < 3; ++j) nonzero += m[i][j] != 0;
      EXPECT_EQ(nonzero, 1);
    }
    (r.Determinant() == 1 ? proper : improper)++;
  }
  EXPECT_EQ(seen.size(), 48u);
  EXPECT_EQ(proper, 24);
  EXPECT_EQ(improper, 24);
}

TEST(RotationGroup, IdentityIsElementZero) {
  const RotationElement id;
  EXPECT_EQ(G()[0], id);
  EXPECT_EQ(RotationIndex(id), 0);
  for (const auto& r : G()) {
    EXPECT_EQ(r * id, r);
    EXPECT_EQ(id * r, r);
  }
}

TEST(RotationGroup, ClosureInversesAssociativity) {
  for (const auto& a : G()) {
    EXPECT_EQ(a * a.Inverse(), G()[0]);
    EXPECT_EQ(a.Inverse() * a, G()[0]);
    for (const auto& b : G()) {
      const int idx = RotationIndex(a * b);
      ASSERT_GE(idx, 0);
      ASSERT_LT(idx, 48);
      for (const auto& c : {G()[5], G()[17], G()[40]}) {
        ASSERT_EQ((a * b) * c, a * (b * c));
      }
    }
  }
}

TEST(RotationGroup, CompositionMatchesApplication) {
  Rng rng(5);
  const Vec3 v = testing::RandomDirection(rng);
  for (const auto& a : G()) {
    for (const auto& b : G()) {
      const Vec3 lhs = (a * b).Apply(v);
      const Vec3 rhs = a.Apply(b.Apply(v));
      for (int i = 0; i < 3; ++i) ASSERT_EQ(lhs[i], rhs[i]);
    }
  }
}

TEST(RotationGroup, ApplyMatchesMatrixAndIsOrthogonal) {
  const Vec3 v = {0.3, -1.7, 2.2};
  for (const auto& r : G()) {
    const auto m = r.matrix();
    const Vec3 out = r.Apply(v);
    for (int i = 0; i < 3; ++i) {
      double acc = 0.0;
      for (int j = 0; j < 3; ++j) acc += m[i][j] * v[j];
      EXPECT_EQ(out[i], acc);
    }
    EXPECT_NEAR(Norm(out), Norm(v), 1e-15);
  }
}

TEST(RotationGroup, UnknownElementIndex) {
  RotationElement bad;
  bad.perm = {0, 0, 1};
  EXPECT_EQ(RotationIndex(bad), -1);
}

SceneSpec ThreeSourceScene() {
  SceneSpec s = testing::ShortScene(0.5);
  s.events.push_back(testing::MakeEvent(0, 0.0, 0.5, {1.2, 0.4, -0.3}, ClassSignal(0, 14)));
  s.events.push_back(testing::MakeEvent(4, 0.1, 0.4, {-0.5, 2.0, 0.8}, ClassSignal(4, 14), 0.6));
  s.events.push_back(testing::MakeEvent(9, 0.2, 0.5, {0.1, -0.2, 1.5}, ClassSignal(9, 14), 0.4));
  return s;
}

TEST(RotateFoa, EqualsEncodingRotatedPositions) {
  const SceneSpec s = ThreeSourceScene();
  const FoaClip base = EncodeFoa(s);
  for (const auto& r : G()) {
    SceneSpec moved = s;
    for (auto& e : moved.events) e.position = r.Apply(e.position);
    const FoaClip direct = EncodeFoa(moved);
    const FoaClip rotated = RotateFoa(base, r);
    for (int c = 0; c < 4; ++c) {
      for (size_t i = 0; i < base.NumSamples(); ++i) {
        ASSERT_NEAR(rotated.channels[c][i], direct.channels[c][i], 1e-12);
      }
    }
  }
}

TEST(RotateFoa, IntensityVectorCommutes) {
  const FoaClip clip = EncodeFoa(ThreeSourceScene());
  const auto spec = Stft(clip, 1024, 400);
  const auto fb = MakeMelFilterbank(64, 20, 0, spec.bins, 32000);
  const FeatureTensor iv = IntensityVector(spec, fb);
  for (const auto& r : G()) {
    const FeatureTensor iv_r = IntensityVector(Stft(RotateFoa(clip, r), 1024, 400), fb);
    double err = 0.0;
    for (int t = 0; t < iv.frames; ++t) {
      for (int m = 0; m < iv.bins; ++m) {
        const Vec3 v = r.Apply({iv.at(0, t, m), iv.at(1, t, m), iv.at(2, t, m)});
        for (int d = 0; d < 3; ++d) err = std::max(err, std::abs(v[d] - iv_r.at(d, t, m)));
      }
    }
    EXPECT_LE(err, 1e-9) << "element " << RotationIndex(r);
  }
}

TEST(RotateLabels, MatchesLabelsOfRotatedScene) {
  const SceneSpec s = ThreeSourceScene();
  const TrackwiseSeq labels = LabelFrames(s, 1600, 10);
  for (const auto& r : G()) {
    SceneSpec moved = s;
    for (auto& e : moved.events) e.position = r.Apply(e.position);
    const TrackwiseSeq want = LabelFrames(moved, 1600, 10);
    const TrackwiseSeq got = RotateLabels(labels, r);
    ASSERT_EQ(got.size(), want.size());
    for (size_t t = 0; t < got.size(); ++t) {
      EXPECT_EQ(got[t].sed, want[t].sed);
      for (size_t i = 0; i < got[t].doa.size(); ++i) {
        ASSERT_NEAR(got[t].doa[i], want[t].doa[i], 1e-15);
      }
    }
  }
}

TEST(RotateFoa, RoundTripThroughInverse) {
  const FoaClip clip = EncodeFoa(ThreeSourceScene());
  for (const auto& r : G()) {
    const FoaClip back = RotateFoa(RotateFoa(clip, r), r.Inverse());
    for (int c = 0; c < 4; ++c) ASSERT_EQ(back.channels[c], clip.channels[c]);
  }
}

}  // namespace
}  // namespace seld
