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

#include "metric_oracle.h"
#include "seld/metrics.h"
#include "test_util.h"

namespace seld {
namespace {

void ExpectSameCounts(const ScoreReport& a, const ScoreReport& b) {
  EXPECT_EQ(a.tp, b.tp);
  EXPECT_EQ(a.fp, b.fp);
  EXPECT_EQ(a.fn, b.fn);
  EXPECT_DOUBLE_EQ(a.f_score, b.f_score);
}

TEST(Fscore, MatchesExhaustiveOracle) {
  Rng rng(31);
  std::vector<EventInstance> preds, refs;
  testing::RandomFrames(rng, 1000, 3, &preds, &refs);
  for (double thr : {0.5, 1.0, 2.0}) {
    ExpectSameCounts(LocationSensitiveFscore(preds, refs, thr),
                     testing::OracleScore(preds, refs, thr));
  }
}

TEST(Fscore, MonotoneInThreshold) {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EventInstance> preds, refs;
    testing::RandomFrames(rng, 50, 2, &preds, &refs);
    const auto sweep = ThresholdSweep(preds, refs, {0.25, 0.5, 1.0, 2.0, 4.0});
    for (size_t i = 1; i < sweep.size(); ++i) {
      EXPECT_GE(sweep[i].tp, sweep[i - 1].tp);
      EXPECT_GE(sweep[i].f_score, sweep[i - 1].f_score);
      EXPECT_EQ(sweep[i].tp + sweep[i].fp, sweep[0].tp + sweep[0].fp);
      EXPECT_EQ(sweep[i].tp + sweep[i].fn, sweep[0].tp + sweep[0].fn);
    }
  }
}

TEST(Fscore, IdenticalSetsScoreOne) {
  Rng rng(33);
  std::vector<EventInstance> preds, refs;
  testing::RandomFrames(rng, 100, 4, &preds, &refs);
  const ScoreReport r = LocationSensitiveFscore(refs, refs, 1e-9);
  EXPECT_EQ(r.fp, 0);
  EXPECT_EQ(r.fn, 0);
  EXPECT_EQ(r.f_score, 1.0);
}

TEST(Fscore, EmptyInputs) {
  const ScoreReport none = LocationSensitiveFscore({}, {}, 1.0);
  EXPECT_EQ(none.tp + none.fp + none.fn, 0);
  EXPECT_EQ(none.f_score, 0.0);
  const ScoreReport miss = LocationSensitiveFscore({}, {{0, 1, {1, 0, 0}}}, 1.0);
  EXPECT_EQ(miss.fn, 1);
  EXPECT_EQ(miss.precision, 0.0);
  EXPECT_EQ(miss.f_score, 0.0);
}

TEST(Fscore, ClassAndFrameMustAgree) {
  const EventInstance ref{3, 2, {1, 0, 0}};
  EXPECT_EQ(LocationSensitiveFscore({{3, 2, {1, 0, 0}}}, {ref}, 1.0).tp, 1);
  EXPECT_EQ(LocationSensitiveFscore({{3, 4, {1, 0, 0}}}, {ref}, 1.0).tp, 0);
  EXPECT_EQ(LocationSensitiveFscore({{4, 2, {1, 0, 0}}}, {ref}, 1.0).tp, 0);
}

TEST(Fscore, HandComputedCounts) {
  // frame 0 class 0: two refs, one pred close to the second
  // frame 1 class 1: one ref, two preds (one far)
  const std::vector<EventInstance> refs = {
      {0, 0, {2, 0, 0}}, {0, 0, {0, 2, 0}}, {1, 1, {0, 0, 1}}};
  const std::vector<EventInstance> preds = {
      {0, 0, {0, 2.5, 0}}, {1, 1, {0, 0, 1.2}}, {1, 1, {5, 5, 5}}};
  const ScoreReport r = LocationSensitiveFscore(preds, refs, 1.0);
  EXPECT_EQ(r.tp, 2);
  EXPECT_EQ(r.fp, 1);
  EXPECT_EQ(r.fn, 1);
  EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.f_score, 2.0 / 3.0);
}

TEST(Fscore, MatchingMinimizesTotalNotGreedy) {
  // nearest-first would pair p0-r1 (0.9) then p1-r0 (3.5), total 4.4; the
  // optimum pairs p0-r0 (1.1) and p1-r1 (1.5), total 2.6
  const std::vector<EventInstance> refs = {{0, 0, {0, 0, 0}}, {0, 0, {0, 0, 2}}};
  const std::vector<EventInstance> preds = {{0, 0, {0, 0, 1.1}}, {0, 0, {0, 0, 3.5}}};
  const auto m = MatchInstances(preds, refs);
  ASSERT_EQ(m.size(), 2u);
  double total = 0.0;
  for (auto [p, r] : m) total += PairDistance(preds[p], refs[r]);
  EXPECT_NEAR(total, 2.6, 1e-12);
  EXPECT_EQ(LocationSensitiveFscore(preds, refs, 1.0).tp, 0);
  EXPECT_EQ(LocationSensitiveFscore(preds, refs, 1.6).tp, 2);
  EXPECT_EQ(testing::OracleScore(preds, refs, 1.0).tp, 0);
}

TEST(PairDistance, DirectionOnlyUsesReferenceRange) {
  const EventInstance ref{0, 0, {0, 3, 4}};
  const EventInstance dir{0, 0, {0, 0, 1}, true};
  const double want = Distance({0, 0, 5}, {0, 3, 4});
  EXPECT_NEAR(PairDistance(dir, ref), want, 1e-12);
  const EventInstance full{0, 0, {0, 0, 1}, false};
  EXPECT_NEAR(PairDistance(full, ref), Distance({0, 0, 1}, {0, 3, 4}), 1e-12);
}

TEST(MatchInstances, RejectsOversizedGroups) {
  std::vector<EventInstance> many(17, EventInstance{0, 0, {1, 0, 0}});
  EXPECT_THROW(MatchInstances(many, many), DataError);
  EXPECT_EQ(MatchInstances(many, {}).size(), 0u);
}

TEST(ThresholdSweep, ValidatesThresholds) {
  EXPECT_THROW(ThresholdSweep({}, {}, {2.0, 1.0}), ConfigError);
  EXPECT_THROW(ThresholdSweep({}, {}, {0.0}), ConfigError);
  EXPECT_THROW(LocationSensitiveFscore({}, {}, -1.0), ConfigError);
}

TEST(ScoreReport, JsonAndCsv) {
  const ScoreReport r = ScoreReport::FromCounts(1.0, 3, 1, 2);
  EXPECT_DOUBLE_EQ(r.precision, 0.75);
  EXPECT_DOUBLE_EQ(r.recall, 0.6);
  EXPECT_DOUBLE_EQ(r.f_score, 2 * 0.75 * 0.6 / 1.35);
  const auto j = r.ToJson();
  for (const char* k : {"threshold_m", "tp", "fp", "fn", "precision", "recall", "f_score"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  const std::string csv = FormatSweepCsv({r});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "threshold_m,tp,fp,fn,precision,recall,f_score");
}

TEST(ReferenceEvents, OnePerActiveFrameWithPosition) {
  SceneSpec s = testing::ShortScene(1.0);
  s.events.push_back(testing::MakeEvent(3, 0.0, 0.5, {1, 2, 0}));
  const auto refs = ReferenceEvents(s, 1600, 20);
  ASSERT_EQ(refs.size(), 10u);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(refs[i].frame, i);
    EXPECT_EQ(refs[i].class_id, 3);
    EXPECT_EQ(refs[i].position, (Vec3{1, 2, 0}));
    EXPECT_FALSE(refs[i].direction_only);
  }
}

TEST(PredictionEvents, DirectionOnly) {
  const auto ev = PredictionEvents({{4, 1, 7, {0, 1, 0}}});
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0], (EventInstance{4, 7, {0, 1, 0}, true}));
}

}  // namespace
}  // namespace seld
