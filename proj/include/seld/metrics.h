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

#ifndef SELD_METRICS_H_
#define SELD_METRICS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "seld/common.h"
#include "seld/pit.h"
#include "seld/scene.h"
#include "json.hpp"

namespace seld {

// A detected or reference event in one frame. References carry full
// source positions. Predictions from DoA-only models carry a unit vector
// with direction_only set; such a prediction is placed at the range of the
// reference it is compared with.
struct EventInstance {
  int frame = 0;
  int class_id = 0;
  Vec3 position = {0.0, 0.0, 0.0};
  bool direction_only = false;

  bool operator==(const EventInstance&) const = default;
};

struct ScoreReport {
  double threshold_m = 0.0;
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;

  nlohmann::json ToJson() const;
  static ScoreReport FromCounts(double threshold_m, int64_t tp, int64_t fp,
                                int64_t fn);
};

// Cartesian distance used for matching.
double PairDistance(const EventInstance& pred, const EventInstance& ref);

// Minimum-total-distance assignment between two small sets; returns
// (pred index, ref index) pairs, min(|preds|, |refs|) of them.
std::vector<std::pair<int, int>> MatchInstances(
    const std::vector<EventInstance>& preds,
    const std::vector<EventInstance>& refs);

// Per frame and class, optimal matching; matched pairs within
// `threshold_m` are true positives, the rest of each side are false
// positives / false negatives. Counts are summed over frames and classes.
ScoreReport LocationSensitiveFscore(const std::vector<EventInstance>& preds,
                                    const std::vector<EventInstance>& refs,
                                    double threshold_m);

// One report per threshold (ascending).
std::vector<ScoreReport> ThresholdSweep(
    const std::vector<EventInstance>& preds,
    const std::vector<EventInstance>& refs,
    const std::vector<double>& thresholds);

// References with full positions for every frame of a scene.
std::vector<EventInstance> ReferenceEvents(const SceneSpec& scene,
                                           int hop_samples, int num_frames);

// Direction-only instances from binarized track-wise predictions.
std::vector<EventInstance> PredictionEvents(
    const std::vector<DetectedEvent>& detections);

// Sweep table: header `threshold_m,tp,fp,fn,precision,recall,f_score`.
std::string FormatSweepCsv(const std::vector<ScoreReport>& reports);

}  // namespace seld

#endif  // SELD_METRICS_H_
