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

#ifndef SELD_PIT_H_
#define SELD_PIT_H_

#include <vector>

#include "seld/trackwise.h"

namespace seld {

// Weighting between the SED (binary cross entropy) and DoA (mean squared
// error) terms: loss = lambda * BCE + (1 - lambda) * MSE per track.
struct LossConfig {
  double lambda = 0.5;
  double prob_clip = 1e-7;  // BCE clamps p to [clip, 1 - clip]

  void Validate() const;
};

// pred track m is compared with target track perm[m].
using TrackPermutation = std::vector<int>;

inline constexpr int kMaxPitTracks = 4;

struct PitResult {
  double loss = 0.0;                     // mean over frames
  std::vector<double> frame_loss;        // minimum per frame
  std::vector<TrackPermutation> perms;   // argmin per frame
};

// BCE averaged over classes plus MSE averaged over xyz for one track pair.
double TrackPairLoss(const TrackwiseFrame& pred, int pred_track,
                     const TrackwiseFrame& target, int target_track,
                     const LossConfig& cfg);

// Loss of one frame under a fixed permutation.
double FrameLoss(const TrackwiseFrame& pred, const TrackwiseFrame& target,
                 const TrackPermutation& perm, const LossConfig& cfg);

// Permutation-invariant loss: per frame the minimum over all M! track
// permutations (lexicographically first on ties), averaged over frames.
// M > 4 is rejected.
PitResult PitLoss(const TrackwiseSeq& pred, const TrackwiseSeq& target,
                  const LossConfig& cfg);

// Gradient of the mean loss with respect to the SED probabilities and DoA
// outputs of `pred`, holding the per-frame permutations fixed. The result
// holds d loss / d sed in .sed and d loss / d doa in .doa.
TrackwiseSeq PitLossGradient(const TrackwiseSeq& pred,
                             const TrackwiseSeq& target,
                             const std::vector<TrackPermutation>& perms,
                             const LossConfig& cfg);

struct DetectedEvent {
  int frame = 0;
  int track = 0;
  int class_id = 0;
  Vec3 doa = {0.0, 0.0, 0.0};  // unit length, or zero

  bool operator==(const DetectedEvent&) const = default;
};

// Per frame and track, emits the arg-max class when its probability is at
// least `threshold`; DoA is renormalized to unit length.
std::vector<DetectedEvent> Binarize(const TrackwiseSeq& pred,
                                    double threshold = 0.5);

}  // namespace seld

#endif  // SELD_PIT_H_
