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

#include "seld/pit.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace seld {

namespace {

void CheckShapes(const TrackwiseFrame& a, const TrackwiseFrame& b) {
  if (a.num_tracks != b.num_tracks || a.num_classes != b.num_classes) {
    throw DataError("pit: prediction and target shapes differ");
  }
}

}  // namespace

void LossConfig::Validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("loss.lambda must lie in [0, 1]");
  }
  if (!(prob_clip > 0.0 && prob_clip < 0.5)) {
    throw ConfigError("loss.prob_clip must lie in (0, 0.5)");
  }
}

double TrackPairLoss(const TrackwiseFrame& pred, int pred_track,
                     const TrackwiseFrame& target, int target_track,
                     const LossConfig& cfg) {
  const int k = pred.num_classes;
  double bce = 0.0;
  for (int c = 0; c < k; ++c) {
    const double p =
        std::clamp(pred.Sed(pred_track, c), cfg.prob_clip, 1.0 - cfg.prob_clip);
    const double y = target.Sed(target_track, c);
    bce -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  double mse = 0.0;
  for (int d = 0; d < 3; ++d) {
    const double e = pred.doa[pred_track * 3 + d] -
                     target.doa[target_track * 3 + d];
    mse += e * e;
  }
  return cfg.lambda * (bce / k) + (1.0 - cfg.lambda) * (mse / 3.0);
}

double FrameLoss(const TrackwiseFrame& pred, const TrackwiseFrame& target,
                 const TrackPermutation& perm, const LossConfig& cfg) {
  double loss = 0.0;
  for (int m = 0; m < pred.num_tracks; ++m) {
    loss += TrackPairLoss(pred, m, target, perm[m], cfg);
  }
  return loss;
}

PitResult PitLoss(const TrackwiseSeq& pred, const TrackwiseSeq& target,
                  const LossConfig& cfg) {
  cfg.Validate();
  if (pred.size() != target.size()) {
    throw DataError("pit: prediction has " + std::to_string(pred.size()) +
                    " frames, target " + std::to_string(target.size()));
  }
  PitResult result;
  if (pred.empty()) return result;
  const int tracks = pred.front().num_tracks;
  if (tracks > kMaxPitTracks) {
    throw ConfigError("pit: " + std::to_string(tracks) +
                      " tracks unsupported (exhaustive search is limited to " +
                      std::to_string(kMaxPitTracks) + ")");
  }
  std::vector<TrackPermutation> all;
  TrackPermutation perm(tracks);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    all.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  // Pairwise track losses are shared by all permutations of a frame.
  std::vector<double> pair(static_cast<size_t>(tracks) * tracks);
  double total = 0.0;
  for (size_t t = 0; t < pred.size(); ++t) {
    CheckShapes(pred[t], target[t]);
    if (pred[t].num_tracks != tracks) {
      throw DataError("pit: track count varies across frames");
    }
    for (int m = 0; m < tracks; ++m) {
      for (int n = 0; n < tracks; ++n) {
        pair[m * tracks + n] = TrackPairLoss(pred[t], m, target[t], n, cfg);
      }
    }
    size_t best = 0;
    double best_loss = 0.0;
    for (size_t p = 0; p < all.size(); ++p) {
      double loss = 0.0;
      for (int m = 0; m < tracks; ++m) loss += pair[m * tracks + all[p][m]];
      if (p == 0 || loss < best_loss) {
        best = p;
        best_loss = loss;
      }
    }
    result.frame_loss.push_back(best_loss);
    result.perms.push_back(all[best]);
    total += best_loss;
  }
  result.loss = total / static_cast<double>(pred.size());
  return result;
}

TrackwiseSeq PitLossGradient(const TrackwiseSeq& pred,
                             const TrackwiseSeq& target,
                             const std::vector<TrackPermutation>& perms,
                             const LossConfig& cfg) {
  if (pred.size() != target.size() || pred.size() != perms.size()) {
    throw DataError("pit gradient: length mismatch");
  }
  TrackwiseSeq grad;
  grad.reserve(pred.size());
  const double scale = 1.0 / static_cast<double>(pred.size());
  for (size_t t = 0; t < pred.size(); ++t) {
    const TrackwiseFrame& p = pred[t];
    const TrackwiseFrame& y = target[t];
    CheckShapes(p, y);
    TrackwiseFrame g(p.num_tracks, p.num_classes);
    const double sed_w = scale * cfg.lambda / p.num_classes;
    const double doa_w = scale * (1.0 - cfg.lambda) / 3.0;
    for (int m = 0; m < p.num_tracks; ++m) {
      const int n = perms[t][m];
      for (int c = 0; c < p.num_classes; ++c) {
        const double prob = p.Sed(m, c);
        // The clamp has zero derivative outside the open interval.
        if (prob <= cfg.prob_clip || prob >= 1.0 - cfg.prob_clip) continue;
        const double label = y.Sed(n, c);
        g.Sed(m, c) = sed_w * (-label / prob + (1.0 - label) / (1.0 - prob));
      }
      for (int d = 0; d < 3; ++d) {
        g.doa[m * 3 + d] =
            doa_w * 2.0 * (p.doa[m * 3 + d] - y.doa[n * 3 + d]);
      }
    }
    grad.push_back(std::move(g));
  }
  return grad;
}

std::vector<DetectedEvent> Binarize(const TrackwiseSeq& pred,
                                    double threshold) {
  std::vector<DetectedEvent> events;
  for (size_t t = 0; t < pred.size(); ++t) {
    const TrackwiseFrame& f = pred[t];
    for (int m = 0; m < f.num_tracks; ++m) {
      int best = 0;
      for (int c = 1; c < f.num_classes; ++c) {
        if (f.Sed(m, c) > f.Sed(m, best)) best = c;
      }
      if (!(f.Sed(m, best) >= threshold)) continue;
      events.push_back({static_cast<int>(t), m, best, Normalized(f.Doa(m))});
    }
  }
  return events;
}

}  // namespace seld
