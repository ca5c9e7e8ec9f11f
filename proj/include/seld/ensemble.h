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

#ifndef SELD_ENSEMBLE_H_
#define SELD_ENSEMBLE_H_

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "seld/metrics.h"
#include "seld/nn.h"
#include "seld/toynet.h"
#include "seld/trackwise.h"
#include "json.hpp"

namespace seld {

// Elementwise mean of sed and doa over models, track by track.
TrackwiseSeq AverageEnsemble(const std::vector<TrackwiseSeq>& models);

// Per frame, the N model outputs flattened to one vector of length
// N * M * (K + 3). Layout version 1: for each model in input order, its
// M x K sed block (track-major), then its M x 3 doa block (track-major).
inline constexpr int kEnsembleLayoutVersion = 1;

struct EnsembleInput {
  int num_models = 0;
  int num_tracks = kDefaultTracks;
  int num_classes = kDefaultClasses;
  std::vector<std::vector<double>> frames;

  int Width() const { return num_models * num_tracks * (num_classes + 3); }
};

EnsembleInput BuildEnsembleInput(const std::vector<TrackwiseSeq>& models);
std::vector<TrackwiseSeq> SplitEnsembleInput(const EnsembleInput& input);

struct EnsembleNetConfig {
  int num_models = 3;
  int num_tracks = kDefaultTracks;
  int num_classes = kDefaultClasses;
  int conv_channels = 32;
  int hidden = 16;
  bool soft_sharing = true;
  double gate_init = 0.1;
  // Start the heads as a pass-through of the first model's tracks, so
  // training begins from a single-model prediction rather than from noise.
  bool reference_init = true;

  void Validate() const;
  int InputWidth() const {
    return num_models * num_tracks * (num_classes + 3);
  }
  static EnsembleNetConfig FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

// Two branches (SED, DoA). Per branch: 3x3 conv over (frames x input
// features) with conv_channels maps, SiLU, 1x1 conv back to one map added
// to the input, a bidirectional GRU, and a track-wise head reading the GRU
// output next to the GRU input. Cross-stitch gates after the conv stage
// and after the GRU. One output frame per input frame.
class EnsembleNet {
 public:
  EnsembleNet(const EnsembleNetConfig& cfg, uint64_t seed);
  ~EnsembleNet();
  EnsembleNet(const EnsembleNet&) = delete;
  EnsembleNet& operator=(const EnsembleNet&) = delete;

  TrackwiseSeq Forward(const EnsembleInput& input);
  void Backward(const TrackwiseSeq& d_out);

  nn::ParamList Params();
  std::vector<nn::CrossStitch*> Gates();
  int64_t NumParameters() const;
  void LoadParams(const std::map<std::string, nn::Matrix>& values);
  const EnsembleNetConfig& config() const { return cfg_; }

 private:
  struct BranchLayers;

  EnsembleNetConfig cfg_;
  std::unique_ptr<BranchLayers> sed_;
  std::unique_ptr<BranchLayers> doa_;
  std::array<nn::CrossStitch, 2> stitch_;
  nn::Matrix sed_prob_;
  nn::Matrix doa_out_;
  int frames_ = 0;
};

struct EnsembleExample {
  EnsembleInput input;
  TrackwiseSeq labels;
};

struct EnsembleEvalClip {
  EnsembleInput input;
  std::vector<EventInstance> refs;
};

// Location-sensitive F of plain prediction sequences over several clips.
double ScoreSequences(const std::vector<TrackwiseSeq>& preds,
                      const std::vector<std::vector<EventInstance>>& refs,
                      double threshold_m, double sed_threshold = 0.5);

double EvaluateEnsembleF(EnsembleNet& net,
                         const std::vector<EnsembleEvalClip>& clips,
                         double threshold_m, double sed_threshold);

TrainReport TrainEnsemble(EnsembleNet& net,
                          const std::vector<EnsembleExample>& data,
                          const std::vector<EnsembleEvalClip>& val,
                          const TrainConfig& cfg, uint64_t seed,
                          const EpochCallback& on_epoch = nullptr);

struct PredictorNoise {
  double doa_sigma_rad = 0.05;
  double sed_on = 0.9;
  double sed_off = 0.1;
  double sed_jitter = 0.05;
  bool permute = true;
};

// N synthetic predictors built from track-wise labels. Each gets its own
// random track permutation for the whole clip, DoA vectors rotated by a
// random small rotation (angle ~ |N(0, sigma)| about a random axis) and
// smoothed, jittered sed values.
std::vector<TrackwiseSeq> SynthPermutedPredictors(const TrackwiseSeq& labels,
                                                  int num_models,
                                                  const PredictorNoise& noise,
                                                  uint64_t seed);

}  // namespace seld

#endif  // SELD_ENSEMBLE_H_
