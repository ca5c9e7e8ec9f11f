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

#ifndef SELD_TOYNET_H_
#define SELD_TOYNET_H_

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "seld/features.h"
#include "seld/metrics.h"
#include "seld/nn.h"
#include "seld/pit.h"
#include "seld/trackwise.h"
#include "json.hpp"

namespace seld {

struct ToyNetConfig {
  int in_channels = 14;
  int in_bins = 128;
  int num_tracks = kDefaultTracks;
  int num_classes = kDefaultClasses;
  std::array<int, 2> conv_widths = {16, 32};
  int freq_pool = 4;  // per stage; time is always pooled by 2
  bool dense = false;
  int dense_layers = 2;  // conv layers per block when dense
  int hidden = 64;
  bool soft_sharing = true;  // false freezes every gate at 0
  double gate_init = 0.1;

  void Validate() const;
  int PooledBins() const;
  static ToyNetConfig FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

enum class Branch { kSed, kDoa };

class ConvBlock;

// Two branches (SED, DoA), each: two conv stages (3x3 conv + SiLU, pooling
// by 2 in time), a time-mixing layer and a track-wise head. Scalar
// cross-stitch gates couple the branches after each conv stage and after
// the time-mixing layer.
class ToyNet {
 public:
  ToyNet(const ToyNetConfig& cfg, uint64_t seed);
  ~ToyNet();
  ToyNet(const ToyNet&) = delete;
  ToyNet& operator=(const ToyNet&) = delete;

  // One frame per 4 input frames (rounded down).
  TrackwiseSeq Forward(const FeatureTensor& feat);
  // Gradient of the loss w.r.t. the last Forward's sed probabilities and
  // doa outputs; accumulates into parameter gradients.
  void Backward(const TrackwiseSeq& d_out);

  static int OutputFrames(int input_frames) { return input_frames / 4; }

  nn::ParamList Params();
  nn::ParamList BranchParams(Branch b);
  std::vector<nn::CrossStitch*> Gates();
  void ZeroGrad();
  int64_t NumParameters() const;

  // Per-channel normalization applied before the first conv.
  void SetInputNormalization(const std::vector<double>& mean,
                             const std::vector<double>& stddev);

  void LoadParams(const std::map<std::string, nn::Matrix>& values);
  const ToyNetConfig& config() const { return cfg_; }

 private:
  struct BranchLayers;

  ToyNetConfig cfg_;
  nn::Param norm_mean_;
  nn::Param norm_std_;
  std::unique_ptr<BranchLayers> sed_;
  std::unique_ptr<BranchLayers> doa_;
  std::array<nn::CrossStitch, 3> stitch_;
  nn::Matrix sed_prob_;
  nn::Matrix doa_out_;
  std::array<std::array<int, 2>, 2> stage_in_dims_{};  // (height, width)
  int pooled_frames_ = 0;
};

// Per-channel mean and standard deviation over all frames and bins.
void ChannelStatistics(const std::vector<const FeatureTensor*>& feats,
                       std::vector<double>* mean, std::vector<double>* stddev);

struct TrainConfig {
  int epochs = 100;
  double lr = 3e-4;
  double lr_final = 3e-5;
  double switch_fraction = 0.9;  // lr_final from this fraction of epochs on
  double weight_decay = 0.01;
  int batch_size = 4;
  double segment_s = 5.0;
  LossConfig loss;
  double eval_threshold_m = 1.0;
  double sed_threshold = 0.5;

  void Validate() const;
  static TrainConfig FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

// Learning rate for a 0-based epoch index.
double ScheduledLr(const TrainConfig& cfg, int epoch);

struct TrainExample {
  FeatureTensor features;
  TrackwiseSeq labels;  // at least OutputFrames(features.frames) frames
};

struct EvalClip {
  FeatureTensor features;
  std::vector<EventInstance> refs;
};

struct TrainReport {
  std::vector<double> train_loss;  // mean PIT loss per epoch
  std::vector<double> val_f;       // F at eval_threshold_m per epoch
};

using EpochCallback = std::function<void(int epoch, double loss, double f)>;

// Loss and gradient for one example; gradients accumulate scaled by
// `weight`. Throws NumericalError on a non-finite loss.
double AccumulateExample(ToyNet& net, const TrainExample& ex,
                         const LossConfig& loss, double weight);

// Location-sensitive F of the binarized outputs over all clips.
double EvaluateF(ToyNet& net, const std::vector<EvalClip>& clips,
                 double threshold_m, double sed_threshold);

TrainReport Train(ToyNet& net, const std::vector<TrainExample>& data,
                  const std::vector<EvalClip>& val, const TrainConfig& cfg,
                  uint64_t seed, const EpochCallback& on_epoch = nullptr);

}  // namespace seld

#endif  // SELD_TOYNET_H_
