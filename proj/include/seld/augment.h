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

#ifndef SELD_AUGMENT_H_
#define SELD_AUGMENT_H_

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "seld/features.h"
#include "seld/rng.h"
#include "seld/rotation.h"
#include "seld/trackwise.h"
#include "json.hpp"

namespace seld {

struct MixupOp {
  double alpha = 0.5;  // Beta(alpha, alpha) for the mixing weight
};

// Masks time stripes (frames) and frequency stripes (bins).
struct SpecAugmentOp {
  int n_time_stripes = 2;
  int n_freq_stripes = 2;
  int max_time_width = 8;
  int max_freq_width = 8;
};

// Masks rectangles of up to max_h bins by max_w frames.
struct CutoutOp {
  int n_rects = 2;
  int max_h = 8;
  int max_w = 8;
};

struct RotationOp {
  int index = 0;  // into RotationGroup()
};

using AugOp = std::variant<MixupOp, SpecAugmentOp, CutoutOp, RotationOp>;

// Only the masking ops leave labels untouched.
bool IsLabelPreserving(const AugOp& op);
std::string AugOpName(const AugOp& op);
nlohmann::json AugOpToJson(const AugOp& op);
AugOp AugOpFromJson(const nlohmann::json& j);

// Throws ConfigError if a width is < 1 or larger than the tensor extent.
void ValidateOp(const AugOp& op, const FeatureTensor& feat);

// Value written into masked cells of channel c: the log floor for log
// channels, 0 for direction channels.
double MaskValue(const FeatureTensor& feat, int c);

FeatureTensor SpecAugment(const FeatureTensor& feat, const SpecAugmentOp& op,
                          Rng& rng);
FeatureTensor Cutout(const FeatureTensor& feat, const CutoutOp& op, Rng& rng);

// Applies one label-preserving op.
FeatureTensor ApplyFeatureOp(const FeatureTensor& feat, const AugOp& op,
                             Rng& rng);

// Union of the active rows of two label sequences: a's rows stay on their
// tracks, b's rows take the lowest free track per frame. nullopt when a
// frame would need more tracks than available.
std::optional<TrackwiseSeq> PackLabelUnion(const TrackwiseSeq& a,
                                           const TrackwiseSeq& b);

template <typename T>
struct Labeled {
  T data;
  TrackwiseSeq labels;
};

// lambda * a + (1 - lambda) * b with union labels; lambda == 1 returns a and
// lambda == 0 returns b unchanged. nullopt is a retryable rejection (the
// overlap cap would be exceeded; draw another partner).
std::optional<Labeled<FoaClip>> MixupWaveforms(const Labeled<FoaClip>& a,
                                               const Labeled<FoaClip>& b,
                                               double lambda);
std::optional<Labeled<FeatureTensor>> MixupFeatures(
    const Labeled<FeatureTensor>& a, const Labeled<FeatureTensor>& b,
    double lambda);

// k sampled chains with their mixing weights.
struct AugChainSet {
  std::vector<std::vector<AugOp>> chains;
  std::vector<double> weights;  // Dirichlet draw, sums to 1
  double skip_weight = 0.0;     // m, the weight on the clean input
  double dirichlet_alpha = 1.0;
  double skip_beta_alpha = 1.0;
};

struct AugMixOptions {
  int k = 3;
  int max_chain_length = 3;
  double dirichlet_alpha = 1.0;
  double skip_beta_alpha = 1.0;
  std::optional<double> force_skip_weight;  // fixes m instead of sampling
};

struct AugMixTrace {
  AugChainSet chain_set;
  std::vector<FeatureTensor> chain_outputs;
};

// out = m * feat + (1 - m) * sum_i w_i * chain_i(feat). Every op in `pool`
// must be label preserving.
FeatureTensor AugmixCompose(const FeatureTensor& feat,
                            const std::vector<AugOp>& pool,
                            const AugMixOptions& opts, Rng& rng,
                            AugMixTrace* trace = nullptr);

// Applies ops one after another, no mixing.
FeatureTensor SerialCompose(const FeatureTensor& feat,
                            const std::vector<AugOp>& ops, Rng& rng);

enum class AugMode { kNone, kSerial, kChains };

// Augmentation policy file contents.
struct AugmentPolicy {
  std::vector<AugOp> pool = {SpecAugmentOp{}, CutoutOp{}};
  AugMode mode = AugMode::kChains;
  AugMixOptions augmix;
  bool rotation = true;         // random group element before extraction
  bool waveform_mixup = false;  // mixes with a random partner clip
  double mixup_alpha = 0.5;
  int mixup_retries = 8;
  int copies = 1;  // augmented copies per clip

  static AugmentPolicy FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

}  // namespace seld

#endif  // SELD_AUGMENT_H_
