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

#ifndef SELD_TESTS_TOY_DATA_H_
#define SELD_TESTS_TOY_DATA_H_

#include <vector>

#include "seld/features.h"
#include "seld/metrics.h"
#include "seld/rotation.h"
#include "seld/scene.h"
#include "seld/toynet.h"

namespace seld::testing {

struct ToyData {
  std::vector<TrainExample> train;
  std::vector<EvalClip> eval;
};

// Synthetic clips rendered for both arrays and turned into 14-channel
// log-mel + IV features with labels at a quarter of the feature rate.
inline ToyData MakeToyData(int clips, uint64_t seed, double duration_s,
                           int n_mels) {
  DatasetConfig dc;
  dc.duration_s = duration_s;
  dc.max_events = 3;
  dc.min_event_s = 0.5;
  dc.max_event_s = duration_s;
  FeatureConfig fc;
  fc.n_mels = n_mels;
  const RotationElement rot_b = RotationGroup()[dc.rotation_b];
  ToyData out;
  for (int i = 0; i < clips; ++i) {
    const SceneSpec scene = GenerateScene(dc, MixSeed(seed, i));
    const FoaClip a = EncodeFoa(scene);
    const FoaClip b = RotateFoa(a, rot_b);
    const FeatureTensor feat = ExtractFeatures(a, b, fc);
    const int label_frames = static_cast<int>(scene.NumSamples() / dc.label_hop_samples);
    out.train.push_back({feat, LabelFrames(scene, dc.label_hop_samples, label_frames)});
    out.eval.push_back({feat, ReferenceEvents(scene, dc.label_hop_samples, label_frames)});
  }
  return out;
}

inline void NormalizeFrom(ToyNet& net, const ToyData& data) {
  std::vector<const FeatureTensor*> feats;
  for (const auto& ex : data.train) feats.push_back(&ex.features);
  std::vector<double> mean, stddev;
  ChannelStatistics(feats, &mean, &stddev);
  net.SetInputNormalization(mean, stddev);
}

}  // namespace seld::testing

#endif  // SELD_TESTS_TOY_DATA_H_
