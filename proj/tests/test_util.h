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

#ifndef SELD_TESTS_TEST_UTIL_H_
#define SELD_TESTS_TEST_UTIL_H_

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "seld/features.h"
#include "seld/rng.h"
#include "seld/scene.h"

namespace seld::testing {

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path ScratchDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("seld_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Vec3 RandomDirection(Rng& rng) {
  Vec3 v;
  do {
    v = {rng.Normal(), rng.Normal(), rng.Normal()};
  } while (Norm(v) < 1e-3);
  return Normalized(v);
}

inline SourceEvent MakeEvent(int cls, double on, double off, Vec3 pos,
                             SignalSpec sig = {SignalKind::kSine, 1000.0, 0,
                                               0, 0},
                             double gain = 1.0) {
  SourceEvent e;
  e.class_id = cls;
  e.onset_s = on;
  e.offset_s = off;
  e.position = pos;
  e.signal = sig;
  e.gain = gain;
  return e;
}

inline SceneSpec ShortScene(double duration = 1.0, int fs = 32000) {
  SceneSpec s;
  s.duration_s = duration;
  s.sample_rate = fs;
  return s;
}

// Energy-weighted mean of the normalized intensity vectors over mel bins
// whose W power is within 30 dB of the loudest bin.
inline Vec3 IvDirectionEstimate(const FoaClip& clip, int n_mels = 128) {
  const ComplexSpectrogram spec = Stft(clip, 1024, 400);
  const MelFilterbank fb =
      MakeMelFilterbank(n_mels, 20.0, 0.0, spec.bins, clip.sample_rate);
  const FeatureTensor iv = IntensityVector(spec, fb);
  const FeatureTensor lm = LogMel(spec, fb);
  double peak = -1e300;
  for (int t = 0; t < lm.frames; ++t) {
    for (int m = 0; m < lm.bins; ++m) peak = std::max(peak, lm.at(0, t, m));
  }
  Vec3 acc = {0.0, 0.0, 0.0};
  for (int t = 0; t < lm.frames; ++t) {
    for (int m = 0; m < lm.bins; ++m) {
      if (lm.at(0, t, m) < peak - 30.0) continue;
      const double w = std::pow(10.0, lm.at(0, t, m) / 10.0);
      for (int d = 0; d < 3; ++d) acc[d] += w * iv.at(d, t, m);
    }
  }
  return Normalized(acc);
}

}  // namespace seld::testing

#endif  // SELD_TESTS_TEST_UTIL_H_
