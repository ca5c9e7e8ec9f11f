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

#ifndef SELD_FEATURES_H_
#define SELD_FEATURES_H_

#include <complex>
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "seld/scene.h"
#include "json.hpp"

namespace seld {

// Per-channel short-time spectra, stored channel-major as
// [channel][frame][bin].
struct ComplexSpectrogram {
  int channels = 0;
  int frames = 0;
  int bins = 0;
  int window_size = 0;
  int hop_size = 0;
  int sample_rate = 0;
  std::vector<std::complex<double>> data;

  std::complex<double>& at(int c, int t, int f) {
    return data[(static_cast<size_t>(c) * frames + t) * bins + f];
  }
  const std::complex<double>& at(int c, int t, int f) const {
    return data[(static_cast<size_t>(c) * frames + t) * bins + f];
  }
};

// Values double as the u32 tag in feature files.
enum class FeatureLayout : uint32_t {
  kLogMelIv = 1,         // 4 log-mel + 3 intensity-vector channels
  kSalsa = 2,            // 4 log-linear + 3 eigenvector channels
  kStackedLogMelIv = 3,  // two arrays of kLogMelIv
  kStackedSalsa = 4,     // two arrays of kSalsa
  kLogMel = 5,           // 4 log-mel channels on their own
  kIntensity = 6,        // 3 intensity-vector channels on their own
};

int LayoutChannels(FeatureLayout layout);
std::string LayoutName(FeatureLayout layout);

// True if channel `c` of `layout` holds a log power (masked to the log
// floor); false for direction-like channels (masked to 0).
bool IsLogChannel(FeatureLayout layout, int c);

enum class BinScale { kMel, kLinear };

// Real-valued channels x frames x bins, channel-major.
struct FeatureTensor {
  FeatureLayout layout = FeatureLayout::kLogMelIv;
  BinScale bin_scale = BinScale::kMel;
  int channels = 0;
  int frames = 0;
  int bins = 0;
  std::vector<double> data;

  FeatureTensor() = default;
  FeatureTensor(FeatureLayout layout, BinScale scale, int frames, int bins);

  double& at(int c, int t, int f) {
    return data[(static_cast<size_t>(c) * frames + t) * bins + f];
  }
  double at(int c, int t, int f) const {
    return data[(static_cast<size_t>(c) * frames + t) * bins + f];
  }
  bool SameShape(const FeatureTensor& o) const {
    return channels == o.channels && frames == o.frames && bins == o.bins;
  }
  bool operator==(const FeatureTensor&) const = default;
};

inline constexpr double kLogFloor = 1e-10;  // -100 dB
inline constexpr double kLogFloorDb = -100.0;

// Periodic Hann window, no edge padding; frames = (n - N) / hop + 1.
ComplexSpectrogram Stft(const FoaClip& clip, int window_size, int hop_size);

double HzToMel(double hz);
double MelToHz(double mel);

struct MelFilterbank {
  int n_mels = 0;
  int n_bins = 0;
  double fmin = 0.0;
  double fmax = 0.0;
  int sample_rate = 0;
  std::vector<double> weights;  // n_mels x n_bins

  double at(int m, int k) const {
    return weights[static_cast<size_t>(m) * n_bins + k];
  }
};

// Triangular HTK-mel filters with peak 1. fmax <= 0 means fs / 2.
MelFilterbank MakeMelFilterbank(int n_mels, double fmin, double fmax,
                                int n_bins, int sample_rate);

FeatureTensor LogMel(const ComplexSpectrogram& spec, const MelFilterbank& fb,
                     double floor = kLogFloor);

FeatureTensor IntensityVector(const ComplexSpectrogram& spec,
                              const MelFilterbank& fb, double eps = 1e-8);

struct SalsaOptions {
  int avg_frames = 3;
  int avg_bins = 3;
  double clip_value = 5.0;
  double eigen_gate = 1e-8;
  double eps = 1e-8;
  double floor = kLogFloor;
};

FeatureTensor Salsa(const ComplexSpectrogram& spec,
                    const SalsaOptions& opts = {});

// Largest eigenvalue of a Hermitian matrix and a unit eigenvector for it.
struct Eigenpair {
  double value = 0.0;
  Eigen::Vector4cd vector;
};
Eigenpair PrincipalEigenpair(const Eigen::Matrix4cd& cov);

// Concatenates log-mel (4) and IV (3) channels into kLogMelIv.
FeatureTensor ConcatLogMelIv(const FeatureTensor& logmel,
                             const FeatureTensor& iv);

// Channel concatenation, array A first.
FeatureTensor StackArrays(const FeatureTensor& a, const FeatureTensor& b);

enum class FeatureFamily { kLogMelIv, kSalsa };

struct FeatureConfig {
  FeatureFamily family = FeatureFamily::kLogMelIv;
  int logmel_window = 1024;
  int logmel_hop = 400;
  int n_mels = 128;
  double fmin = 20.0;
  double fmax = 0.0;  // 0 = Nyquist
  int salsa_window = 512;
  int salsa_hop = 400;
  SalsaOptions salsa;
  double iv_eps = 1e-8;
  bool dual_array = true;

  static FeatureConfig FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

// Single-array 7-channel features for one clip.
FeatureTensor ExtractArrayFeatures(const FoaClip& clip,
                                   const FeatureConfig& cfg);

// 14-channel stack when cfg.dual_array, else array A only.
FeatureTensor ExtractFeatures(const FoaClip& a, const FoaClip& b,
                              const FeatureConfig& cfg);

// Feature file: "SLDF", u32 version, u32 layout, u32 channels, frames, bins,
// then little-endian float32 values, channel-major.
void WriteFeatureFile(const FeatureTensor& feat, const std::string& path);
FeatureTensor ReadFeatureFile(const std::string& path);

}  // namespace seld

#endif  // SELD_FEATURES_H_
