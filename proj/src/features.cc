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

#include "seld/features.h"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace seld {

namespace {

// FFTW planning is not thread-safe; plans are created once per size under a
// lock and executed with the new-array interface. FFTW_ESTIMATE keeps the
// chosen algorithm, and therefore the output bits, fixed across runs.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  void Execute(double* in, fftw_complex* out) const {
    fftw_execute_dft_r2c(plan_, in, out);
  }
  int size() const { return n_; }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

const RealFft& FftForSize(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<RealFft>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

void CheckFourChannels(const ComplexSpectrogram& spec, const char* what) {
  if (spec.channels != 4) {
    throw DataError(std::string(what) + ": expected 4 (W,X,Y,Z) channels, got " +
                    std::to_string(spec.channels));
  }
}

void CheckBins(const ComplexSpectrogram& spec, const MelFilterbank& fb) {
  if (spec.bins != fb.n_bins) {
    throw DataError("filterbank has " + std::to_string(fb.n_bins) +
                    " bins but spectrogram has " + std::to_string(spec.bins));
  }
}

}  // namespace

int LayoutChannels(FeatureLayout layout) {
  switch (layout) {
    case FeatureLayout::kLogMelIv:
    case FeatureLayout::kSalsa:
      return 7;
    case FeatureLayout::kStackedLogMelIv:
    case FeatureLayout::kStackedSalsa:
      return 14;
    case FeatureLayout::kLogMel:
      return 4;
    case FeatureLayout::kIntensity:
      return 3;
  }
  throw DataError("unknown feature layout");
}

std::string LayoutName(FeatureLayout layout) {
  switch (layout) {
    case FeatureLayout::kLogMelIv:
      return "logmel_iv";
    case FeatureLayout::kSalsa:
      return "salsa";
    case FeatureLayout::kStackedLogMelIv:
      return "stacked_logmel_iv";
    case FeatureLayout::kStackedSalsa:
      return "stacked_salsa";
    case FeatureLayout::kLogMel:
      return "logmel";
    case FeatureLayout::kIntensity:
      return "iv";
  }
  return "unknown";
}

bool IsLogChannel(FeatureLayout layout, int c) {
  switch (layout) {
    case FeatureLayout::kLogMel:
      return true;
    case FeatureLayout::kIntensity:
      return false;
    default:
      return c % 7 < 4;
  }
}

FeatureTensor::FeatureTensor(FeatureLayout layout_tag, BinScale scale,
                             int num_frames, int num_bins)
    : layout(layout_tag),
      bin_scale(scale),
      channels(LayoutChannels(layout_tag)),
      frames(num_frames),
      bins(num_bins),
      data(static_cast<size_t>(channels) * num_frames * num_bins, 0.0) {}

ComplexSpectrogram Stft(const FoaClip& clip, int window_size, int hop_size) {
  if (window_size < 2 || window_size % 2 != 0 || hop_size < 1) {
    throw ConfigError("stft: window must be even and >= 2, hop >= 1");
  }
  const size_t n = clip.NumSamples();
  if (n < static_cast<size_t>(window_size)) {
    throw DataError("stft: clip has " + std::to_string(n) +
                    " samples, shorter than one window of " +
                    std::to_string(window_size));
  }
  ComplexSpectrogram spec;
  spec.channels = 4;
  spec.frames = static_cast<int>((n - window_size) / hop_size + 1);
  spec.bins = window_size / 2 + 1;
  spec.window_size = window_size;
  spec.hop_size = hop_size;
  spec.sample_rate = clip.sample_rate;
  spec.data.resize(static_cast<size_t>(4) * spec.frames * spec.bins);

  std::vector<double> window(window_size);
  for (int i = 0; i < window_size; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / window_size);
  }
  const RealFft& fft = FftForSize(window_size);
  double* in = fftw_alloc_real(window_size);
  fftw_complex* out = fftw_alloc_complex(spec.bins);
  for (int c = 0; c < 4; ++c) {
    const std::vector<double>& x = clip.channels[c];
    for (int t = 0; t < spec.frames; ++t) {
      const double* frame = x.data() + static_cast<size_t>(t) * hop_size;
      for (int i = 0; i < window_size; ++i) in[i] = frame[i] * window[i];
      fft.Execute(in, out);
      for (int f = 0; f < spec.bins; ++f) {
        spec.at(c, t, f) = {out[f][0], out[f][1]};
      }
    }
  }
  fftw_free(in);
  fftw_free(out);
  return spec;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank MakeMelFilterbank(int n_mels, double fmin, double fmax,
                                int n_bins, int sample_rate) {
  if (fmax <= 0.0) fmax = sample_rate / 2.0;
  if (n_mels < 1) throw ConfigError("mel filterbank: n_mels must be >= 1");
  if (n_bins < 2) throw ConfigError("mel filterbank: need >= 2 bins");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw ConfigError("mel filterbank: need 0 <= fmin < fmax <= fs/2");
  }
  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.n_bins = n_bins;
  fb.fmin = fmin;
  fb.fmax = fmax;
  fb.sample_rate = sample_rate;
  fb.weights.assign(static_cast<size_t>(n_mels) * n_bins, 0.0);

  // n_mels + 2 equally spaced mel points: edges and centres.
  const double mel_lo = HzToMel(fmin);
  const double mel_hi = HzToMel(fmax);
  std::vector<double> points(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    points[i] = mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1);
  }
  const int fft_size = 2 * (n_bins - 1);
  for (int m = 0; m < n_mels; ++m) {
    const double left = points[m];
    const double centre = points[m + 1];
    const double right = points[m + 2];
    bool any = false;
    for (int k = 0; k < n_bins; ++k) {
      const double mel =
          HzToMel(static_cast<double>(k) * sample_rate / fft_size);
      double w = 0.0;
      if (mel > left && mel <= centre) {
        w = (mel - left) / (centre - left);
      } else if (mel > centre && mel < right) {
        w = (right - mel) / (right - centre);
      }
      fb.weights[static_cast<size_t>(m) * n_bins + k] = w;
      any |= w > 0.0;
    }
    if (!any) {
      throw ConfigError(
          "mel filterbank: filter " + std::to_string(m) +
          " covers no FFT bin (centres " + std::to_string(m) + " and " +
          std::to_string(m + 1) + " fall between the same bins); use fewer "
          "mels or a longer window");
    }
  }
  return fb;
}

FeatureTensor LogMel(const ComplexSpectrogram& spec, const MelFilterbank& fb,
                     double floor) {
  CheckFourChannels(spec, "logmel");
  CheckBins(spec, fb);
  FeatureTensor out(FeatureLayout::kLogMel, BinScale::kMel, spec.frames,
                    fb.n_mels);
  std::vector<double> power(spec.bins);
  for (int c = 0; c < 4; ++c) {
    for (int t = 0; t < spec.frames; ++t) {
      for (int f = 0; f < spec.bins; ++f) power[f] = std::norm(spec.at(c, t, f));
      for (int m = 0; m < fb.n_mels; ++m) {
        const double* w = &fb.weights[static_cast<size_t>(m) * fb.n_bins];
        double acc = 0.0;
        for (int f = 0; f < spec.bins; ++f) acc += w[f] * power[f];
        out.at(c, t, m) = 10.0 * std::log10(std::max(acc, floor));
      }
    }
  }
  return out;
}

FeatureTensor IntensityVector(const ComplexSpectrogram& spec,
                              const MelFilterbank& fb, double eps) {
  CheckFourChannels(spec, "intensity vector");
  CheckBins(spec, fb);
  FeatureTensor out(FeatureLayout::kIntensity, BinScale::kMel, spec.frames,
                    fb.n_mels);
  std::vector<double> lin(3 * static_cast<size_t>(spec.bins));
  for (int t = 0; t < spec.frames; ++t) {
    for (int f = 0; f < spec.bins; ++f) {
      const std::complex<double> w = std::conj(spec.at(0, t, f));
      for (int d = 0; d < 3; ++d) {
        lin[d * spec.bins + f] = (w * spec.at(1 + d, t, f)).real();
      }
    }
    for (int m = 0; m < fb.n_mels; ++m) {
      const double* w = &fb.weights[static_cast<size_t>(m) * fb.n_bins];
      double mel[3] = {0.0, 0.0, 0.0};
      for (int d = 0; d < 3; ++d) {
        const double* src = &lin[d * spec.bins];
        for (int f = 0; f < spec.bins; ++f) mel[d] += w[f] * src[f];
      }
      const double norm =
          std::sqrt(mel[0] * mel[0] + mel[1] * mel[1] + mel[2] * mel[2]);
      for (int d = 0; d < 3; ++d) out.at(d, t, m) = mel[d] / (norm + eps);
    }
  }
  return out;
}

Eigenpair PrincipalEigenpair(const Eigen::Matrix4cd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(cov);
  // Eigenvalues come back in ascending order.
  return {solver.eigenvalues()(3), solver.eigenvectors().col(3)};
}

FeatureTensor Salsa(const ComplexSpectrogram& spec, const SalsaOptions& opts) {
  CheckFourChannels(spec, "salsa");
  if (opts.avg_frames < 1 || opts.avg_bins < 1) {
    throw ConfigError("salsa: averaging window must be at least 1x1");
  }
  FeatureTensor out(FeatureLayout::kSalsa, BinScale::kLinear, spec.frames,
                    spec.bins);
  for (int c = 0; c < 4; ++c) {
    for (int t = 0; t < spec.frames; ++t) {
      for (int f = 0; f < spec.bins; ++f) {
        out.at(c, t, f) =
            10.0 * std::log10(std::max(std::norm(spec.at(c, t, f)), opts.floor));
      }
    }
  }

  // Rank-1 outer products per TF bin, then box-averaged with clipped edges.
  using Mat4 = Eigen::Matrix4cd;
  const int half_t = opts.avg_frames / 2;
  const int half_f = opts.avg_bins / 2;
  std::vector<Mat4, Eigen::aligned_allocator<Mat4>> outer(
      static_cast<size_t>(spec.frames) * spec.bins);
  for (int t = 0; t < spec.frames; ++t) {
    for (int f = 0; f < spec.bins; ++f) {
      Eigen::Vector4cd x;
      for (int c = 0; c < 4; ++c) x(c) = spec.at(c, t, f);
      outer[static_cast<size_t>(t) * spec.bins + f] = x * x.adjoint();
    }
  }
  for (int t = 0; t < spec.frames; ++t) {
    for (int f = 0; f < spec.bins; ++f) {
      Mat4 cov = Mat4::Zero();
      int count = 0;
      for (int dt = -half_t; dt <= half_t; ++dt) {
        const int tt = t + dt;
        if (tt < 0 || tt >= spec.frames) continue;
        for (int df = -half_f; df <= half_f; ++df) {
          const int ff = f + df;
          if (ff < 0 || ff >= spec.bins) continue;
          cov += outer[static_cast<size_t>(tt) * spec.bins + ff];
          ++count;
        }
      }
      cov /= static_cast<double>(count);
      const Eigenpair top = PrincipalEigenpair(cov);
      if (!(top.value >= opts.eigen_gate)) continue;
      Eigen::Vector4cd v = top.vector;
      const double mag0 = std::abs(v(0));
      if (mag0 > 0.0) v *= std::conj(v(0)) / mag0;
      for (int d = 0; d < 3; ++d) {
        const double r = v(1 + d).real() / (mag0 + opts.eps);
        out.at(4 + d, t, f) = std::clamp(r, -opts.clip_value, opts.clip_value);
      }
    }
  }
  return out;
}

FeatureTensor ConcatLogMelIv(const FeatureTensor& logmel,
                             const FeatureTensor& iv) {
  if (logmel.layout != FeatureLayout::kLogMel ||
      iv.layout != FeatureLayout::kIntensity) {
    throw DataError("concat: expected log-mel and IV tensors");
  }
  if (logmel.frames != iv.frames || logmel.bins != iv.bins) {
    throw DataError("concat: log-mel and IV shapes differ");
  }
  FeatureTensor out(FeatureLayout::kLogMelIv, BinScale::kMel, logmel.frames,
                    logmel.bins);
  std::copy(logmel.data.begin(), logmel.data.end(), out.data.begin());
  std::copy(iv.data.begin(), iv.data.end(),
            out.data.begin() + logmel.data.size());
  return out;
}

FeatureTensor StackArrays(const FeatureTensor& a, const FeatureTensor& b) {
  if (a.layout != b.layout) {
    throw DataError("stack: layout mismatch (" + LayoutName(a.layout) +
                    " vs " + LayoutName(b.layout) + ")");
  }
  if (a.layout != FeatureLayout::kLogMelIv &&
      a.layout != FeatureLayout::kSalsa) {
    throw DataError("stack: only 7-channel single-array tensors stack");
  }
  if (!a.SameShape(b)) {
    throw DataError("stack: shape mismatch (" + std::to_string(a.frames) +
                    "x" + std::to_string(a.bins) + " vs " +
                    std::to_string(b.frames) + "x" + std::to_string(b.bins) +
                    ")");
  }
  const FeatureLayout layout = a.layout == FeatureLayout::kLogMelIv
                                   ? FeatureLayout::kStackedLogMelIv
                                   : FeatureLayout::kStackedSalsa;
  FeatureTensor out(layout, a.bin_scale, a.frames, a.bins);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
  return out;
}

FeatureConfig FeatureConfig::FromJson(const nlohmann::json& j) {
  FeatureConfig c;
  if (!j.is_object()) throw ConfigError("features: expected a table");
  try {
    const std::string family = j.value("family", std::string("logmel_iv"));
    if (family == "logmel_iv") {
      c.family = FeatureFamily::kLogMelIv;
    } else if (family == "salsa") {
      c.family = FeatureFamily::kSalsa;
    } else {
      throw ConfigError("features.family: unknown family '" + family + "'");
    }
    c.logmel_window = j.value("logmel_window", c.logmel_window);
    c.logmel_hop = j.value("logmel_hop", c.logmel_hop);
    c.n_mels = j.value("n_mels", c.n_mels);
    c.fmin = j.value("fmin", c.fmin);
    c.fmax = j.value("fmax", c.fmax);
    c.salsa_window = j.value("salsa_window", c.salsa_window);
    c.salsa_hop = j.value("salsa_hop", c.salsa_hop);
    c.salsa.avg_frames = j.value("salsa_avg_frames", c.salsa.avg_frames);
    c.salsa.avg_bins = j.value("salsa_avg_bins", c.salsa.avg_bins);
    c.salsa.clip_value = j.value("salsa_clip", c.salsa.clip_value);
    c.salsa.eigen_gate = j.value("salsa_gate", c.salsa.eigen_gate);
    c.iv_eps = j.value("iv_eps", c.iv_eps);
    c.dual_array = j.value("dual_array", c.dual_array);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("features: ") + e.what());
  }
  return c;
}

nlohmann::json FeatureConfig::ToJson() const {
  return {{"family", family == FeatureFamily::kLogMelIv ? "logmel_iv" : "salsa"},
          {"logmel_window", logmel_window},
          {"logmel_hop", logmel_hop},
          {"n_mels", n_mels},
          {"fmin", fmin},
          {"fmax", fmax},
          {"salsa_window", salsa_window},
          {"salsa_hop", salsa_hop},
          {"salsa_avg_frames", salsa.avg_frames},
          {"salsa_avg_bins", salsa.avg_bins},
          {"salsa_clip", salsa.clip_value},
          {"salsa_gate", salsa.eigen_gate},
          {"iv_eps", iv_eps},
          {"dual_array", dual_array}};
}

FeatureTensor ExtractArrayFeatures(const FoaClip& clip,
                                   const FeatureConfig& cfg) {
  if (cfg.family == FeatureFamily::kSalsa) {
    return Salsa(Stft(clip, cfg.salsa_window, cfg.salsa_hop), cfg.salsa);
  }
  const ComplexSpectrogram spec =
      Stft(clip, cfg.logmel_window, cfg.logmel_hop);
  const MelFilterbank fb = MakeMelFilterbank(cfg.n_mels, cfg.fmin, cfg.fmax,
                                             spec.bins, clip.sample_rate);
  return ConcatLogMelIv(LogMel(spec, fb), IntensityVector(spec, fb, cfg.iv_eps));
}

FeatureTensor ExtractFeatures(const FoaClip& a, const FoaClip& b,
                              const FeatureConfig& cfg) {
  FeatureTensor fa = ExtractArrayFeatures(a, cfg);
  if (!cfg.dual_array) return fa;
  return StackArrays(fa, ExtractArrayFeatures(b, cfg));
}

}  // namespace seld
