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

#include "seld/augment.h"

#include <algorithm>

namespace seld {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void CheckWidth(int width, int limit, const std::string& what) {
  if (width < 1 || width > limit) {
    throw ConfigError(what + " must lie in [1, " + std::to_string(limit) +
                      "], got " + std::to_string(width));
  }
}

void CheckLambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw DataError("mixup lambda must lie in [0, 1]");
  }
}

// Writes the mask value into frames [t0, t1) x bins [f0, f1) of every
// channel.
void MaskBox(FeatureTensor& feat, int t0, int t1, int f0, int f1) {
  for (int c = 0; c < feat.channels; ++c) {
    const double v = MaskValue(feat, c);
    for (int t = t0; t < t1; ++t) {
      for (int f = f0; f < f1; ++f) feat.at(c, t, f) = v;
    }
  }
}

}  // namespace

bool IsLabelPreserving(const AugOp& op) {
  return std::holds_alternative<SpecAugmentOp>(op) ||
         std::holds_alternative<CutoutOp>(op);
}

std::string AugOpName(const AugOp& op) {
  return std::visit(Overloaded{[](const MixupOp&) { return "mixup"; },
                               [](const SpecAugmentOp&) { return "specaugment"; },
                               [](const CutoutOp&) { return "cutout"; },
                               [](const RotationOp&) { return "rotation"; }},
                    op);
}

nlohmann::json AugOpToJson(const AugOp& op) {
  return std::visit(
      Overloaded{
          [](const MixupOp& o) -> nlohmann::json {
            return {{"op", "mixup"}, {"alpha", o.alpha}};
          },
          [](const SpecAugmentOp& o) -> nlohmann::json {
            return {{"op", "specaugment"},
                    {"n_time_stripes", o.n_time_stripes},
                    {"n_freq_stripes", o.n_freq_stripes},
                    {"max_time_width", o.max_time_width},
                    {"max_freq_width", o.max_freq_width}};
          },
          [](const CutoutOp& o) -> nlohmann::json {
            return {{"op", "cutout"},
                    {"n_rects", o.n_rects},
                    {"max_h", o.max_h},
                    {"max_w", o.max_w}};
          },
          [](const RotationOp& o) -> nlohmann::json {
            return {{"op", "rotation"}, {"index", o.index}};
          }},
      op);
}

AugOp AugOpFromJson(const nlohmann::json& j) {
  try {
    const std::string name = j.at("op").get<std::string>();
    if (name == "mixup") {
      MixupOp o;
      o.alpha = j.value("alpha", o.alpha);
      if (!(o.alpha > 0.0)) throw ConfigError("mixup.alpha must be > 0");
      return o;
    }
    if (name == "specaugment") {
      SpecAugmentOp o;
      o.n_time_stripes = j.value("n_time_stripes", o.n_time_stripes);
      o.n_freq_stripes = j.value("n_freq_stripes", o.n_freq_stripes);
      o.max_time_width = j.value("max_time_width", o.max_time_width);
      o.max_freq_width = j.value("max_freq_width", o.max_freq_width);
      return o;
    }
    if (name == "cutout") {
      CutoutOp o;
      o.n_rects = j.value("n_rects", o.n_rects);
      o.max_h = j.value("max_h", o.max_h);
      o.max_w = j.value("max_w", o.max_w);
      return o;
    }
    if (name == "rotation") {
      RotationOp o;
      o.index = j.value("index", o.index);
      if (o.index < 0 || o.index >= kRotationGroupSize) {
        throw ConfigError("rotation.index must be in [0, 47]");
      }
      return o;
    }
    throw ConfigError("unknown augmentation op '" + name + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("augmentation op: ") + e.what());
  }
}

void ValidateOp(const AugOp& op, const FeatureTensor& feat) {
  std::visit(
      Overloaded{
          [](const MixupOp& o) {
            if (!(o.alpha > 0.0)) throw ConfigError("mixup.alpha must be > 0");
          },
          [&](const SpecAugmentOp& o) {
            if (o.n_time_stripes < 0 || o.n_freq_stripes < 0) {
              throw ConfigError("specaugment: stripe counts must be >= 0");
            }
            if (o.n_time_stripes > 0) {
              CheckWidth(o.max_time_width, feat.frames,
                         "specaugment.max_time_width");
            }
            if (o.n_freq_stripes > 0) {
              CheckWidth(o.max_freq_width, feat.bins,
                         "specaugment.max_freq_width");
            }
          },
          [&](const CutoutOp& o) {
            if (o.n_rects < 0) throw ConfigError("cutout.n_rects must be >= 0");
            if (o.n_rects > 0) {
              CheckWidth(o.max_h, feat.bins, "cutout.max_h");
              CheckWidth(o.max_w, feat.frames, "cutout.max_w");
            }
          },
          [](const RotationOp& o) {
            if (o.index < 0 || o.index >= kRotationGroupSize) {
              throw ConfigError("rotation.index must be in [0, 47]");
            }
          }},
      op);
}

double MaskValue(const FeatureTensor& feat, int c) {
  return IsLogChannel(feat.layout, c) ? kLogFloorDb : 0.0;
}

FeatureTensor SpecAugment(const FeatureTensor& feat, const SpecAugmentOp& op,
                          Rng& rng) {
  ValidateOp(op, feat);
  FeatureTensor out = feat;
  for (int i = 0; i < op.n_time_stripes; ++i) {
    const int w = rng.UniformInt(1, op.max_time_width);
    const int t0 = rng.UniformInt(0, feat.frames - w);
    MaskBox(out, t0, t0 + w, 0, feat.bins);
  }
  for (int i = 0; i < op.n_freq_stripes; ++i) {
    const int w = rng.UniformInt(1, op.max_freq_width);
    const int f0 = rng.UniformInt(0, feat.bins - w);
    MaskBox(out, 0, feat.frames, f0, f0 + w);
  }
  return out;
}

FeatureTensor Cutout(const FeatureTensor& feat, const CutoutOp& op, Rng& rng) {
  ValidateOp(op, feat);
  FeatureTensor out = feat;
  for (int i = 0; i < op.n_rects; ++i) {
    const int h = rng.UniformInt(1, op.max_h);
    const int w = rng.UniformInt(1, op.max_w);
    const int f0 = rng.UniformInt(0, feat.bins - h);
    const int t0 = rng.UniformInt(0, feat.frames - w);
    MaskBox(out, t0, t0 + w, f0, f0 + h);
  }
  return out;
}

FeatureTensor ApplyFeatureOp(const FeatureTensor& feat, const AugOp& op,
                             Rng& rng) {
  if (const auto* s = std::get_if<SpecAugmentOp>(&op)) {
    return SpecAugment(feat, *s, rng);
  }
  if (const auto* c = std::get_if<CutoutOp>(&op)) return Cutout(feat, *c, rng);
  throw ConfigError(AugOpName(op) +
                    " changes labels and cannot run as a feature op");
}

std::optional<TrackwiseSeq> PackLabelUnion(const TrackwiseSeq& a,
                                           const TrackwiseSeq& b) {
  if (a.size() != b.size()) {
    throw DataError("mixup: label sequences differ in length");
  }
  TrackwiseSeq out = a;
  for (size_t t = 0; t < a.size(); ++t) {
    TrackwiseFrame& dst = out[t];
    const TrackwiseFrame& src = b[t];
    if (src.num_tracks != dst.num_tracks ||
        src.num_classes != dst.num_classes) {
      throw DataError("mixup: label shapes differ");
    }
    for (int m = 0; m < src.num_tracks; ++m) {
      const int cls = src.ActiveClass(m);
      if (cls < 0) continue;
      int free = -1;
      for (int d = 0; d < dst.num_tracks && free < 0; ++d) {
        if (dst.ActiveClass(d) < 0) free = d;
      }
      if (free < 0) return std::nullopt;
      dst.Sed(free, cls) = 1.0;
      dst.SetDoa(free, src.Doa(m));
    }
  }
  return out;
}

std::optional<Labeled<FoaClip>> MixupWaveforms(const Labeled<FoaClip>& a,
                                               const Labeled<FoaClip>& b,
                                               double lambda) {
  CheckLambda(lambda);
  if (a.data.NumSamples() != b.data.NumSamples() ||
      a.data.sample_rate != b.data.sample_rate) {
    throw DataError("mixup: clips differ in length or sample rate");
  }
  if (lambda == 1.0) return a;
  if (lambda == 0.0) return b;
  auto labels = PackLabelUnion(a.labels, b.labels);
  if (!labels) return std::nullopt;
  Labeled<FoaClip> out{a.data, std::move(*labels)};
  for (int c = 0; c < 4; ++c) {
    auto& dst = out.data.channels[c];
    const auto& src = b.data.channels[c];
    for (size_t i = 0; i < dst.size(); ++i) {
      dst[i] = lambda * dst[i] + (1.0 - lambda) * src[i];
    }
  }
  return out;
}

std::optional<Labeled<FeatureTensor>> MixupFeatures(
    const Labeled<FeatureTensor>& a, const Labeled<FeatureTensor>& b,
    double lambda) {
  CheckLambda(lambda);
  if (!a.data.SameShape(b.data) || a.data.layout != b.data.layout) {
    throw DataError("mixup: feature shapes or layouts differ");
  }
  if (lambda == 1.0) return a;
  if (lambda == 0.0) return b;
  auto labels = PackLabelUnion(a.labels, b.labels);
  if (!labels) return std::nullopt;
  Labeled<FeatureTensor> out{a.data, std::move(*labels)};
  for (size_t i = 0; i < out.data.data.size(); ++i) {
    out.data.data[i] = lambda * a.data.data[i] + (1.0 - lambda) * b.data.data[i];
  }
  return out;
}

FeatureTensor AugmixCompose(const FeatureTensor& feat,
                            const std::vector<AugOp>& pool,
                            const AugMixOptions& opts, Rng& rng,
                            AugMixTrace* trace) {
  if (opts.k < 1) throw ConfigError("augmix: k must be >= 1");
  if (opts.max_chain_length < 1) {
    throw ConfigError("augmix: max_chain_length must be >= 1");
  }
  if (pool.empty()) throw ConfigError("augmix: empty op pool");
  for (const auto& op : pool) {
    if (!IsLabelPreserving(op)) {
      throw ConfigError("augmix: op pool contains label-altering op '" +
                        AugOpName(op) + "'; apply it as a pre-transform");
    }
    ValidateOp(op, feat);
  }
  AugChainSet set;
  set.dirichlet_alpha = opts.dirichlet_alpha;
  set.skip_beta_alpha = opts.skip_beta_alpha;
  for (int i = 0; i < opts.k; ++i) {
    const int len = rng.UniformInt(1, opts.max_chain_length);
    std::vector<AugOp> chain;
    for (int j = 0; j < len; ++j) {
      chain.push_back(pool[rng.UniformInt(0, static_cast<int>(pool.size()) - 1)]);
    }
    set.chains.push_back(std::move(chain));
  }
  std::vector<FeatureTensor> outputs;
  for (const auto& chain : set.chains) {
    outputs.push_back(SerialCompose(feat, chain, rng));
  }
  set.weights = rng.Dirichlet(std::vector<double>(opts.k, opts.dirichlet_alpha));
  set.skip_weight = opts.force_skip_weight
                        ? *opts.force_skip_weight
                        : rng.Beta(opts.skip_beta_alpha, opts.skip_beta_alpha);

  FeatureTensor out = feat;
  const double m = set.skip_weight;
  for (size_t i = 0; i < out.data.size(); ++i) {
    double mixed = 0.0;
    for (int c = 0; c < opts.k; ++c) mixed += set.weights[c] * outputs[c].data[i];
    out.data[i] = m * feat.data[i] + (1.0 - m) * mixed;
  }
  if (trace != nullptr) {
    trace->chain_set = std::move(set);
    trace->chain_outputs = std::move(outputs);
  }
  return out;
}

FeatureTensor SerialCompose(const FeatureTensor& feat,
                            const std::vector<AugOp>& ops, Rng& rng) {
  FeatureTensor out = feat;
  for (const auto& op : ops) out = ApplyFeatureOp(out, op, rng);
  return out;
}

AugmentPolicy AugmentPolicy::FromJson(const nlohmann::json& j) {
  AugmentPolicy p;
  if (!j.is_object()) throw ConfigError("augment: expected a table");
  try {
    if (j.contains("pool")) {
      p.pool.clear();
      for (const auto& jo : j.at("pool")) p.pool.push_back(AugOpFromJson(jo));
    }
    const std::string mode = j.value("mode", std::string("chains"));
    if (mode == "none") {
      p.mode = AugMode::kNone;
    } else if (mode == "serial") {
      p.mode = AugMode::kSerial;
    } else if (mode == "chains") {
      p.mode = AugMode::kChains;
    } else {
      throw ConfigError("augment.mode: expected none|serial|chains");
    }
    p.augmix.k = j.value("k", p.augmix.k);
    p.augmix.max_chain_length =
        j.value("max_chain_length", p.augmix.max_chain_length);
    p.augmix.dirichlet_alpha =
        j.value("dirichlet_alpha", p.augmix.dirichlet_alpha);
    p.augmix.skip_beta_alpha =
        j.value("skip_beta_alpha", p.augmix.skip_beta_alpha);
    p.rotation = j.value("rotation", p.rotation);
    p.waveform_mixup = j.value("waveform_mixup", p.waveform_mixup);
    p.mixup_alpha = j.value("mixup_alpha", p.mixup_alpha);
    p.mixup_retries = j.value("mixup_retries", p.mixup_retries);
    p.copies = j.value("copies", p.copies);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("augment: ") + e.what());
  }
  if (p.mode != AugMode::kNone) {
    for (const auto& op : p.pool) {
      if (!IsLabelPreserving(op)) {
        throw ConfigError("augment.pool: '" + AugOpName(op) +
                          "' alters labels; use the rotation/waveform_mixup "
                          "pre-transform switches instead");
      }
    }
  }
  if (p.augmix.k < 1) throw ConfigError("augment.k must be >= 1");
  if (!(p.augmix.dirichlet_alpha > 0.0) || !(p.augmix.skip_beta_alpha > 0.0) ||
      !(p.mixup_alpha > 0.0)) {
    throw ConfigError("augment: distribution parameters must be > 0");
  }
  if (p.copies < 1) throw ConfigError("augment.copies must be >= 1");
  return p;
}

nlohmann::json AugmentPolicy::ToJson() const {
  nlohmann::json pool_json = nlohmann::json::array();
  for (const auto& op : pool) pool_json.push_back(AugOpToJson(op));
  const char* mode_name = mode == AugMode::kNone     ? "none"
                          : mode == AugMode::kSerial ? "serial"
                                                     : "chains";
  return {{"pool", pool_json},
          {"mode", mode_name},
          {"k", augmix.k},
          {"max_chain_length", augmix.max_chain_length},
          {"dirichlet_alpha", augmix.dirichlet_alpha},
          {"skip_beta_alpha", augmix.skip_beta_alpha},
          {"rotation", rotation},
          {"waveform_mixup", waveform_mixup},
          {"mixup_alpha", mixup_alpha},
          {"mixup_retries", mixup_retries},
          {"copies", copies}};
}

}  // namespace seld
