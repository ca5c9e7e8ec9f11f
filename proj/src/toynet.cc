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

#include "seld/toynet.h"

#include <cmath>

#include "train_loop.h"

namespace seld {

using nn::Matrix;
using nn::RowMatrix;
using nn::Tensor3;

void ToyNetConfig::Validate() const {
  if (in_channels != 7 && in_channels != 14) {
    throw ConfigError("model.in_channels must be 7 or 14");
  }
  if (num_tracks < 1 || num_tracks > kMaxPitTracks) {
    throw ConfigError("model.num_tracks must be in [1, 4]");
  }
  if (num_classes < 1) throw ConfigError("model.num_classes must be >= 1");
  for (int w : conv_widths) {
    if (w < 1) throw ConfigError("model.conv_widths must be positive");
    if (dense && w % dense_layers != 0) {
      throw ConfigError(
          "model.conv_widths must be divisible by model.dense_layers");
    }
  }
  if (dense && dense_layers < 2) {
    throw ConfigError("model.dense_layers must be >= 2");
  }
  if (freq_pool < 1) throw ConfigError("model.freq_pool must be >= 1");
  if (hidden < 1) throw ConfigError("model.hidden must be >= 1");
  if (PooledBins() < 1) {
    throw ConfigError("model.in_bins too small for the frequency pooling");
  }
}

int ToyNetConfig::PooledBins() const {
  return in_bins / freq_pool / freq_pool;
}

ToyNetConfig ToyNetConfig::FromJson(const nlohmann::json& j) {
  ToyNetConfig c;
  c.in_channels = j.value("in_channels", c.in_channels);
  c.in_bins = j.value("in_bins", c.in_bins);
  c.num_tracks = j.value("num_tracks", c.num_tracks);
  c.num_classes = j.value("num_classes", c.num_classes);
  if (j.contains("conv_widths")) {
    const auto& w = j.at("conv_widths");
    if (!w.is_array() || w.size() != 2) {
      throw ConfigError("model.conv_widths must hold two integers");
    }
    c.conv_widths = {w[0].get<int>(), w[1].get<int>()};
  }
  c.freq_pool = j.value("freq_pool", c.freq_pool);
  c.dense = j.value("dense", c.dense);
  c.dense_layers = j.value("dense_layers", c.dense_layers);
  c.hidden = j.value("hidden", c.hidden);
  c.soft_sharing = j.value("soft_sharing", c.soft_sharing);
  c.gate_init = j.value("gate_init", c.gate_init);
  c.Validate();
  return c;
}

nlohmann::json ToyNetConfig::ToJson() const {
  return {{"in_channels", in_channels},   {"in_bins", in_bins},
          {"num_tracks", num_tracks},     {"num_classes", num_classes},
          {"conv_widths", conv_widths},   {"freq_pool", freq_pool},
          {"dense", dense},               {"dense_layers", dense_layers},
          {"hidden", hidden},             {"soft_sharing", soft_sharing},
          {"gate_init", gate_init}};
}

namespace {

Tensor3 ConcatChannels(const std::vector<const Tensor3*>& parts) {
  int c = 0;
  for (const Tensor3* p : parts) c += p->channels;
  Tensor3 out(c, parts.front()->height, parts.front()->width);
  int row = 0;
  for (const Tensor3* p : parts) {
    out.data.middleRows(row, p->channels) = p->data;
    row += p->channels;
  }
  return out;
}

Tensor3 SliceChannels(const Tensor3& x, int start, int count) {
  Tensor3 out(count, x.height, x.width);
  out.data = x.data.middleRows(start, count);
  return out;
}

}  // namespace

// A conv stage body. Plain: one 3x3 conv + SiLU. Dense: layer i sees the
// block input concatenated with the outputs of layers 0..i-1; the block
// emits the concatenation of all layer outputs.
class ConvBlock {
 public:
  void Init(const std::string& name, int in, int width, bool dense,
            int layers, Rng& rng) {
    in_ = in;
    const int n = dense ? layers : 1;
    growth_ = width / n;
    convs_.resize(n);
    for (int i = 0; i < n; ++i) {
      convs_[i].Init(name + ".conv" + std::to_string(i), in + i * growth_,
                     growth_, 3, rng);
    }
    pre_.resize(n);
  }

  Tensor3 Forward(const Tensor3& x) {
    std::vector<Tensor3> outs;
    outs.reserve(convs_.size());
    for (size_t i = 0; i < convs_.size(); ++i) {
      std::vector<const Tensor3*> parts = {&x};
      for (const auto& o : outs) parts.push_back(&o);
      pre_[i] = convs_[i].Forward(i == 0 ? x : ConcatChannels(parts));
      Tensor3 y = pre_[i];
      y.data = nn::Silu(pre_[i].data);
      outs.push_back(std::move(y));
    }
    if (outs.size() == 1) return std::move(outs.front());
    std::vector<const Tensor3*> parts;
    for (const auto& o : outs) parts.push_back(&o);
    return ConcatChannels(parts);
  }

  Tensor3 Backward(const Tensor3& dy) {
    const int n = static_cast<int>(convs_.size());
    std::vector<Tensor3> d_out;
    for (int i = 0; i < n; ++i) {
      d_out.push_back(SliceChannels(dy, i * growth_, growth_));
    }
    Tensor3 dx(in_, dy.height, dy.width);
    for (int i = n - 1; i >= 0; --i) {
      Tensor3 d_pre = d_out[i];
      d_pre.data = d_pre.data.cwiseProduct(nn::SiluGrad(pre_[i].data));
      const Tensor3 d_in = convs_[i].Backward(d_pre);
      dx.data += d_in.data.topRows(in_);
      for (int j = 0; j < i; ++j) {
        d_out[j].data += d_in.data.middleRows(in_ + j * growth_, growth_);
      }
    }
    return dx;
  }

  nn::ParamList Params() {
    nn::ParamList out;
    for (auto& c : convs_) {
      for (nn::Param* p : c.Params()) out.push_back(p);
    }
    return out;
  }

 private:
  int in_ = 0;
  int growth_ = 0;
  std::vector<nn::Conv2d> convs_;
  std::vector<Tensor3> pre_;
};

struct ToyNet::BranchLayers {
  std::array<ConvBlock, 2> blocks;
  nn::TimeMix mix;
  nn::Linear head;
  Matrix mix_pre;

  nn::ParamList Params() {
    nn::ParamList out;
    for (auto& b : blocks) {
      for (nn::Param* p : b.Params()) out.push_back(p);
    }
    for (nn::Param* p : mix.Params()) out.push_back(p);
    for (nn::Param* p : head.Params()) out.push_back(p);
    return out;
  }
};

ToyNet::ToyNet(const ToyNetConfig& cfg, uint64_t seed)
    : cfg_(cfg),
      sed_(std::make_unique<BranchLayers>()),
      doa_(std::make_unique<BranchLayers>()) {
  cfg_.Validate();
  Rng rng(seed);
  norm_mean_.Init("input.mean", cfg_.in_channels, 1);
  norm_std_.Init("input.std", cfg_.in_channels, 1);
  norm_std_.value.setOnes();
  norm_mean_.trainable = false;
  norm_std_.trainable = false;
  const int flat = cfg_.conv_widths[1] * cfg_.PooledBins();
  const int outs[2] = {cfg_.num_tracks * cfg_.num_classes,
                       cfg_.num_tracks * 3};
  const char* names[2] = {"sed", "doa"};
  BranchLayers* branches[2] = {sed_.get(), doa_.get()};
  for (int b = 0; b < 2; ++b) {
    const std::string n = names[b];
    BranchLayers& br = *branches[b];
    br.blocks[0].Init(n + ".stage0", cfg_.in_channels, cfg_.conv_widths[0],
                      cfg_.dense, cfg_.dense_layers, rng);
    br.blocks[1].Init(n + ".stage1", cfg_.conv_widths[0], cfg_.conv_widths[1],
                      cfg_.dense, cfg_.dense_layers, rng);
    br.mix.Init(n + ".mix", flat, cfg_.hidden, rng);
    br.head.Init(n + ".head", cfg_.hidden, outs[b], rng);
  }
  const double g = cfg_.soft_sharing ? cfg_.gate_init : 0.0;
  for (int s = 0; s < 3; ++s) {
    stitch_[s].Init("stitch" + std::to_string(s), g, cfg_.soft_sharing);
  }
}

ToyNet::~ToyNet() = default;

TrackwiseSeq ToyNet::Forward(const FeatureTensor& feat) {
  if (feat.channels != cfg_.in_channels || feat.bins != cfg_.in_bins) {
    throw DataError("model expects " + std::to_string(cfg_.in_channels) +
                    " channels x " + std::to_string(cfg_.in_bins) +
                    " bins, features have " + std::to_string(feat.channels) +
                    " x " + std::to_string(feat.bins));
  }
  if (OutputFrames(feat.frames) < 1) {
    throw DataError("feature sequence shorter than 4 frames");
  }
  Tensor3 x(feat.channels, feat.frames, feat.bins);
  const size_t plane = static_cast<size_t>(feat.frames) * feat.bins;
  for (int c = 0; c < feat.channels; ++c) {
    const double m = norm_mean_.value(c, 0);
    const double inv = 1.0 / norm_std_.value(c, 0);
    const double* src = feat.data.data() + c * plane;
    double* dst = x.data.row(c).data();
    for (size_t i = 0; i < plane; ++i) dst[i] = (src[i] - m) * inv;
  }
  Tensor3 s = x;
  Tensor3 d = std::move(x);
  for (int st = 0; st < 2; ++st) {
    stage_in_dims_[st] = {s.height, s.width};
    s = nn::AvgPool(sed_->blocks[st].Forward(s), 2, cfg_.freq_pool);
    d = nn::AvgPool(doa_->blocks[st].Forward(d), 2, cfg_.freq_pool);
    stitch_[st].Forward(s.data, d.data);
  }
  // (channels, frames x bins) -> (channels * bins, frames)
  const int frames = s.height;
  const int bins = s.width;
  pooled_frames_ = frames;
  auto flatten = [&](const Tensor3& t) {
    Matrix m(t.channels * bins, frames);
    for (int c = 0; c < t.channels; ++c) {
      for (int tt = 0; tt < frames; ++tt) {
        for (int f = 0; f < bins; ++f) {
          m(c * bins + f, tt) = t.data(c, tt * bins + f);
        }
      }
    }
    return m;
  };
  sed_->mix_pre = sed_->mix.Forward(flatten(s));
  doa_->mix_pre = doa_->mix.Forward(flatten(d));
  Matrix zs = nn::Silu(sed_->mix_pre);
  Matrix zd = nn::Silu(doa_->mix_pre);
  stitch_[2].Forward(zs, zd);
  sed_prob_ = sed_->head.Forward(zs).unaryExpr(
      [](double v) { return nn::Sigmoid(v); });
  doa_out_ = doa_->head.Forward(zd).array().tanh().matrix();

  TrackwiseSeq out(frames, TrackwiseFrame(cfg_.num_tracks, cfg_.num_classes));
  for (int t = 0; t < frames; ++t) {
    for (size_t i = 0; i < out[t].sed.size(); ++i) out[t].sed[i] = sed_prob_(i, t);
    for (size_t i = 0; i < out[t].doa.size(); ++i) out[t].doa[i] = doa_out_(i, t);
  }
  return out;
}

void ToyNet::Backward(const TrackwiseSeq& d_out) {
  const int frames = pooled_frames_;
  if (static_cast<int>(d_out.size()) != frames) {
    throw DataError("backward: gradient frame count mismatch");
  }
  Matrix d_logit(sed_prob_.rows(), frames);
  Matrix d_doa(doa_out_.rows(), frames);
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < d_logit.rows(); ++i) {
      const double p = sed_prob_(i, t);
      d_logit(i, t) = d_out[t].sed[i] * p * (1.0 - p);
    }
    for (int i = 0; i < d_doa.rows(); ++i) {
      const double y = doa_out_(i, t);
      d_doa(i, t) = d_out[t].doa[i] * (1.0 - y * y);
    }
  }
  Matrix dzs = sed_->head.Backward(d_logit);
  Matrix dzd = doa_->head.Backward(d_doa);
  stitch_[2].Backward(dzs, dzd);
  dzs = dzs.cwiseProduct(nn::SiluGrad(sed_->mix_pre));
  dzd = dzd.cwiseProduct(nn::SiluGrad(doa_->mix_pre));
  const Matrix dfs = sed_->mix.Backward(dzs);
  const Matrix dfd = doa_->mix.Backward(dzd);

  const int width = cfg_.conv_widths[1];
  const int bins = cfg_.PooledBins();
  auto unflatten = [&](const Matrix& m) {
    Tensor3 t(width, frames, bins);
    for (int c = 0; c < width; ++c) {
      for (int tt = 0; tt < frames; ++tt) {
        for (int f = 0; f < bins; ++f) {
          t.data(c, tt * bins + f) = m(c * bins + f, tt);
        }
      }
    }
    return t;
  };
  Tensor3 ds = unflatten(dfs);
  Tensor3 dd = unflatten(dfd);
  for (int st = 1; st >= 0; --st) {
    stitch_[st].Backward(ds.data, dd.data);
    const auto [h, w] = stage_in_dims_[st];
    ds = sed_->blocks[st].Backward(
        nn::AvgPoolBackward(ds, h, w, 2, cfg_.freq_pool));
    dd = doa_->blocks[st].Backward(
        nn::AvgPoolBackward(dd, h, w, 2, cfg_.freq_pool));
  }
}

nn::ParamList ToyNet::Params() {
  nn::ParamList out = {&norm_mean_, &norm_std_};
  for (nn::Param* p : sed_->Params()) out.push_back(p);
  for (nn::Param* p : doa_->Params()) out.push_back(p);
  for (auto& s : stitch_) {
    for (nn::Param* p : s.Params()) out.push_back(p);
  }
  return out;
}

nn::ParamList ToyNet::BranchParams(Branch b) {
  return b == Branch::kSed ? sed_->Params() : doa_->Params();
}

std::vector<nn::CrossStitch*> ToyNet::Gates() {
  return {&stitch_[0], &stitch_[1], &stitch_[2]};
}

void ToyNet::ZeroGrad() {
  for (nn::Param* p : Params()) p->ZeroGrad();
}

int64_t ToyNet::NumParameters() const {
  int64_t n = 0;
  for (nn::Param* p : const_cast<ToyNet*>(this)->Params()) {
    if (p->trainable) n += p->value.size();
  }
  return n;
}

void ToyNet::SetInputNormalization(const std::vector<double>& mean,
                                   const std::vector<double>& stddev) {
  if (static_cast<int>(mean.size()) != cfg_.in_channels ||
      static_cast<int>(stddev.size()) != cfg_.in_channels) {
    throw DataError("normalization statistics: channel count mismatch");
  }
  for (int c = 0; c < cfg_.in_channels; ++c) {
    if (!(stddev[c] > 0.0)) {
      throw NumericalError("normalization: non-positive standard deviation");
    }
    norm_mean_.value(c, 0) = mean[c];
    norm_std_.value(c, 0) = stddev[c];
  }
}

void ToyNet::LoadParams(const std::map<std::string, nn::Matrix>& values) {
  for (nn::Param* p : Params()) {
    const auto it = values.find(p->name);
    if (it == values.end()) {
      throw DataError("checkpoint is missing tensor " + p->name);
    }
    if (it->second.rows() != p->value.rows() ||
        it->second.cols() != p->value.cols()) {
      throw DataError("checkpoint tensor " + p->name + " has wrong shape");
    }
    p->value = it->second;
  }
}

void ChannelStatistics(const std::vector<const FeatureTensor*>& feats,
                       std::vector<double>* mean,
                       std::vector<double>* stddev) {
  if (feats.empty()) throw DataError("no features for normalization");
  const int channels = feats.front()->channels;
  std::vector<double> sum(channels, 0.0), sq(channels, 0.0);
  double count = 0.0;
  for (const FeatureTensor* f : feats) {
    if (f->channels != channels) {
      throw DataError("normalization: channel count mismatch");
    }
    const size_t plane = static_cast<size_t>(f->frames) * f->bins;
    for (int c = 0; c < channels; ++c) {
      for (size_t i = 0; i < plane; ++i) {
        const double v = f->data[c * plane + i];
        sum[c] += v;
        sq[c] += v * v;
      }
    }
    count += static_cast<double>(plane);
  }
  mean->assign(channels, 0.0);
  stddev->assign(channels, 1.0);
  for (int c = 0; c < channels; ++c) {
    const double m = sum[c] / count;
    const double var = std::max(0.0, sq[c] / count - m * m);
    (*mean)[c] = m;
    (*stddev)[c] = std::sqrt(var) > 1e-6 ? std::sqrt(var) : 1.0;
  }
}

void TrainConfig::Validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (lr < 0.0 || lr_final < 0.0) {
    throw ConfigError("train.lr must be non-negative");
  }
  if (switch_fraction < 0.0 || switch_fraction > 1.0) {
    throw ConfigError("train.switch_fraction must be in [0, 1]");
  }
  if (weight_decay < 0.0) {
    throw ConfigError("train.weight_decay must be non-negative");
  }
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(segment_s > 0.0)) throw ConfigError("train.segment_s must be > 0");
  if (!(eval_threshold_m > 0.0)) {
    throw ConfigError("train.eval_threshold_m must be > 0");
  }
  loss.Validate();
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.lr = j.value("lr", c.lr);
  c.lr_final = j.value("lr_final", c.lr_final);
  c.switch_fraction = j.value("switch_fraction", c.switch_fraction);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.segment_s = j.value("segment_s", c.segment_s);
  c.loss.lambda = j.value("lambda", c.loss.lambda);
  c.eval_threshold_m = j.value("eval_threshold_m", c.eval_threshold_m);
  c.sed_threshold = j.value("sed_threshold", c.sed_threshold);
  c.Validate();
  return c;
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"epochs", epochs},
          {"lr", lr},
          {"lr_final", lr_final},
          {"switch_fraction", switch_fraction},
          {"weight_decay", weight_decay},
          {"batch_size", batch_size},
          {"segment_s", segment_s},
          {"lambda", loss.lambda},
          {"eval_threshold_m", eval_threshold_m},
          {"sed_threshold", sed_threshold}};
}

double ScheduledLr(const TrainConfig& cfg, int epoch) {
  const int switch_epoch =
      static_cast<int>(std::lround(cfg.switch_fraction * cfg.epochs));
  return epoch < switch_epoch ? cfg.lr : cfg.lr_final;
}

double AccumulateExample(ToyNet& net, const TrainExample& ex,
                         const LossConfig& loss, double weight) {
  return internal::AccumulateLoss(net, ex.features, ex.labels, loss, weight);
}

double EvaluateF(ToyNet& net, const std::vector<EvalClip>& clips,
                 double threshold_m, double sed_threshold) {
  std::vector<EventInstance> preds;
  std::vector<EventInstance> refs;
  int offset = 0;
  for (const EvalClip& clip : clips) {
    const TrackwiseSeq out = net.Forward(clip.features);
    const int frames = static_cast<int>(out.size());
    for (auto e : PredictionEvents(Binarize(out, sed_threshold))) {
      e.frame += offset;
      preds.push_back(e);
    }
    for (auto e : clip.refs) {
      if (e.frame >= frames) continue;
      e.frame += offset;
      refs.push_back(e);
    }
    offset += frames;
  }
  return LocationSensitiveFscore(preds, refs, threshold_m).f_score;
}

TrainReport Train(ToyNet& net, const std::vector<TrainExample>& data,
                  const std::vector<EvalClip>& val, const TrainConfig& cfg,
                  uint64_t seed, const EpochCallback& on_epoch) {
  cfg.Validate();
  if (data.empty()) throw DataError("training set is empty");
  TrainReport report;
  internal::RunEpochs(
      net.Params(), data.size(), cfg.epochs, cfg.batch_size, cfg.weight_decay,
      [&](int e) { return ScheduledLr(cfg, e); }, seed,
      [&](size_t i, double w) {
        return AccumulateExample(net, data[i], cfg.loss, w);
      },
      [&]() {
        return val.empty() ? 0.0
                           : EvaluateF(net, val, cfg.eval_threshold_m,
                                       cfg.sed_threshold);
      },
      [&](int epoch, double loss, double f) {
        report.train_loss.push_back(loss);
        report.val_f.push_back(f);
        if (on_epoch) on_epoch(epoch, loss, f);
      });
  return report;
}

}  // namespace seld
