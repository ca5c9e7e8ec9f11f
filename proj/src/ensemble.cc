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

#include "seld/ensemble.h"

#include <cmath>
#include <numeric>

#include "seld/prediction_io.h"
#include "seld/rng.h"
#include "train_loop.h"

namespace seld {

using nn::Matrix;
using nn::Tensor3;

TrackwiseSeq AverageEnsemble(const std::vector<TrackwiseSeq>& models) {
  CheckCompatible(models);
  TrackwiseSeq out = models.front();
  if (models.size() == 1) return out;
  const double inv = 1.0 / static_cast<double>(models.size());
  for (size_t t = 0; t < out.size(); ++t) {
    for (size_t i = 0; i < out[t].sed.size(); ++i) {
      double s = 0.0;
      for (const auto& m : models) s += m[t].sed[i];
      out[t].sed[i] = s * inv;
    }
    for (size_t i = 0; i < out[t].doa.size(); ++i) {
      double s = 0.0;
      for (const auto& m : models) s += m[t].doa[i];
      out[t].doa[i] = s * inv;
    }
  }
  return out;
}

EnsembleInput BuildEnsembleInput(const std::vector<TrackwiseSeq>& models) {
  if (models.size() < 2) {
    throw DataError("ensemble input needs at least two models");
  }
  CheckCompatible(models);
  EnsembleInput in;
  in.num_models = static_cast<int>(models.size());
  if (!models.front().empty()) {
    in.num_tracks = models.front().front().num_tracks;
    in.num_classes = models.front().front().num_classes;
  }
  const size_t frames = models.front().size();
  in.frames.assign(frames, std::vector<double>());
  for (size_t t = 0; t < frames; ++t) {
    auto& v = in.frames[t];
    v.reserve(in.Width());
    for (const auto& m : models) {
      v.insert(v.end(), m[t].sed.begin(), m[t].sed.end());
      v.insert(v.end(), m[t].doa.begin(), m[t].doa.end());
    }
  }
  return in;
}

std::vector<TrackwiseSeq> SplitEnsembleInput(const EnsembleInput& input) {
  const int mk = input.num_tracks * input.num_classes;
  const int m3 = input.num_tracks * 3;
  std::vector<TrackwiseSeq> models(
      input.num_models,
      TrackwiseSeq(input.frames.size(),
                   TrackwiseFrame(input.num_tracks, input.num_classes)));
  for (size_t t = 0; t < input.frames.size(); ++t) {
    const auto& v = input.frames[t];
    if (static_cast<int>(v.size()) != input.Width()) {
      throw DataError("ensemble input frame " + std::to_string(t) +
                      " has wrong width");
    }
    size_t pos = 0;
    for (int i = 0; i < input.num_models; ++i) {
      auto& f = models[i][t];
      std::copy(v.begin() + pos, v.begin() + pos + mk, f.sed.begin());
      pos += mk;
      std::copy(v.begin() + pos, v.begin() + pos + m3, f.doa.begin());
      pos += m3;
    }
  }
  return models;
}

void EnsembleNetConfig::Validate() const {
  if (num_models < 2) throw ConfigError("ensemble.num_models must be >= 2");
  if (num_tracks < 1 || num_tracks > kMaxPitTracks) {
    throw ConfigError("ensemble.num_tracks must be in [1, 4]");
  }
  if (num_classes < 1) throw ConfigError("ensemble.num_classes must be >= 1");
  if (conv_channels < 1) {
    throw ConfigError("ensemble.conv_channels must be >= 1");
  }
  if (hidden < 1) throw ConfigError("ensemble.hidden must be >= 1");
}

EnsembleNetConfig EnsembleNetConfig::FromJson(const nlohmann::json& j) {
  EnsembleNetConfig c;
  c.num_models = j.value("num_models", c.num_models);
  c.num_tracks = j.value("num_tracks", c.num_tracks);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.conv_channels = j.value("conv_channels", c.conv_channels);
  c.hidden = j.value("hidden", c.hidden);
  c.soft_sharing = j.value("soft_sharing", c.soft_sharing);
  c.gate_init = j.value("gate_init", c.gate_init);
  c.reference_init = j.value("reference_init", c.reference_init);
  c.Validate();
  return c;
}

nlohmann::json EnsembleNetConfig::ToJson() const {
  return {{"num_models", num_models},       {"num_tracks", num_tracks},
          {"num_classes", num_classes},     {"conv_channels", conv_channels},
          {"hidden", hidden},               {"soft_sharing", soft_sharing},
          {"gate_init", gate_init},     {"reference_init", reference_init},
          {"layout_version", kEnsembleLayoutVersion}};
}

struct EnsembleNet::BranchLayers {
  nn::Conv2d conv;
  nn::Conv2d squeeze;
  nn::BiGru gru;
  nn::Linear head;
  Tensor3 conv_pre;
  Matrix gru_in;

  nn::ParamList Params() {
    nn::ParamList out;
    for (nn::Param* p : conv.Params()) out.push_back(p);
    for (nn::Param* p : squeeze.Params()) out.push_back(p);
    for (nn::Param* p : gru.Params()) out.push_back(p);
    for (nn::Param* p : head.Params()) out.push_back(p);
    return out;
  }
};

EnsembleNet::EnsembleNet(const EnsembleNetConfig& cfg, uint64_t seed)
    : cfg_(cfg),
      sed_(std::make_unique<BranchLayers>()),
      doa_(std::make_unique<BranchLayers>()) {
  cfg_.Validate();
  Rng rng(seed);
  const int width = cfg_.InputWidth();
  const int outs[2] = {cfg_.num_tracks * cfg_.num_classes,
                       cfg_.num_tracks * 3};
  const char* names[2] = {"sed", "doa"};
  BranchLayers* branches[2] = {sed_.get(), doa_.get()};
  for (int b = 0; b < 2; ++b) {
    const std::string n = names[b];
    BranchLayers& br = *branches[b];
    br.conv.Init(n + ".conv", 1, cfg_.conv_channels, 3, rng);
    br.squeeze.Init(n + ".squeeze", cfg_.conv_channels, 1, 1, rng);
    br.gru.Init(n + ".gru", width, cfg_.hidden, rng);
    br.head.Init(n + ".head", 2 * cfg_.hidden + width, outs[b], rng);
  }
  const double g = cfg_.soft_sharing ? cfg_.gate_init : 0.0;
  for (int s = 0; s < 2; ++s) {
    stitch_[s].Init("stitch" + std::to_string(s), g, cfg_.soft_sharing);
  }
  if (cfg_.reference_init) {
    // The head sees 2 * hidden GRU features, then the stitched input, in
    // which model 0's sed block comes first and its doa block next. The
    // stitch scales that input by about (1 + g).
    const int gh = 2 * cfg_.hidden;
    const int mk = cfg_.num_tracks * cfg_.num_classes;
    for (int i = 0; i < mk; ++i) {
      // p in {0.1, 0.9} -> logit about -4 / +4
      sed_->head.weight().value(i, gh + i) += 10.0 / (1.0 + g);
      sed_->head.bias().value(i, 0) = -5.0;
    }
    for (int i = 0; i < cfg_.num_tracks * 3; ++i) {
      doa_->head.weight().value(i, gh + mk + i) += 1.0 / (1.0 + g);
    }
  }
}

EnsembleNet::~EnsembleNet() = default;

TrackwiseSeq EnsembleNet::Forward(const EnsembleInput& input) {
  if (input.num_models != cfg_.num_models ||
      input.num_tracks != cfg_.num_tracks ||
      input.num_classes != cfg_.num_classes) {
    throw DataError("ensemble input shape does not match the model");
  }
  const int frames = static_cast<int>(input.frames.size());
  const int width = cfg_.InputWidth();
  if (frames < 1) throw DataError("ensemble input has no frames");
  frames_ = frames;
  Tensor3 x(1, frames, width);
  for (int t = 0; t < frames; ++t) {
    if (static_cast<int>(input.frames[t].size()) != width) {
      throw DataError("ensemble input frame has wrong width");
    }
    for (int e = 0; e < width; ++e) x.data(0, t * width + e) = input.frames[t][e];
  }
  Matrix h[2];
  BranchLayers* branches[2] = {sed_.get(), doa_.get()};
  for (int b = 0; b < 2; ++b) {
    BranchLayers& br = *branches[b];
    br.conv_pre = br.conv.Forward(x);
    Tensor3 act = br.conv_pre;
    act.data = nn::Silu(br.conv_pre.data);
    const Tensor3 y = br.squeeze.Forward(act);
    h[b].resize(width, frames);
    for (int t = 0; t < frames; ++t) {
      for (int e = 0; e < width; ++e) {
        h[b](e, t) = x.data(0, t * width + e) + y.data(0, t * width + e);
      }
    }
  }
  stitch_[0].Forward(h[0], h[1]);
  Matrix g[2];
  for (int b = 0; b < 2; ++b) {
    branches[b]->gru_in = h[b];
    g[b] = branches[b]->gru.Forward(h[b]);
  }
  stitch_[1].Forward(g[0], g[1]);
  Matrix z[2];
  for (int b = 0; b < 2; ++b) {
    z[b].resize(g[b].rows() + h[b].rows(), frames);
    z[b] << g[b], h[b];
  }
  sed_prob_ = sed_->head.Forward(z[0]).unaryExpr(
      [](double v) { return nn::Sigmoid(v); });
  doa_out_ = doa_->head.Forward(z[1]).array().tanh().matrix();

  TrackwiseSeq out(frames, TrackwiseFrame(cfg_.num_tracks, cfg_.num_classes));
  for (int t = 0; t < frames; ++t) {
    for (size_t i = 0; i < out[t].sed.size(); ++i) out[t].sed[i] = sed_prob_(i, t);
    for (size_t i = 0; i < out[t].doa.size(); ++i) out[t].doa[i] = doa_out_(i, t);
  }
  return out;
}

void EnsembleNet::Backward(const TrackwiseSeq& d_out) {
  const int frames = frames_;
  if (static_cast<int>(d_out.size()) != frames) {
    throw DataError("backward: gradient frame count mismatch");
  }
  const int width = cfg_.InputWidth();
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
  const Matrix dz[2] = {sed_->head.Backward(d_logit),
                        doa_->head.Backward(d_doa)};
  const int gh = 2 * cfg_.hidden;
  Matrix dg[2] = {dz[0].topRows(gh), dz[1].topRows(gh)};
  stitch_[1].Backward(dg[0], dg[1]);
  BranchLayers* branches[2] = {sed_.get(), doa_.get()};
  Matrix dh[2];
  for (int b = 0; b < 2; ++b) {
    dh[b] = dz[b].bottomRows(width) + branches[b]->gru.Backward(dg[b]);
  }
  stitch_[0].Backward(dh[0], dh[1]);
  for (int b = 0; b < 2; ++b) {
    BranchLayers& br = *branches[b];
    Tensor3 dy(1, frames, width);
    for (int t = 0; t < frames; ++t) {
      for (int e = 0; e < width; ++e) dy.data(0, t * width + e) = dh[b](e, t);
    }
    Tensor3 dact = br.squeeze.Backward(dy);
    dact.data = dact.data.cwiseProduct(nn::SiluGrad(br.conv_pre.data));
    br.conv.Backward(dact);
  }
}

nn::ParamList EnsembleNet::Params() {
  nn::ParamList out = sed_->Params();
  for (nn::Param* p : doa_->Params()) out.push_back(p);
  for (auto& s : stitch_) {
    for (nn::Param* p : s.Params()) out.push_back(p);
  }
  return out;
}

std::vector<nn::CrossStitch*> EnsembleNet::Gates() {
  return {&stitch_[0], &stitch_[1]};
}

int64_t EnsembleNet::NumParameters() const {
  int64_t n = 0;
  for (nn::Param* p : const_cast<EnsembleNet*>(this)->Params()) {
    if (p->trainable) n += p->value.size();
  }
  return n;
}

void EnsembleNet::LoadParams(const std::map<std::string, nn::Matrix>& values) {
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

double ScoreSequences(const std::vector<TrackwiseSeq>& preds,
                      const std::vector<std::vector<EventInstance>>& refs,
                      double threshold_m, double sed_threshold) {
  if (preds.size() != refs.size()) {
    throw DataError("prediction and reference clip counts differ");
  }
  std::vector<EventInstance> all_pred;
  std::vector<EventInstance> all_ref;
  int offset = 0;
  for (size_t c = 0; c < preds.size(); ++c) {
    const int frames = static_cast<int>(preds[c].size());
    for (auto e : PredictionEvents(Binarize(preds[c], sed_threshold))) {
      e.frame += offset;
      all_pred.push_back(e);
    }
    for (auto e : refs[c]) {
      if (e.frame >= frames) continue;
      e.frame += offset;
      all_ref.push_back(e);
    }
    offset += frames;
  }
  return LocationSensitiveFscore(all_pred, all_ref, threshold_m).f_score;
}

double EvaluateEnsembleF(EnsembleNet& net,
                         const std::vector<EnsembleEvalClip>& clips,
                         double threshold_m, double sed_threshold) {
  std::vector<TrackwiseSeq> preds;
  std::vector<std::vector<EventInstance>> refs;
  for (const auto& c : clips) {
    preds.push_back(net.Forward(c.input));
    refs.push_back(c.refs);
  }
  return ScoreSequences(preds, refs, threshold_m, sed_threshold);
}

TrainReport TrainEnsemble(EnsembleNet& net,
                          const std::vector<EnsembleExample>& data,
                          const std::vector<EnsembleEvalClip>& val,
                          const TrainConfig& cfg, uint64_t seed,
                          const EpochCallback& on_epoch) {
  cfg.Validate();
  if (data.empty()) throw DataError("ensemble training set is empty");
  TrainReport report;
  internal::RunEpochs(
      net.Params(), data.size(), cfg.epochs, cfg.batch_size, cfg.weight_decay,
      [&](int e) { return ScheduledLr(cfg, e); }, seed,
      [&](size_t i, double w) {
        return internal::AccumulateLoss(net, data[i].input, data[i].labels,
                                        cfg.loss, w);
      },
      [&]() {
        return val.empty() ? 0.0
                           : EvaluateEnsembleF(net, val, cfg.eval_threshold_m,
                                               cfg.sed_threshold);
      },
      [&](int epoch, double loss, double f) {
        report.train_loss.push_back(loss);
        report.val_f.push_back(f);
        if (on_epoch) on_epoch(epoch, loss, f);
      });
  return report;
}

std::vector<TrackwiseSeq> SynthPermutedPredictors(const TrackwiseSeq& labels,
                                                  int num_models,
                                                  const PredictorNoise& noise,
                                                  uint64_t seed) {
  if (num_models < 1) throw ConfigError("predictors: num_models must be >= 1");
  std::vector<TrackwiseSeq> out;
  for (int i = 0; i < num_models; ++i) {
    Rng rng(MixSeed(seed, static_cast<uint64_t>(i)));
    const int m = labels.empty() ? kDefaultTracks : labels.front().num_tracks;
    const int k = labels.empty() ? kDefaultClasses : labels.front().num_classes;
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    if (noise.permute) {
      for (int j = m - 1; j > 0; --j) std::swap(perm[j], perm[rng.UniformInt(0, j)]);
    }
    TrackwiseSeq seq(labels.size(), TrackwiseFrame(m, k));
    for (size_t t = 0; t < labels.size(); ++t) {
      const TrackwiseFrame& lab = labels[t];
      TrackwiseFrame& f = seq[t];
      // label track j is emitted on track perm[j]
      for (int j = 0; j < m; ++j) {
        const int dst = perm[j];
        for (int c = 0; c < k; ++c) {
          const double base = lab.Sed(j, c) > 0.5 ? noise.sed_on : noise.sed_off;
          f.Sed(dst, c) = base + rng.Uniform(-noise.sed_jitter, noise.sed_jitter);
        }
        const Vec3 u = lab.Doa(j);
        if (Norm(u) == 0.0) continue;
        // rotate u by theta ~ N(0, sigma) towards a random perpendicular
        const Vec3 helper = std::abs(u[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0}
                                                 : Vec3{0.0, 1.0, 0.0};
        const Vec3 e1 = Normalized({u[1] * helper[2] - u[2] * helper[1],
                                    u[2] * helper[0] - u[0] * helper[2],
                                    u[0] * helper[1] - u[1] * helper[0]});
        const Vec3 e2 = {u[1] * e1[2] - u[2] * e1[1],
                         u[2] * e1[0] - u[0] * e1[2],
                         u[0] * e1[1] - u[1] * e1[0]};
        const double phi = rng.Uniform(0.0, 2.0 * M_PI);
        const double theta = noise.doa_sigma_rad * rng.Normal();
        Vec3 v;
        for (int d = 0; d < 3; ++d) {
          const double w = std::cos(phi) * e1[d] + std::sin(phi) * e2[d];
          v[d] = std::cos(theta) * u[d] + std::sin(theta) * w;
        }
        f.SetDoa(dst, v);
      }
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace seld
