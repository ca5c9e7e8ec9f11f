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

#include "seld/nn.h"

#include <cmath>

#include "seld/common.h"

namespace seld::nn {

void XavierInit(Param& p, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    p.value.data()[i] = rng.Uniform(-bound, bound);
  }
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

template <typename M>
M SiluImpl(const M& x) {
  return x.unaryExpr([](double v) { return v * Sigmoid(v); });
}

template <typename M>
M SiluGradImpl(const M& x) {
  return x.unaryExpr([](double v) {
    const double s = Sigmoid(v);
    return s * (1.0 + v * (1.0 - s));
  });
}

}  // namespace

Matrix Silu(const Matrix& x) { return SiluImpl(x); }
RowMatrix Silu(const RowMatrix& x) { return SiluImpl(x); }
RowMatrix SiluGrad(const RowMatrix& x) { return SiluGradImpl(x); }
Matrix SiluGrad(const Matrix& x) { return SiluGradImpl(x); }

void Conv2d::Init(const std::string& name, int in_channels, int out_channels,
                  int kernel, Rng& rng) {
  if (kernel != 1 && kernel != 3) {
    throw ConfigError("conv kernel must be 1 or 3");
  }
  in_channels_ = in_channels;
  out_channels_ = out_channels;
  kernel_ = kernel;
  const int fan_in = in_channels * kernel * kernel;
  weight_.Init(name + ".weight", out_channels, fan_in);
  bias_.Init(name + ".bias", out_channels, 1);
  XavierInit(weight_, fan_in, out_channels * kernel * kernel, rng);
}

Tensor3 Conv2d::Forward(const Tensor3& x) {
  if (x.channels != in_channels_) {
    throw DataError("conv: expected " + std::to_string(in_channels_) +
                    " input channels, got " + std::to_string(x.channels));
  }
  height_ = x.height;
  width_ = x.width;
  const int h = x.height;
  const int w = x.width;
  const int kk = kernel_ * kernel_;
  const int pad = kernel_ / 2;
  cols_.setZero(static_cast<Eigen::Index>(in_channels_) * kk,
                static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < in_channels_; ++c) {
    const double* src = x.data.row(c).data();
    for (int ky = 0; ky < kernel_; ++ky) {
      for (int kx = 0; kx < kernel_; ++kx) {
        double* dst = cols_.row(c * kk + ky * kernel_ + kx).data();
        const int dy = ky - pad;
        const int dx = kx - pad;
        for (int t = std::max(0, -dy); t < std::min(h, h - dy); ++t) {
          const double* srow = src + static_cast<size_t>(t + dy) * w;
          double* drow = dst + static_cast<size_t>(t) * w;
          for (int f = std::max(0, -dx); f < std::min(w, w - dx); ++f) {
            drow[f] = srow[f + dx];
          }
        }
      }
    }
  }
  Tensor3 y;
  y.channels = out_channels_;
  y.height = h;
  y.width = w;
  y.data.noalias() = weight_.value * cols_;
  y.data.colwise() += bias_.value.col(0);
  return y;
}

Tensor3 Conv2d::Backward(const Tensor3& dy) {
  weight_.grad.noalias() += dy.data * cols_.transpose();
  bias_.grad.col(0) += dy.data.rowwise().sum();
  const RowMatrix dcols = weight_.value.transpose() * dy.data;
  const int h = height_;
  const int w = width_;
  const int kk = kernel_ * kernel_;
  const int pad = kernel_ / 2;
  Tensor3 dx(in_channels_, h, w);
  for (int c = 0; c < in_channels_; ++c) {
    double* dst = dx.data.row(c).data();
    for (int ky = 0; ky < kernel_; ++ky) {
      for (int kx = 0; kx < kernel_; ++kx) {
        const double* src = dcols.row(c * kk + ky * kernel_ + kx).data();
        const int dyy = ky - pad;
        const int dxx = kx - pad;
        for (int t = std::max(0, -dyy); t < std::min(h, h - dyy); ++t) {
          const double* srow = src + static_cast<size_t>(t) * w;
          double* drow = dst + static_cast<size_t>(t + dyy) * w;
          for (int f = std::max(0, -dxx); f < std::min(w, w - dxx); ++f) {
            drow[f + dxx] += srow[f];
          }
        }
      }
    }
  }
  return dx;
}

Tensor3 AvgPool(const Tensor3& x, int ph, int pw) {
  const int h = x.height / ph;
  const int w = x.width / pw;
  const double scale = 1.0 / (ph * pw);
  Tensor3 y(x.channels, h, w);
  for (int c = 0; c < x.channels; ++c) {
    const double* src = x.data.row(c).data();
    double* dst = y.data.row(c).data();
    for (int t = 0; t < h; ++t) {
      for (int f = 0; f < w; ++f) {
        double acc = 0.0;
        for (int i = 0; i < ph; ++i) {
          const double* row = src + static_cast<size_t>(ph * t + i) * x.width;
          for (int j = 0; j < pw; ++j) acc += row[pw * f + j];
        }
        dst[t * w + f] = scale * acc;
      }
    }
  }
  return y;
}

Tensor3 AvgPoolBackward(const Tensor3& dy, int in_height, int in_width,
                        int ph, int pw) {
  const double scale = 1.0 / (ph * pw);
  Tensor3 dx(dy.channels, in_height, in_width);
  for (int c = 0; c < dy.channels; ++c) {
    const double* src = dy.data.row(c).data();
    double* dst = dx.data.row(c).data();
    for (int t = 0; t < dy.height; ++t) {
      for (int f = 0; f < dy.width; ++f) {
        const double g = scale * src[t * dy.width + f];
        for (int i = 0; i < ph; ++i) {
          double* row = dst + static_cast<size_t>(ph * t + i) * in_width;
          for (int j = 0; j < pw; ++j) row[pw * f + j] += g;
        }
      }
    }
  }
  return dx;
}

void Linear::Init(const std::string& name, int in, int out, Rng& rng) {
  weight_.Init(name + ".weight", out, in);
  bias_.Init(name + ".bias", out, 1);
  XavierInit(weight_, in, out, rng);
}

Matrix Linear::Forward(const Matrix& x) {
  if (x.rows() != weight_.value.cols()) {
    throw DataError("linear: expected " +
                    std::to_string(weight_.value.cols()) + " inputs, got " +
                    std::to_string(x.rows()));
  }
  x_ = x;
  Matrix y = weight_.value * x;
  y.colwise() += bias_.value.col(0);
  return y;
}

Matrix Linear::Backward(const Matrix& dy) {
  weight_.grad.noalias() += dy * x_.transpose();
  bias_.grad.col(0) += dy.rowwise().sum();
  return weight_.value.transpose() * dy;
}

void TimeMix::Init(const std::string& name, int in, int out, Rng& rng) {
  in_ = in;
  linear_.Init(name, 3 * in, out, rng);
}

Matrix TimeMix::Forward(const Matrix& x) {
  const Eigen::Index t = x.cols();
  Matrix stacked = Matrix::Zero(3 * in_, t);
  if (t > 1) {
    stacked.block(0, 1, in_, t - 1) = x.leftCols(t - 1);
    stacked.block(2 * in_, 0, in_, t - 1) = x.rightCols(t - 1);
  }
  stacked.block(in_, 0, in_, t) = x;
  return linear_.Forward(stacked);
}

Matrix TimeMix::Backward(const Matrix& dy) {
  const Matrix ds = linear_.Backward(dy);
  const Eigen::Index t = dy.cols();
  Matrix dx = ds.block(in_, 0, in_, t);
  if (t > 1) {
    dx.leftCols(t - 1) += ds.block(0, 1, in_, t - 1);
    dx.rightCols(t - 1) += ds.block(2 * in_, 0, in_, t - 1);
  }
  return dx;
}

void Gru::Init(const std::string& name, int in, int hidden, Rng& rng) {
  hidden_ = hidden;
  w_in_.Init(name + ".w_in", 3 * hidden, in);
  w_hid_.Init(name + ".w_hid", 3 * hidden, hidden);
  b_in_.Init(name + ".b_in", 3 * hidden, 1);
  b_hid_.Init(name + ".b_hid", 3 * hidden, 1);
  XavierInit(w_in_, in, hidden, rng);
  XavierInit(w_hid_, hidden, hidden, rng);
}

Matrix Gru::Forward(const Matrix& x) {
  const int hsz = hidden_;
  const Eigen::Index steps = x.cols();
  x_ = x;
  Matrix xi = w_in_.value * x;
  xi.colwise() += b_in_.value.col(0);
  h_ = Matrix::Zero(hsz, steps + 1);
  reset_.resize(hsz, steps);
  update_.resize(hsz, steps);
  cand_.resize(hsz, steps);
  hid_n_.resize(hsz, steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    Eigen::VectorXd hh = w_hid_.value * h_.col(t) + b_hid_.value.col(0);
    for (int i = 0; i < hsz; ++i) {
      const double r = Sigmoid(xi(i, t) + hh(i));
      const double z = Sigmoid(xi(hsz + i, t) + hh(hsz + i));
      const double n = std::tanh(xi(2 * hsz + i, t) + r * hh(2 * hsz + i));
      reset_(i, t) = r;
      update_(i, t) = z;
      cand_(i, t) = n;
      hid_n_(i, t) = hh(2 * hsz + i);
      h_(i, t + 1) = (1.0 - z) * n + z * h_(i, t);
    }
  }
  return h_.rightCols(steps);
}

Matrix Gru::Backward(const Matrix& dy) {
  const int hsz = hidden_;
  const Eigen::Index steps = dy.cols();
  Matrix dxi(3 * hsz, steps);
  Matrix dhh(3 * hsz, steps);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hsz);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    Eigen::VectorXd dh_prev(hsz);
    for (int i = 0; i < hsz; ++i) {
      const double dh = dy(i, t) + dh_next(i);
      const double r = reset_(i, t);
      const double z = update_(i, t);
      const double n = cand_(i, t);
      const double dn = dh * (1.0 - z);
      const double dz = dh * (h_(i, t) - n);
      dh_prev(i) = dh * z;
      const double dan = dn * (1.0 - n * n);
      const double dr = dan * hid_n_(i, t);
      const double dar = dr * r * (1.0 - r);
      const double daz = dz * z * (1.0 - z);
      dxi(i, t) = dar;
      dxi(hsz + i, t) = daz;
      dxi(2 * hsz + i, t) = dan;
      dhh(i, t) = dar;
      dhh(hsz + i, t) = daz;
      dhh(2 * hsz + i, t) = dan * r;
    }
    dh_next = dh_prev + w_hid_.value.transpose() * dhh.col(t);
  }
  w_in_.grad.noalias() += dxi * x_.transpose();
  b_in_.grad.col(0) += dxi.rowwise().sum();
  w_hid_.grad.noalias() += dhh * h_.leftCols(steps).transpose();
  b_hid_.grad.col(0) += dhh.rowwise().sum();
  return w_in_.value.transpose() * dxi;
}

void BiGru::Init(const std::string& name, int in, int hidden, Rng& rng) {
  hidden_ = hidden;
  fwd_.Init(name + ".fwd", in, hidden, rng);
  bwd_.Init(name + ".bwd", in, hidden, rng);
}

Matrix BiGru::Forward(const Matrix& x) {
  Matrix y(2 * hidden_, x.cols());
  y.topRows(hidden_) = fwd_.Forward(x);
  y.bottomRows(hidden_) = bwd_.Forward(x.rowwise().reverse()).rowwise().reverse();
  return y;
}

Matrix BiGru::Backward(const Matrix& dy) {
  Matrix dx = fwd_.Backward(dy.topRows(hidden_));
  dx += bwd_.Backward(dy.bottomRows(hidden_).rowwise().reverse())
            .rowwise()
            .reverse();
  return dx;
}

ParamList BiGru::Params() {
  ParamList p = fwd_.Params();
  for (Param* q : bwd_.Params()) p.push_back(q);
  return p;
}

void CrossStitch::Init(const std::string& name, double initial_gate,
                       bool trainable) {
  g_ab_.Init(name + ".gate_ab", 1, 1);
  g_ba_.Init(name + ".gate_ba", 1, 1);
  g_ab_.value(0, 0) = trainable ? initial_gate : 0.0;
  g_ba_.value(0, 0) = trainable ? initial_gate : 0.0;
  g_ab_.trainable = trainable;
  g_ba_.trainable = trainable;
}

AdamW::AdamW(ParamList params, AdamWOptions opts)
    : params_(std::move(params)), opts_(opts) {
  for (Param* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamW::Step(double lr) {
  ++step_;
  const double c1 = 1.0 - std::pow(opts_.beta1, step_);
  const double c2 = 1.0 - std::pow(opts_.beta2, step_);
  for (size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    if (!p.trainable) continue;
    m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * p.grad;
    v_[i] = opts_.beta2 * v_[i] +
            (1.0 - opts_.beta2) * p.grad.cwiseProduct(p.grad);
    if (lr == 0.0) continue;
    p.value *= 1.0 - lr * opts_.weight_decay;
    p.value.array() -= lr * (m_[i].array() / c1) /
                       ((v_[i].array() / c2).sqrt() + opts_.eps);
  }
}

}  // namespace seld::nn
