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

#ifndef SELD_NN_H_
#define SELD_NN_H_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "seld/rng.h"

// Minimal layers with hand-written backward passes, double precision.
// Each layer caches what its backward pass needs from the most recent
// Forward call, so one layer instance processes one sample at a time.
// Backward accumulates into Param::grad.
namespace seld::nn {

using Matrix = Eigen::MatrixXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Channels x (height * width) feature map, row c holding channel c in
// row-major (height, width) order. Height is time, width is frequency.
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  RowMatrix data;

  Tensor3() = default;
  Tensor3(int c, int h, int w)
      : channels(c), height(h), width(w), data(RowMatrix::Zero(c, h * w)) {}
};

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  void Init(std::string param_name, int rows, int cols) {
    name = std::move(param_name);
    value = Matrix::Zero(rows, cols);
    grad = Matrix::Zero(rows, cols);
  }
  void ZeroGrad() { grad.setZero(); }
};

using ParamList = std::vector<Param*>;

// Uniform(-b, b) with b = sqrt(6 / (fan_in + fan_out)).
void XavierInit(Param& p, int fan_in, int fan_out, Rng& rng);

double Sigmoid(double x);
Matrix Silu(const Matrix& x);
RowMatrix Silu(const RowMatrix& x);
// d silu(x) / dx, elementwise.
RowMatrix SiluGrad(const RowMatrix& x);
Matrix SiluGrad(const Matrix& x);

// Square kernel (1 or 3), stride 1, zero "same" padding.
class Conv2d {
 public:
  void Init(const std::string& name, int in_channels, int out_channels,
            int kernel, Rng& rng);
  Tensor3 Forward(const Tensor3& x);
  Tensor3 Backward(const Tensor3& dy);
  ParamList Params() { return {&weight_, &bias_}; }
  int out_channels() const { return out_channels_; }

 private:
  int in_channels_ = 0;
  int out_channels_ = 0;
  int kernel_ = 3;
  Param weight_;  // out x (in * k * k)
  Param bias_;    // out x 1
  RowMatrix cols_;
  int height_ = 0;
  int width_ = 0;
};

// Average pooling over ph x pw blocks (time x frequency); trailing rows
// and columns that do not fill a block are dropped.
Tensor3 AvgPool(const Tensor3& x, int ph, int pw);
Tensor3 AvgPoolBackward(const Tensor3& dy, int in_height, int in_width,
                        int ph, int pw);

// Column-wise affine map: y(:, t) = W x(:, t) + b.
class Linear {
 public:
  void Init(const std::string& name, int in, int out, Rng& rng);
  Matrix Forward(const Matrix& x);
  Matrix Backward(const Matrix& dy);
  ParamList Params() { return {&weight_, &bias_}; }
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  Param weight_;
  Param bias_;
  Matrix x_;
};

// Temporal convolution over frames: y(:, t) = W [x(:, t-1); x(:, t);
// x(:, t+1)] + b, zero padded at the ends.
class TimeMix {
 public:
  void Init(const std::string& name, int in, int out, Rng& rng);
  Matrix Forward(const Matrix& x);
  Matrix Backward(const Matrix& dy);
  ParamList Params() { return linear_.Params(); }

 private:
  Linear linear_;
  int in_ = 0;
};

// Gated recurrent unit (reset/update/candidate), zero initial state.
// Input x is features x frames; output is hidden x frames.
class Gru {
 public:
  void Init(const std::string& name, int in, int hidden, Rng& rng);
  Matrix Forward(const Matrix& x);
  Matrix Backward(const Matrix& dy);
  ParamList Params() { return {&w_in_, &w_hid_, &b_in_, &b_hid_}; }

 private:
  int hidden_ = 0;
  Param w_in_;   // 3H x in, blocks (reset, update, candidate)
  Param w_hid_;  // 3H x H
  Param b_in_;   // 3H x 1
  Param b_hid_;  // 3H x 1
  Matrix x_;
  Matrix h_;       // H x (T + 1), column 0 is the initial state
  Matrix reset_;   // H x T
  Matrix update_;  // H x T
  Matrix cand_;    // H x T
  Matrix hid_n_;   // H x T, candidate part of W_hid h + b_hid
};

// Forward GRU and a GRU over the time-reversed sequence, outputs stacked
// (forward rows first).
class BiGru {
 public:
  void Init(const std::string& name, int in, int hidden, Rng& rng);
  Matrix Forward(const Matrix& x);
  Matrix Backward(const Matrix& dy);
  ParamList Params();

 private:
  Gru fwd_;
  Gru bwd_;
  int hidden_ = 0;
};

// Soft parameter sharing between two branches:
//   a' = a + g_ab * b,  b' = b + g_ba * a
// with learned scalar gates. Frozen gates keep their value (e.g. 0 to cut
// the connection).
class CrossStitch {
 public:
  void Init(const std::string& name, double initial_gate, bool trainable);
  template <typename M>
  void Forward(M& a, M& b) {
    const M a0 = a;
    const M b0 = b;
    a += g_ab_.value(0, 0) * b0;
    b += g_ba_.value(0, 0) * a0;
    a_ = a0;
    b_ = b0;
  }
  template <typename M>
  void Backward(M& da, M& db) {
    if (g_ab_.trainable) g_ab_.grad(0, 0) += (da.array() * b_.array()).sum();
    if (g_ba_.trainable) g_ba_.grad(0, 0) += (db.array() * a_.array()).sum();
    const M da0 = da;
    da += g_ba_.value(0, 0) * db;
    db += g_ab_.value(0, 0) * da0;
  }
  ParamList Params() { return {&g_ab_, &g_ba_}; }
  Param& gate_ab() { return g_ab_; }
  Param& gate_ba() { return g_ba_; }

 private:
  Param g_ab_;
  Param g_ba_;
  Matrix a_;
  Matrix b_;
};

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay: p <- p (1 - lr wd) - lr m_hat /
// (sqrt(v_hat) + eps). Frozen parameters are skipped.
class AdamW {
 public:
  AdamW(ParamList params, AdamWOptions opts);
  void Step(double lr);
  int steps() const { return step_; }

 private:
  ParamList params_;
  AdamWOptions opts_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  int step_ = 0;
};

}  // namespace seld::nn

#endif  // SELD_NN_H_
