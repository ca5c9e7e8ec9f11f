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

#ifndef SELD_TESTS_GRAD_CHECK_H_
#define SELD_TESTS_GRAD_CHECK_H_

#include <algorithm>
#include <cmath>
#include <vector>

#include "seld/pit.h"
#include "seld/rng.h"
#include "seld/toynet.h"

namespace seld::testing {

struct GradCheckResult {
  int checked = 0;
  double max_rel_err = 0.0;
};

// Relative error floor: gradients below this magnitude are compared
// absolutely against it.
inline constexpr double kGradFloor = 1e-7;

// Central differences on `count` parameters spread over every tensor,
// with the PIT permutations frozen at the unperturbed point.
template <typename Net, typename Input>
GradCheckResult CheckNetGradients(Net& net, const Input& input,
                                  const TrackwiseSeq& labels,
                                  const LossConfig& loss, int count,
                                  uint64_t seed, double h = 1e-5) {
  TrackwiseSeq pred = net.Forward(input);
  const TrackwiseSeq target(labels.begin(), labels.begin() + pred.size());
  const PitResult pit = PitLoss(pred, target, loss);
  for (nn::Param* p : net.Params()) p->ZeroGrad();
  net.Backward(PitLossGradient(pred, target, pit.perms, loss));

  auto fixed_loss = [&]() {
    const TrackwiseSeq out = net.Forward(input);
    double total = 0.0;
    for (size_t t = 0; t < out.size(); ++t) {
      total += FrameLoss(out[t], target[t], pit.perms[t], loss);
    }
    return total / static_cast<double>(out.size());
  };

  std::vector<nn::Param*> params;
  for (nn::Param* p : net.Params()) {
    if (p->trainable) params.push_back(p);
  }
  Rng rng(seed);
  GradCheckResult res;
  for (int i = 0; i < count; ++i) {
    nn::Param* p = params[i % params.size()];
    const int idx = rng.UniformInt(0, static_cast<int>(p->value.size()) - 1);
    double& v = p->value.data()[idx];
    const double keep = v;
    v = keep + h;
    const double lp = fixed_loss();
    v = keep - h;
    const double lm = fixed_loss();
    v = keep;
    const double numeric = (lp - lm) / (2.0 * h);
    const double analytic = p->grad.data()[idx];
    const double denom = std::max({std::abs(numeric), std::abs(analytic), kGradFloor});
    res.max_rel_err = std::max(res.max_rel_err, std::abs(numeric - analytic) / denom);
    ++res.checked;
  }
  return res;
}

}  // namespace seld::testing

#endif  // SELD_TESTS_GRAD_CHECK_H_
