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

#ifndef SELD_SRC_TRAIN_LOOP_H_
#define SELD_SRC_TRAIN_LOOP_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "seld/nn.h"
#include "seld/pit.h"
#include "seld/rng.h"

namespace seld::internal {

// Forward, PIT loss and backward for one example. Model needs
// Forward(input) -> TrackwiseSeq and Backward(TrackwiseSeq).
template <typename Model, typename Input>
double AccumulateLoss(Model& model, const Input& input,
                      const TrackwiseSeq& labels, const LossConfig& loss,
                      double weight) {
  TrackwiseSeq pred = model.Forward(input);
  if (labels.size() < pred.size()) {
    throw DataError("training labels have " + std::to_string(labels.size()) +
                    " frames, model emits " + std::to_string(pred.size()));
  }
  TrackwiseSeq target(labels.begin(), labels.begin() + pred.size());
  PitResult pit = PitLoss(pred, target, loss);
  if (!std::isfinite(pit.loss)) {
    throw NumericalError("non-finite training loss");
  }
  TrackwiseSeq grad = PitLossGradient(pred, target, pit.perms, loss);
  if (weight != 1.0) {
    for (auto& f : grad) {
      for (double& v : f.sed) v *= weight;
      for (double& v : f.doa) v *= weight;
    }
  }
  model.Backward(grad);
  return pit.loss;
}

// Seeded shuffled minibatches, AdamW with the two-stage learning rate.
// `step(i, weight)` accumulates the gradient of example i and returns its
// loss; `evaluate()` returns the validation score after each epoch.
template <typename StepFn, typename EvalFn, typename EpochFn>
void RunEpochs(nn::ParamList params, size_t num_examples, int epochs,
               int batch_size, double weight_decay,
               const std::function<double(int)>& lr_at, uint64_t seed,
               StepFn step, EvalFn evaluate, EpochFn on_epoch) {
  nn::AdamW opt(params, {0.9, 0.999, 1e-8, weight_decay});
  std::vector<size_t> order(num_examples);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(MixSeed(seed, static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(rng.UniformInt(0, static_cast<int>(i - 1)));
      std::swap(order[i - 1], order[j]);
    }
    double total = 0.0;
    for (size_t start = 0; start < order.size(); start += batch_size) {
      const size_t end = std::min(order.size(), start + batch_size);
      for (nn::Param* p : params) p->ZeroGrad();
      const double w = 1.0 / static_cast<double>(end - start);
      for (size_t k = start; k < end; ++k) {
        const double l = step(order[k], w);
        if (!std::isfinite(l)) {
          throw NumericalError("loss diverged at epoch " +
                               std::to_string(epoch + 1));
        }
        total += l;
      }
      for (nn::Param* p : params) {
        if (!p->grad.allFinite()) {
          throw NumericalError("non-finite gradient in " + p->name +
                               " at epoch " + std::to_string(epoch + 1));
        }
      }
      opt.Step(lr_at(epoch));
    }
    on_epoch(epoch, total / static_cast<double>(order.size()), evaluate());
  }
}

}  // namespace seld::internal

#endif  // SELD_SRC_TRAIN_LOOP_H_
