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

#ifndef SELD_PIPELINE_H_
#define SELD_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seld/ensemble.h"
#include "seld/metrics.h"
#include "seld/scene.h"
#include "seld/toynet.h"
#include "json.hpp"

namespace seld {

struct RunOptions {
  nlohmann::json config = nlohmann::json::object();
  std::optional<uint64_t> seed;         // overrides config "seed"
  std::optional<std::string> out_dir;   // overrides config "output_dir"
};

extern const std::vector<std::string> kSubcommands;

// Runs one subcommand. Errors surface as seld::Error subclasses carrying
// the exit code.
void RunSubcommand(const std::string& name, const RunOptions& opts);

void CmdSynth(const RunOptions& opts);
void CmdExtract(const RunOptions& opts);
void CmdAugment(const RunOptions& opts);
void CmdTrain(const RunOptions& opts);
void CmdPredict(const RunOptions& opts);
void CmdEnsemble(const RunOptions& opts);
void CmdEval(const RunOptions& opts);
void CmdReproEnsembleGap(const RunOptions& opts);

// Settings of the permuted-predictor ensemble experiment.
struct EnsembleGapConfig {
  DatasetConfig synth;
  int eval_clips = 50;
  int train_clips = 100;
  int num_models = 3;
  PredictorNoise noise;
  EnsembleNetConfig net;
  TrainConfig train;
  std::vector<double> thresholds = {1.0, 2.0};

  EnsembleGapConfig();
  static EnsembleGapConfig FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

struct MethodScores {
  std::string method;
  std::vector<ScoreReport> reports;  // one per threshold
};

struct EnsembleGapResult {
  std::vector<MethodScores> singles;
  MethodScores average;
  MethodScores trackwise;
  TrainReport training;

  nlohmann::json ToJson() const;
  // Two rows (average, track-wise) with one F column per threshold.
  std::string FormatTable() const;
};

EnsembleGapResult RunEnsembleGap(const EnsembleGapConfig& cfg, uint64_t seed);

// Track-wise labels for a generated scene at its label rate.
TrackwiseSeq SceneLabels(const SceneSpec& scene, int hop_samples);

// Splits a clip into training segments of `segment_frames` feature frames
// (a multiple of 4); labels follow at a quarter of the frame rate. A short
// trailing remainder (fewer than 4 frames) is dropped.
std::vector<TrainExample> SegmentExample(const FeatureTensor& feat,
                                         const TrackwiseSeq& labels,
                                         int segment_frames);

}  // namespace seld

#endif  // SELD_PIPELINE_H_
