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

#ifndef SELD_PREDICTION_IO_H_
#define SELD_PREDICTION_IO_H_

#include <string>
#include <vector>

#include "seld/trackwise.h"

namespace seld {

// Prediction file for one clip holding N model outputs: "SLDP", u32
// version, u32 N, M, K, frames, then float32 sed values ordered
// (model, frame, track, class) and float32 doa values ordered
// (model, frame, track, xyz). Little-endian.
void WritePredictionFile(const std::string& path,
                         const std::vector<TrackwiseSeq>& models);
std::vector<TrackwiseSeq> ReadPredictionFile(const std::string& path);

// Throws DataError unless all sequences share frame count, M and K.
void CheckCompatible(const std::vector<TrackwiseSeq>& models);

}  // namespace seld

#endif  // SELD_PREDICTION_IO_H_
