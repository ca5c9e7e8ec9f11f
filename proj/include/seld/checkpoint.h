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

#ifndef SELD_CHECKPOINT_H_
#define SELD_CHECKPOINT_H_

#include <map>
#include <string>

#include "seld/nn.h"
#include "json.hpp"

namespace seld {

// Checkpoint file: "SLDM", u32 version, u64 length + architecture JSON,
// u32 tensor count, then per tensor: u32 name length, UTF-8 name, u32 rank,
// u64 dims, float64 values (row-major). Little-endian.
struct Checkpoint {
  nlohmann::json arch;
  std::map<std::string, nn::Matrix> tensors;
};

void WriteCheckpoint(const std::string& path, const nlohmann::json& arch,
                     const nn::ParamList& params);
Checkpoint ReadCheckpoint(const std::string& path);

}  // namespace seld

#endif  // SELD_CHECKPOINT_H_
