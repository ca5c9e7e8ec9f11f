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

#ifndef SELD_WAV_H_
#define SELD_WAV_H_

#include <string>

#include "seld/scene.h"

namespace seld {

// 4-channel IEEE float32 WAV. Samples are rounded to float on write.
void WriteFoaWav(const FoaClip& clip, const std::string& path);
FoaClip ReadFoaWav(const std::string& path, ArrayId array_id = ArrayId::kA);

}  // namespace seld

#endif  // SELD_WAV_H_
