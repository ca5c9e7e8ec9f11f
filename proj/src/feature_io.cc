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

#include <cstring>
#include <fstream>
#include <vector>

#include "seld/features.h"

namespace seld {

namespace {

constexpr char kFeatureMagic[4] = {'S', 'L', 'D', 'F'};
constexpr uint32_t kFeatureVersion = 1;

}  // namespace

void WriteFeatureFile(const FeatureTensor& feat, const std::string& path) {
  std::vector<char> buf;
  buf.reserve(24 + feat.data.size() * 4);
  auto put_u32 = [&](uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    buf.insert(buf.end(), b, b + 4);
  };
  buf.insert(buf.end(), kFeatureMagic, kFeatureMagic + 4);
  put_u32(kFeatureVersion);
  put_u32(static_cast<uint32_t>(feat.layout));
  put_u32(feat.channels);
  put_u32(feat.frames);
  put_u32(feat.bins);
  for (double v : feat.data) {
    const float f = static_cast<float>(v);
    char b[4];
    std::memcpy(b, &f, 4);
    buf.insert(buf.end(), b, b + 4);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write feature file " + path);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

FeatureTensor ReadFeatureFile(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read feature file " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(is)),
                        std::istreambuf_iterator<char>());
  if (buf.size() < 24 || std::memcmp(buf.data(), kFeatureMagic, 4) != 0) {
    throw DataError(path + ": not an SLDF feature file");
  }
  uint32_t header[5];
  std::memcpy(header, buf.data() + 4, sizeof(header));
  if (header[0] != kFeatureVersion) {
    throw DataError(path + ": unsupported feature file version " +
                    std::to_string(header[0]));
  }
  const auto layout = static_cast<FeatureLayout>(header[1]);
  if (header[1] < 1 || header[1] > 6 || LayoutChannels(layout) !=
                                            static_cast<int>(header[2])) {
    throw DataError(path + ": bad layout tag or channel count");
  }
  const BinScale scale = (layout == FeatureLayout::kSalsa ||
                          layout == FeatureLayout::kStackedSalsa)
                             ? BinScale::kLinear
                             : BinScale::kMel;
  FeatureTensor feat(layout, scale, header[3], header[4]);
  if (buf.size() != 24 + feat.data.size() * 4) {
    throw DataError(path + ": truncated feature data");
  }
  for (size_t i = 0; i < feat.data.size(); ++i) {
    float f;
    std::memcpy(&f, buf.data() + 24 + i * 4, 4);
    feat.data[i] = f;
  }
  return feat;
}

}  // namespace seld
