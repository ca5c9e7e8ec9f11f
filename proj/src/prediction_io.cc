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

#include "seld/prediction_io.h"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace seld {

namespace {

constexpr char kMagic[4] = {'S', 'L', 'D', 'P'};
constexpr uint32_t kVersion = 1;

void PutU32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

void PutF32(std::ofstream& out, double v) {
  const float f = static_cast<float>(v);
  out.write(reinterpret_cast<const char*>(&f), 4);
}

}  // namespace

void CheckCompatible(const std::vector<TrackwiseSeq>& models) {
  if (models.empty()) throw DataError("no predictions given");
  const TrackwiseSeq& ref = models.front();
  for (size_t i = 0; i < models.size(); ++i) {
    if (models[i].size() != ref.size()) {
      throw DataError("prediction " + std::to_string(i) + " has " +
                      std::to_string(models[i].size()) + " frames, expected " +
                      std::to_string(ref.size()));
    }
    for (const auto& f : models[i]) {
      const auto& r = ref.empty() ? f : ref.front();
      if (f.num_tracks != r.num_tracks || f.num_classes != r.num_classes ||
          f.sed.size() != static_cast<size_t>(f.num_tracks * f.num_classes) ||
          f.doa.size() != static_cast<size_t>(f.num_tracks * 3)) {
        throw DataError("prediction " + std::to_string(i) +
                        ": track/class shape mismatch");
      }
    }
  }
}

void WritePredictionFile(const std::string& path,
                         const std::vector<TrackwiseSeq>& models) {
  CheckCompatible(models);
  const TrackwiseSeq& first = models.front();
  const int m = first.empty() ? kDefaultTracks : first.front().num_tracks;
  const int k = first.empty() ? kDefaultClasses : first.front().num_classes;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(kMagic, 4);
  PutU32(out, kVersion);
  PutU32(out, static_cast<uint32_t>(models.size()));
  PutU32(out, static_cast<uint32_t>(m));
  PutU32(out, static_cast<uint32_t>(k));
  PutU32(out, static_cast<uint32_t>(first.size()));
  for (const auto& seq : models) {
    for (const auto& f : seq) {
      for (double v : f.sed) PutF32(out, v);
    }
  }
  for (const auto& seq : models) {
    for (const auto& f : seq) {
      for (double v : f.doa) PutF32(out, v);
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

std::vector<TrackwiseSeq> ReadPredictionFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[4];
  uint32_t head[5];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError(path + ": not a prediction file");
  }
  if (!in.read(reinterpret_cast<char*>(head), sizeof(head))) {
    throw DataError(path + ": truncated header");
  }
  if (head[0] != kVersion) {
    throw DataError(path + ": unsupported version " + std::to_string(head[0]));
  }
  const uint32_t n = head[1], m = head[2], k = head[3], frames = head[4];
  if (n == 0 || m == 0 || k == 0 || n > 64 || m > 16 || k > 4096 ||
      frames > (1u << 24)) {
    throw DataError(path + ": implausible header");
  }
  std::vector<TrackwiseSeq> models(
      n, TrackwiseSeq(frames, TrackwiseFrame(static_cast<int>(m),
                                             static_cast<int>(k))));
  auto read_block = [&](auto member) {
    for (auto& seq : models) {
      for (auto& f : seq) {
        auto& vec = f.*member;
        std::vector<float> buf(vec.size());
        if (!in.read(reinterpret_cast<char*>(buf.data()),
                     static_cast<std::streamsize>(buf.size() * 4))) {
          throw DataError(path + ": truncated data");
        }
        for (size_t i = 0; i < buf.size(); ++i) vec[i] = buf[i];
      }
    }
  };
  read_block(&TrackwiseFrame::sed);
  read_block(&TrackwiseFrame::doa);
  return models;
}

}  // namespace seld
