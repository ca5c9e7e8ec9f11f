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

#include "seld/wav.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace seld {

static_assert(std::endian::native == std::endian::little,
              "WAV and feature I/O assume a little-endian host");

namespace {

constexpr uint16_t kFormatIeeeFloat = 3;

template <typename T>
void Put(std::vector<char>& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T Get(const std::vector<char>& buf, size_t pos) {
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  return v;
}

}  // namespace

void WriteFoaWav(const FoaClip& clip, const std::string& path) {
  const uint32_t n = static_cast<uint32_t>(clip.NumSamples());
  const uint16_t channels = 4;
  const uint32_t data_bytes = n * channels * 4;
  std::vector<char> buf;
  buf.reserve(44 + data_bytes);
  buf.insert(buf.end(), {'R', 'I', 'F', 'F'});
  Put<uint32_t>(buf, 36 + data_bytes);
  buf.insert(buf.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  Put<uint32_t>(buf, 16);
  Put<uint16_t>(buf, kFormatIeeeFloat);
  Put<uint16_t>(buf, channels);
  Put<uint32_t>(buf, clip.sample_rate);
  Put<uint32_t>(buf, clip.sample_rate * channels * 4);
  Put<uint16_t>(buf, channels * 4);
  Put<uint16_t>(buf, 32);
  buf.insert(buf.end(), {'d', 'a', 't', 'a'});
  Put<uint32_t>(buf, data_bytes);
  for (uint32_t i = 0; i < n; ++i) {
    for (int c = 0; c < channels; ++c) {
      Put<float>(buf, static_cast<float>(clip.channels[c][i]));
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

FoaClip ReadFoaWav(const std::string& path, ArrayId array_id) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(is)),
                        std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw DataError(path + ": not a RIFF/WAVE file");
  }
  FoaClip clip;
  clip.array_id = array_id;
  bool have_fmt = false;
  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const uint32_t size = Get<uint32_t>(buf, pos + 4);
    const size_t body = pos + 8;
    if (body + size > buf.size()) break;
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0) {
      if (Get<uint16_t>(buf, body) != kFormatIeeeFloat ||
          Get<uint16_t>(buf, body + 2) != 4 ||
          Get<uint16_t>(buf, body + 14) != 32) {
        throw DataError(path + ": expected 4-channel float32 audio");
      }
      clip.sample_rate = static_cast<int>(Get<uint32_t>(buf, body + 4));
      have_fmt = true;
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      if (!have_fmt) throw DataError(path + ": data before fmt chunk");
      const size_t n = size / 16;
      for (auto& ch : clip.channels) ch.resize(n);
      for (size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 4; ++c) {
          clip.channels[c][i] = Get<float>(buf, body + (i * 4 + c) * 4);
        }
      }
      return clip;
    }
    pos = body + size + (size & 1);
  }
  throw DataError(path + ": missing data chunk");
}

}  // namespace seld
