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

#include "seld/checkpoint.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "seld/common.h"

namespace seld {

namespace {

constexpr char kMagic[4] = {'S', 'L', 'D', 'M'};
constexpr uint32_t kVersion = 1;

template <typename T>
void Put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T Get(std::ifstream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw DataError(path + ": truncated checkpoint");
  }
  return v;
}

}  // namespace

void WriteCheckpoint(const std::string& path, const nlohmann::json& arch,
                     const nn::ParamList& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(kMagic, 4);
  Put<uint32_t>(out, kVersion);
  const std::string blob = arch.dump();
  Put<uint64_t>(out, blob.size());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  Put<uint32_t>(out, static_cast<uint32_t>(params.size()));
  for (const nn::Param* p : params) {
    Put<uint32_t>(out, static_cast<uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    Put<uint32_t>(out, 2);
    Put<uint64_t>(out, static_cast<uint64_t>(p->value.rows()));
    Put<uint64_t>(out, static_cast<uint64_t>(p->value.cols()));
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        Put<double>(out, p->value(r, c));
      }
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

Checkpoint ReadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError(path + ": not a model checkpoint");
  }
  const auto version = Get<uint32_t>(in, path);
  if (version != kVersion) {
    throw DataError(path + ": unsupported checkpoint version " +
                    std::to_string(version));
  }
  const auto blob_len = Get<uint64_t>(in, path);
  if (blob_len > (uint64_t{1} << 24)) {
    throw DataError(path + ": corrupt architecture block");
  }
  std::string blob(blob_len, '\0');
  if (!in.read(blob.data(), static_cast<std::streamsize>(blob_len))) {
    throw DataError(path + ": truncated checkpoint");
  }
  Checkpoint ck;
  try {
    ck.arch = nlohmann::json::parse(blob);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad architecture JSON: " + e.what());
  }
  const auto count = Get<uint32_t>(in, path);
  for (uint32_t i = 0; i < count; ++i) {
    const auto name_len = Get<uint32_t>(in, path);
    if (name_len > 4096) throw DataError(path + ": corrupt tensor name");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) {
      throw DataError(path + ": truncated checkpoint");
    }
    const auto rank = Get<uint32_t>(in, path);
    if (rank < 1 || rank > 2) {
      throw DataError(path + ": tensor " + name + " has unsupported rank");
    }
    const auto rows = Get<uint64_t>(in, path);
    const uint64_t cols = rank == 2 ? Get<uint64_t>(in, path) : 1;
    if (rows * cols > (uint64_t{1} << 28)) {
      throw DataError(path + ": tensor " + name + " is implausibly large");
    }
    nn::Matrix m(rows, cols);
    for (uint64_t r = 0; r < rows; ++r) {
      for (uint64_t c = 0; c < cols; ++c) m(r, c) = Get<double>(in, path);
    }
    ck.tensors[name] = std::move(m);
  }
  return ck;
}

}  // namespace seld
