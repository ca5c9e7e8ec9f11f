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

#ifndef SELD_COMMON_H_
#define SELD_COMMON_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace seld {

// Process exit codes used by the command-line front end.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kData = 3,
  kNumerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ExitCode::kConfig, what) {}
};

// Malformed input data, shape mismatches, I/O failures.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ExitCode::kNumerical, what) {}
};

using Vec3 = std::array<double, 3>;

inline double Norm(const Vec3& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

inline double Distance(const Vec3& a, const Vec3& b) {
  return Norm({a[0] - b[0], a[1] - b[1], a[2] - b[2]});
}

inline Vec3 Scale(const Vec3& v, double s) {
  return {v[0] * s, v[1] * s, v[2] * s};
}

// Unit vector along v; the zero vector maps to itself.
inline Vec3 Normalized(const Vec3& v) {
  const double n = Norm(v);
  if (n == 0.0) return {0.0, 0.0, 0.0};
  return Scale(v, 1.0 / n);
}

inline double Dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// Angle between two nonzero vectors, in degrees.
inline double AngleDegrees(const Vec3& a, const Vec3& b) {
  const double c = Dot(a, b) / (Norm(a) * Norm(b));
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / M_PI;
}

}  // namespace seld

#endif  // SELD_COMMON_H_
