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

#ifndef SELD_ROTATION_H_
#define SELD_ROTATION_H_

#include <array>
#include <vector>

#include "seld/common.h"
#include "seld/scene.h"
#include "seld/trackwise.h"

namespace seld {

// A signed axis permutation acting on (X, Y, Z). Row i of the matrix has a
// single entry `sign[i]` in column `perm[i]`, so that
//   out[i] = sign[i] * in[perm[i]].
struct RotationElement {
  std::array<int, 3> perm = {0, 1, 2};
  std::array<int, 3> sign = {1, 1, 1};

  using Matrix = std::array<std::array<int, 3>, 3>;
  Matrix matrix() const;
  int Determinant() const;
  Vec3 Apply(const Vec3& v) const;
  RotationElement Inverse() const;
  // Composition: (a * b).Apply(v) == a.Apply(b.Apply(v)).
  friend RotationElement operator*(const RotationElement& a,
                                   const RotationElement& b);
  bool operator==(const RotationElement&) const = default;
};

inline constexpr int kRotationGroupSize = 48;

// All 48 signed permutations: permutations in lexicographic order, then
// sign patterns by bit index (bit i set = row i negated). Element 0 is the
// identity.
const std::vector<RotationElement>& RotationGroup();

// Index of `r` in RotationGroup(), or -1 when it is not a member.
int RotationIndex(const RotationElement& r);

// W is kept; the dipole channels are permuted with sign flips.
FoaClip RotateFoa(const FoaClip& clip, const RotationElement& rot);

// DoA vectors are rotated, SED rows are untouched.
TrackwiseSeq RotateLabels(const TrackwiseSeq& labels,
                          const RotationElement& rot);

}  // namespace seld

#endif  // SELD_ROTATION_H_
