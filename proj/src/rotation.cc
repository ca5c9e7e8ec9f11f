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

#include "seld/rotation.h"

#include <algorithm>

namespace seld {

RotationElement::Matrix RotationElement::matrix() const {
  Matrix m{};
  for (int i = 0; i < 3; ++i) m[i][perm[i]] = sign[i];
  return m;
}

int RotationElement::Determinant() const {
  // Parity of the permutation times the product of signs.
  int inversions = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) inversions += perm[i] > perm[j];
  }
  const int parity = inversions % 2 == 0 ? 1 : -1;
  return parity * sign[0] * sign[1] * sign[2];
}

Vec3 RotationElement::Apply(const Vec3& v) const {
  // + 0.0 folds negated zeros back to +0.
  return {sign[0] * v[perm[0]] + 0.0, sign[1] * v[perm[1]] + 0.0,
          sign[2] * v[perm[2]] + 0.0};
}

RotationElement RotationElement::Inverse() const {
  RotationElement inv;
  for (int i = 0; i < 3; ++i) {
    inv.perm[perm[i]] = i;
    inv.sign[perm[i]] = sign[i];
  }
  return inv;
}

RotationElement operator*(const RotationElement& a, const RotationElement& b) {
  // out[i] = a.sign[i] * (b v)[a.perm[i]]
  //        = a.sign[i] * b.sign[a.perm[i]] * v[b.perm[a.perm[i]]]
  RotationElement c;
  for (int i = 0; i < 3; ++i) {
    c.perm[i] = b.perm[a.perm[i]];
    c.sign[i] = a.sign[i] * b.sign[a.perm[i]];
  }
  return c;
}

const std::vector<RotationElement>& RotationGroup() {
  static const std::vector<RotationElement> group = [] {
    std::vector<RotationElement> g;
    std::array<int, 3> perm = {0, 1, 2};
    do {
      for (int bits = 0; bits < 8; ++bits) {
        RotationElement r;
        r.perm = perm;
        for (int i = 0; i < 3; ++i) r.sign[i] = (bits >> i) & 1 ? -1 : 1;
        g.push_back(r);
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return g;
  }();
  return group;
}

int RotationIndex(const RotationElement& r) {
  const auto& g = RotationGroup();
  const auto it = std::find(g.begin(), g.end(), r);
  if (it == g.end()) return -1;
  return static_cast<int>(it - g.begin());
}

FoaClip RotateFoa(const FoaClip& clip, const RotationElement& rot) {
  FoaClip out;
  out.sample_rate = clip.sample_rate;
  out.array_id = clip.array_id;
  out.channels[0] = clip.channels[0];
  for (int i = 0; i < 3; ++i) {
    const auto& src = clip.channels[1 + rot.perm[i]];
    auto& dst = out.channels[1 + i];
    dst.resize(src.size());
    if (rot.sign[i] > 0) {
      dst = src;
    } else {
      std::transform(src.begin(), src.end(), dst.begin(),
                     [](double v) { return -v; });
    }
  }
  return out;
}

TrackwiseSeq RotateLabels(const TrackwiseSeq& labels,
                          const RotationElement& rot) {
  TrackwiseSeq out = labels;
  for (auto& f : out) {
    for (int m = 0; m < f.num_tracks; ++m) f.SetDoa(m, rot.Apply(f.Doa(m)));
  }
  return out;
}

}  // namespace seld
