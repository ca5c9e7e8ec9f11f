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

#ifndef SELD_TRACKWISE_H_
#define SELD_TRACKWISE_H_

#include <string>
#include <vector>

#include "seld/common.h"

namespace seld {

inline constexpr int kDefaultTracks = 3;
inline constexpr int kDefaultClasses = 14;

// One frame of the track-wise output format: M class-agnostic tracks, each
// carrying K SED activations and a Cartesian DoA vector. Used for both
// labels (one-hot or all-zero rows) and predictions (probabilities).
struct TrackwiseFrame {
  int num_tracks = kDefaultTracks;
  int num_classes = kDefaultClasses;
  std::vector<double> sed;  // num_tracks x num_classes, row-major
  std::vector<double> doa;  // num_tracks x 3, row-major

  TrackwiseFrame() : TrackwiseFrame(kDefaultTracks, kDefaultClasses) {}
  TrackwiseFrame(int tracks, int classes)
      : num_tracks(tracks),
        num_classes(classes),
        sed(static_cast<size_t>(tracks) * classes, 0.0),
        doa(static_cast<size_t>(tracks) * 3, 0.0) {}

  double& Sed(int track, int cls) { return sed[track * num_classes + cls]; }
  double Sed(int track, int cls) const {
    return sed[track * num_classes + cls];
  }
  Vec3 Doa(int track) const {
    return {doa[track * 3], doa[track * 3 + 1], doa[track * 3 + 2]};
  }
  void SetDoa(int track, const Vec3& v) {
    for (int c = 0; c < 3; ++c) doa[track * 3 + c] = v[c];
  }
  // Class index of a one-hot label row, or -1 for an inactive row.
  int ActiveClass(int track) const;

  bool operator==(const TrackwiseFrame& o) const = default;
};

using TrackwiseSeq = std::vector<TrackwiseFrame>;

// Checks the label invariants: at most one 1 per row, DoA zero iff the row
// is inactive. Throws DataError naming the offending frame/track.
void ValidateLabels(const TrackwiseSeq& labels);

// Label CSV, header `frame,track,class,x,y,z`, one row per active
// (frame, track), DoA printed with 9 decimals.
void WriteLabelCsv(const TrackwiseSeq& labels, const std::string& path);
std::string FormatLabelCsv(const TrackwiseSeq& labels);
TrackwiseSeq ReadLabelCsv(const std::string& path, int num_frames,
                          int num_tracks = kDefaultTracks,
                          int num_classes = kDefaultClasses);

}  // namespace seld

#endif  // SELD_TRACKWISE_H_
