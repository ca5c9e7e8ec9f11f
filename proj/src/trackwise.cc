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

#include "seld/trackwise.h"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace seld {

int TrackwiseFrame::ActiveClass(int track) const {
  for (int k = 0; k < num_classes; ++k) {
    if (Sed(track, k) != 0.0) return k;
  }
  return -1;
}

void ValidateLabels(const TrackwiseSeq& labels) {
  for (size_t t = 0; t < labels.size(); ++t) {
    const TrackwiseFrame& f = labels[t];
    for (int m = 0; m < f.num_tracks; ++m) {
      int ones = 0;
      for (int k = 0; k < f.num_classes; ++k) {
        const double v = f.Sed(m, k);
        if (v != 0.0 && v != 1.0) {
          throw DataError("label frame " + std::to_string(t) + " track " +
                          std::to_string(m) + ": non-binary SED entry");
        }
        ones += v == 1.0;
      }
      const bool doa_zero = Norm(f.Doa(m)) == 0.0;
      if (ones > 1 || (ones == 0) != doa_zero) {
        throw DataError("label frame " + std::to_string(t) + " track " +
                        std::to_string(m) +
                        ": row must be one-hot with DoA, or all zero");
      }
    }
  }
}

std::string FormatLabelCsv(const TrackwiseSeq& labels) {
  std::string out = "frame,track,class,x,y,z\n";
  char buf[160];
  for (size_t t = 0; t < labels.size(); ++t) {
    const TrackwiseFrame& f = labels[t];
    for (int m = 0; m < f.num_tracks; ++m) {
      const int k = f.ActiveClass(m);
      if (k < 0) continue;
      const Vec3 d = f.Doa(m);
      std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%.9f,%.9f,%.9f\n", t, m, k,
                    d[0], d[1], d[2]);
      out += buf;
    }
  }
  return out;
}

void WriteLabelCsv(const TrackwiseSeq& labels, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write label file " + path);
  os << FormatLabelCsv(labels);
}

TrackwiseSeq ReadLabelCsv(const std::string& path, int num_frames,
                          int num_tracks, int num_classes) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read label file " + path);
  std::string line;
  std::getline(is, line);
  if (line.rfind("frame,track,class,x,y,z", 0) != 0) {
    throw DataError(path + ": bad label header");
  }
  TrackwiseSeq labels(num_frames, TrackwiseFrame(num_tracks, num_classes));
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected 6 fields");
    }
    const std::string where = path + ":" + std::to_string(lineno);
    int frame = 0, track = 0, cls = 0;
    Vec3 doa;
    try {
      frame = std::stoi(fields[0]);
      track = std::stoi(fields[1]);
      cls = std::stoi(fields[2]);
      for (int d = 0; d < 3; ++d) doa[d] = std::stod(fields[3 + d]);
    } catch (const std::exception&) {
      throw DataError(where + ": malformed number");
    }
    if (frame < 0 || frame >= num_frames || track < 0 || track >= num_tracks ||
        cls < 0 || cls >= num_classes) {
      throw DataError(where + ": frame/track/class out of range");
    }
    TrackwiseFrame& f = labels[frame];
    f.Sed(track, cls) = 1.0;
    f.SetDoa(track, doa);
  }
  return labels;
}

}  // namespace seld
