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

#ifndef SELD_SCENE_H_
#define SELD_SCENE_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "seld/common.h"
#include "seld/trackwise.h"
#include "json.hpp"

namespace seld {

enum class SignalKind { kSine, kBandNoise, kToneBurst };

struct SignalSpec {
  SignalKind kind = SignalKind::kSine;
  double freq_hz = 1000.0;    // sine, tone burst
  double lo_hz = 0.0;         // band noise
  double hi_hz = 0.0;         // band noise
  double am_rate_hz = 0.0;    // tone burst
};

struct SourceEvent {
  int class_id = 0;
  double onset_s = 0.0;
  double offset_s = 0.0;
  Vec3 position = {1.0, 0.0, 0.0};  // metres, array at the origin
  SignalSpec signal;
  double gain = 1.0;
};

struct SceneSpec {
  double duration_s = 5.0;
  int sample_rate = 32000;
  std::vector<SourceEvent> events;
  uint64_t seed = 0;
  int num_classes = kDefaultClasses;
  int max_overlap = kDefaultTracks;

  int64_t NumSamples() const;
};

// Raised when more than max_overlap events are active at once.
class OverlapError : public DataError {
 public:
  OverlapError(double time_s, int count);
  double time_s() const { return time_s_; }
  int count() const { return count_; }

 private:
  double time_s_;
  int count_;
};

enum class ArrayId { kA, kB };

// First-order Ambisonics clip, channels ordered (W, X, Y, Z).
struct FoaClip {
  std::array<std::vector<double>, 4> channels;
  int sample_rate = 32000;
  ArrayId array_id = ArrayId::kA;

  size_t NumSamples() const { return channels[0].size(); }
};

// Sample range [begin, end) of an event, clipped to the scene length.
struct SampleSpan {
  int64_t begin = 0;
  int64_t end = 0;
};
SampleSpan EventSpan(const SourceEvent& event, int sample_rate,
                     int64_t num_samples);

// Throws OverlapError / DataError if the scene breaks its invariants.
void ValidateScene(const SceneSpec& scene);

// Mono source waveform of event `index` over its active span (length
// span.end - span.begin, unit peak before gain).
std::vector<double> SourceSignal(const SceneSpec& scene, size_t index);

// Anechoic first-order encoding: W = g s, (X, Y, Z) = g s u with
// g = gain / max(r, 0.3 m).
FoaClip EncodeFoa(const SceneSpec& scene, ArrayId array_id = ArrayId::kA);

// Track index per event (scene order) under the onset-ordered
// lowest-free-track rule.
std::vector<int> AssignTracks(const SceneSpec& scene,
                              int num_tracks = kDefaultTracks);

// Frame j spans samples [j*hop, (j+1)*hop); an event is active in it when
// it covers at least half of that span.
TrackwiseSeq LabelFrames(const SceneSpec& scene, int hop_samples,
                         int num_frames, int num_tracks = kDefaultTracks);

// Per frame, the indices of events active under the same rule.
std::vector<std::vector<int>> ActiveEventsPerFrame(const SceneSpec& scene,
                                                   int hop_samples,
                                                   int num_frames);

// Signal parameters that identify class `class_id`.
SignalSpec ClassSignal(int class_id, int num_classes);

struct DatasetConfig {
  int count = 10;
  double duration_s = 5.0;
  int sample_rate = 32000;
  int num_classes = kDefaultClasses;
  int max_overlap = kDefaultTracks;
  Vec3 room_size_m = {6.0, 5.0, 3.0};  // array at the room centre
  double min_range_m = 0.5;
  int min_events = 1;
  int max_events = 4;
  double min_event_s = 0.5;
  double max_event_s = 2.5;
  double min_gain = 0.3;
  double max_gain = 1.0;
  int rotation_b = 17;  // rotation group element applied for array B
  int label_hop_samples = 1600;

  void Validate() const;
  static DatasetConfig FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

// One synthetic scene drawn from `config` with the given seed.
SceneSpec GenerateScene(const DatasetConfig& config, uint64_t seed);

struct ManifestEntry {
  std::string clip_id;
  SceneSpec scene;
  int label_hop_samples = 1600;
  int num_label_frames = 0;
  int rotation_b = 0;
};

nlohmann::json SceneToJson(const SceneSpec& scene);
SceneSpec SceneFromJson(const nlohmann::json& j);
nlohmann::json ManifestToJson(const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> ManifestFromJson(const nlohmann::json& j);
std::vector<ManifestEntry> ReadManifest(const std::string& path);

// Writes clips/<id>_A.wav, clips/<id>_B.wav, labels/<id>.csv and
// manifest.json under out_dir. Clip i uses seed MixSeed(seed, i).
std::vector<ManifestEntry> GenerateDataset(const DatasetConfig& config,
                                           uint64_t seed,
                                           const std::string& out_dir);

}  // namespace seld

#endif  // SELD_SCENE_H_
