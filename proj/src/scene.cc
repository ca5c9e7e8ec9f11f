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

#include "seld/scene.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "seld/parallel.h"
#include "seld/rng.h"
#include "seld/rotation.h"
#include "seld/wav.h"

namespace seld {

namespace {

constexpr double kMinAttenuationRange = 0.3;
constexpr int kNoisePartials = 24;

std::string SignalKindName(SignalKind kind) {
  switch (kind) {
    case SignalKind::kSine:
      return "sine";
    case SignalKind::kBandNoise:
      return "band_noise";
    case SignalKind::kToneBurst:
      return "tone_burst";
  }
  return "sine";
}

SignalKind SignalKindFromName(const std::string& name) {
  if (name == "sine") return SignalKind::kSine;
  if (name == "band_noise") return SignalKind::kBandNoise;
  if (name == "tone_burst") return SignalKind::kToneBurst;
  throw DataError("unknown signal kind '" + name + "'");
}

// Events in onset order, ties by class id then scene order.
std::vector<size_t> OnsetOrder(const SceneSpec& scene) {
  std::vector<size_t> order(scene.events.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const auto& ea = scene.events[a];
    const auto& eb = scene.events[b];
    if (ea.onset_s != eb.onset_s) return ea.onset_s < eb.onset_s;
    return ea.class_id < eb.class_id;
  });
  return order;
}

int64_t FrameOverlap(const SampleSpan& span, int64_t begin, int64_t end) {
  return std::max<int64_t>(0, std::min(span.end, end) -
                                  std::max(span.begin, begin));
}

}  // namespace

int64_t SceneSpec::NumSamples() const {
  return std::llround(duration_s * sample_rate);
}

OverlapError::OverlapError(double time_s, int count)
    : DataError("more than the allowed overlapping events (" +
                std::to_string(count) + ") at t=" + std::to_string(time_s) +
                " s"),
      time_s_(time_s),
      count_(count) {}

SampleSpan EventSpan(const SourceEvent& event, int sample_rate,
                     int64_t num_samples) {
  SampleSpan span;
  span.begin = std::clamp<int64_t>(std::llround(event.onset_s * sample_rate),
                                   0, num_samples);
  span.end = std::clamp<int64_t>(std::llround(event.offset_s * sample_rate),
                                 span.begin, num_samples);
  return span;
}

void ValidateScene(const SceneSpec& scene) {
  if (!(scene.duration_s > 0.0) || scene.sample_rate <= 0) {
    throw DataError("scene needs positive duration and sample rate");
  }
  for (size_t i = 0; i < scene.events.size(); ++i) {
    const SourceEvent& e = scene.events[i];
    const std::string where = "event " + std::to_string(i) + ": ";
    if (e.class_id < 0 || e.class_id >= scene.num_classes) {
      throw DataError(where + "class id out of range");
    }
    if (!(e.offset_s > e.onset_s) || e.onset_s < 0.0 ||
        e.offset_s > scene.duration_s + 1e-9) {
      throw DataError(where + "onset/offset outside the scene");
    }
    if (!(Norm(e.position) > 0.0)) {
      throw DataError(where + "source position at the array origin");
    }
    if (!(e.gain > 0.0 && e.gain <= 1.0)) {
      throw DataError(where + "gain must lie in (0, 1]");
    }
  }
  // The active count only increases at onsets, so checking every onset
  // sample covers all instants.
  const int64_t n = scene.NumSamples();
  std::vector<SampleSpan> spans;
  for (const auto& e : scene.events) {
    spans.push_back(EventSpan(e, scene.sample_rate, n));
  }
  for (const auto& probe : spans) {
    if (probe.begin == probe.end) continue;
    int count = 0;
    for (const auto& s : spans) {
      count += s.begin <= probe.begin && probe.begin < s.end;
    }
    if (count > scene.max_overlap) {
      throw OverlapError(static_cast<double>(probe.begin) / scene.sample_rate,
                         count);
    }
  }
}

SignalSpec ClassSignal(int class_id, int num_classes) {
  const double ratio =
      num_classes > 1 ? static_cast<double>(class_id) / (num_classes - 1) : 0;
  const double f = 300.0 * std::pow(20.0, ratio);  // 300 Hz .. 6 kHz
  SignalSpec s;
  s.kind = static_cast<SignalKind>(class_id % 3);
  s.freq_hz = f;
  if (s.kind == SignalKind::kBandNoise) {
    s.lo_hz = f / 1.2;
    s.hi_hz = f * 1.2;
  }
  if (s.kind == SignalKind::kToneBurst) s.am_rate_hz = 3.0 + 0.5 * class_id;
  return s;
}

std::vector<double> SourceSignal(const SceneSpec& scene, size_t index) {
  const SourceEvent& e = scene.events.at(index);
  const SampleSpan span = EventSpan(e, scene.sample_rate, scene.NumSamples());
  const double fs = scene.sample_rate;
  std::vector<double> s(span.end - span.begin, 0.0);
  switch (e.signal.kind) {
    case SignalKind::kSine:
      for (size_t i = 0; i < s.size(); ++i) {
        s[i] = std::sin(2.0 * M_PI * e.signal.freq_hz * (i / fs));
      }
      break;
    case SignalKind::kToneBurst:
      // Envelope stays above 0.2 so every stretch of the event has energy.
      for (size_t i = 0; i < s.size(); ++i) {
        const double t = i / fs;
        const double env = 0.6 + 0.4 * std::cos(2.0 * M_PI *
                                                e.signal.am_rate_hz * t);
        s[i] = env * std::sin(2.0 * M_PI * e.signal.freq_hz * t);
      }
      break;
    case SignalKind::kBandNoise: {
      Rng rng(MixSeed(scene.seed, index));
      std::vector<double> freqs(kNoisePartials), phases(kNoisePartials);
      for (int p = 0; p < kNoisePartials; ++p) {
        freqs[p] = rng.Uniform(e.signal.lo_hz, e.signal.hi_hz);
        phases[p] = rng.Uniform(0.0, 2.0 * M_PI);
      }
      double peak = 0.0;
      for (size_t i = 0; i < s.size(); ++i) {
        double v = 0.0;
        for (int p = 0; p < kNoisePartials; ++p) {
          v += std::sin(2.0 * M_PI * freqs[p] * (i / fs) + phases[p]);
        }
        s[i] = v;
        peak = std::max(peak, std::abs(v));
      }
      if (peak > 0.0) {
        for (double& v : s) v /= peak;
      }
      break;
    }
  }
  return s;
}

FoaClip EncodeFoa(const SceneSpec& scene, ArrayId array_id) {
  ValidateScene(scene);
  const int64_t n = scene.NumSamples();
  FoaClip clip;
  clip.sample_rate = scene.sample_rate;
  clip.array_id = array_id;
  for (auto& ch : clip.channels) ch.assign(n, 0.0);
  for (size_t i = 0; i < scene.events.size(); ++i) {
    const SourceEvent& e = scene.events[i];
    const SampleSpan span = EventSpan(e, scene.sample_rate, n);
    const std::vector<double> s = SourceSignal(scene, i);
    const double r = Norm(e.position);
    const double g = e.gain / std::max(r, kMinAttenuationRange);
    const Vec3 u = Scale(e.position, 1.0 / r);
    const double coef[4] = {g, g * u[0], g * u[1], g * u[2]};
    for (int c = 0; c < 4; ++c) {
      double* out = clip.channels[c].data() + span.begin;
      for (size_t k = 0; k < s.size(); ++k) out[k] += coef[c] * s[k];
    }
  }
  return clip;
}

std::vector<int> AssignTracks(const SceneSpec& scene, int num_tracks) {
  const int64_t n = scene.NumSamples();
  std::vector<int> track(scene.events.size(), -1);
  std::vector<int64_t> busy_until(num_tracks, -1);
  for (size_t idx : OnsetOrder(scene)) {
    const SampleSpan span = EventSpan(scene.events[idx], scene.sample_rate, n);
    for (int m = 0; m < num_tracks; ++m) {
      if (busy_until[m] <= span.begin) {
        track[idx] = m;
        busy_until[m] = span.end;
        break;
      }
    }
    if (track[idx] < 0) {
      throw OverlapError(static_cast<double>(span.begin) / scene.sample_rate,
                         num_tracks + 1);
    }
  }
  return track;
}

std::vector<std::vector<int>> ActiveEventsPerFrame(const SceneSpec& scene,
                                                   int hop_samples,
                                                   int num_frames) {
  if (hop_samples <= 0) throw DataError("hop_samples must be positive");
  const int64_t n = scene.NumSamples();
  std::vector<std::vector<int>> active(num_frames);
  for (size_t i = 0; i < scene.events.size(); ++i) {
    const SampleSpan span = EventSpan(scene.events[i], scene.sample_rate, n);
    for (int j = 0; j < num_frames; ++j) {
      const int64_t begin = static_cast<int64_t>(j) * hop_samples;
      if (2 * FrameOverlap(span, begin, begin + hop_samples) >= hop_samples) {
        active[j].push_back(static_cast<int>(i));
      }
    }
  }
  return active;
}

TrackwiseSeq LabelFrames(const SceneSpec& scene, int hop_samples,
                         int num_frames, int num_tracks) {
  ValidateScene(scene);
  const std::vector<int> track = AssignTracks(scene, num_tracks);
  const auto active = ActiveEventsPerFrame(scene, hop_samples, num_frames);
  const int64_t n = scene.NumSamples();
  TrackwiseSeq labels(num_frames, TrackwiseFrame(num_tracks,
                                                 scene.num_classes));
  for (int j = 0; j < num_frames; ++j) {
    const int64_t begin = static_cast<int64_t>(j) * hop_samples;
    // An event ending and another starting on the same track can both
    // cover exactly half a frame; the larger overlap (then the earlier
    // event) wins.
    std::vector<int64_t> best(num_tracks, -1);
    for (int i : active[j]) {
      const SourceEvent& e = scene.events[i];
      const int64_t ov = FrameOverlap(EventSpan(e, scene.sample_rate, n),
                                      begin, begin + hop_samples);
      const int m = track[i];
      if (ov <= best[m]) continue;
      best[m] = ov;
      TrackwiseFrame& f = labels[j];
      std::fill(f.sed.begin() + m * f.num_classes,
                f.sed.begin() + (m + 1) * f.num_classes, 0.0);
      f.Sed(m, e.class_id) = 1.0;
      f.SetDoa(m, Normalized(e.position));
    }
  }
  return labels;
}

void DatasetConfig::Validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("synth." + key + ": " + why);
  };
  if (count < 0) fail("count", "must be >= 0");
  if (!(duration_s > 0.0)) fail("duration_s", "must be positive");
  if (sample_rate <= 0) fail("sample_rate", "must be positive");
  if (num_classes < 1) fail("num_classes", "must be >= 1");
  if (max_overlap < 1) fail("max_overlap", "must be >= 1");
  for (double d : room_size_m) {
    if (!(d > 0.0)) fail("room_size_m", "dimensions must be positive");
  }
  if (!(min_range_m > 0.0)) fail("min_range_m", "must be positive");
  if (min_range_m >= 0.5 * Norm(room_size_m)) {
    fail("min_range_m", "leaves no room for sources");
  }
  if (min_events < 0 || max_events < min_events) {
    fail("max_events", "need 0 <= min_events <= max_events");
  }
  if (!(min_event_s > 0.0) || max_event_s < min_event_s ||
      min_event_s > duration_s) {
    fail("min_event_s", "need 0 < min_event_s <= max_event_s, <= duration");
  }
  if (!(min_gain > 0.0) || max_gain > 1.0 || max_gain < min_gain) {
    fail("min_gain", "need 0 < min_gain <= max_gain <= 1");
  }
  if (rotation_b < 0 || rotation_b >= kRotationGroupSize) {
    fail("rotation_b", "must be in [0, 47]");
  }
  if (label_hop_samples <= 0) fail("label_hop_samples", "must be positive");
}

DatasetConfig DatasetConfig::FromJson(const nlohmann::json& j) {
  DatasetConfig c;
  if (!j.is_object()) throw ConfigError("synth: expected a table");
  try {
    c.count = j.value("count", c.count);
    c.duration_s = j.value("duration_s", c.duration_s);
    c.sample_rate = j.value("sample_rate", c.sample_rate);
    c.num_classes = j.value("num_classes", c.num_classes);
    c.max_overlap = j.value("max_overlap", c.max_overlap);
    if (j.contains("room_size_m")) {
      c.room_size_m = j.at("room_size_m").get<Vec3>();
    }
    c.min_range_m = j.value("min_range_m", c.min_range_m);
    c.min_events = j.value("min_events", c.min_events);
    c.max_events = j.value("max_events", c.max_events);
    c.min_event_s = j.value("min_event_s", c.min_event_s);
    c.max_event_s = j.value("max_event_s", c.max_event_s);
    c.min_gain = j.value("min_gain", c.min_gain);
    c.max_gain = j.value("max_gain", c.max_gain);
    c.rotation_b = j.value("rotation_b", c.rotation_b);
    c.label_hop_samples = j.value("label_hop_samples", c.label_hop_samples);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth: ") + e.what());
  }
  c.Validate();
  return c;
}

nlohmann::json DatasetConfig::ToJson() const {
  return {{"count", count},
          {"duration_s", duration_s},
          {"sample_rate", sample_rate},
          {"num_classes", num_classes},
          {"max_overlap", max_overlap},
          {"room_size_m", room_size_m},
          {"min_range_m", min_range_m},
          {"min_events", min_events},
          {"max_events", max_events},
          {"min_event_s", min_event_s},
          {"max_event_s", max_event_s},
          {"min_gain", min_gain},
          {"max_gain", max_gain},
          {"rotation_b", rotation_b},
          {"label_hop_samples", label_hop_samples}};
}

SceneSpec GenerateScene(const DatasetConfig& config, uint64_t seed) {
  config.Validate();
  Rng rng(seed);
  SceneSpec scene;
  scene.duration_s = config.duration_s;
  scene.sample_rate = config.sample_rate;
  scene.seed = seed;
  scene.num_classes = config.num_classes;
  scene.max_overlap = config.max_overlap;
  const int n_events = rng.UniformInt(config.min_events, config.max_events);
  for (int i = 0; i < n_events; ++i) {
    SourceEvent e;
    e.class_id = rng.UniformInt(0, config.num_classes - 1);
    e.signal = ClassSignal(e.class_id, config.num_classes);
    const double dur = rng.Uniform(
        config.min_event_s, std::min(config.max_event_s, config.duration_s));
    do {
      for (int d = 0; d < 3; ++d) {
        e.position[d] = rng.Uniform(-0.5, 0.5) * config.room_size_m[d];
      }
    } while (Norm(e.position) < config.min_range_m);
    e.gain = rng.Uniform(config.min_gain, config.max_gain);
    // Placement attempts that would break the overlap cap are redrawn; an
    // event that never fits is dropped.
    for (int attempt = 0; attempt < 50; ++attempt) {
      e.onset_s = rng.Uniform(0.0, config.duration_s - dur);
      e.offset_s = e.onset_s + dur;
      scene.events.push_back(e);
      try {
        ValidateScene(scene);
        break;
      } catch (const OverlapError&) {
        scene.events.pop_back();
      }
    }
  }
  return scene;
}

nlohmann::json SceneToJson(const SceneSpec& scene) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : scene.events) {
    nlohmann::json kind = {{"type", SignalKindName(e.signal.kind)}};
    switch (e.signal.kind) {
      case SignalKind::kSine:
        kind["freq_hz"] = e.signal.freq_hz;
        break;
      case SignalKind::kBandNoise:
        kind["lo_hz"] = e.signal.lo_hz;
        kind["hi_hz"] = e.signal.hi_hz;
        break;
      case SignalKind::kToneBurst:
        kind["freq_hz"] = e.signal.freq_hz;
        kind["am_rate_hz"] = e.signal.am_rate_hz;
        break;
    }
    events.push_back({{"class_id", e.class_id},
                      {"onset_s", e.onset_s},
                      {"offset_s", e.offset_s},
                      {"position", e.position},
                      {"signal_kind", kind},
                      {"gain", e.gain}});
  }
  return {{"seed", scene.seed},
          {"duration_s", scene.duration_s},
          {"sample_rate", scene.sample_rate},
          {"num_classes", scene.num_classes},
          {"max_overlap", scene.max_overlap},
          {"events", events}};
}

SceneSpec SceneFromJson(const nlohmann::json& j) {
  SceneSpec scene;
  try {
    scene.seed = j.at("seed").get<uint64_t>();
    scene.duration_s = j.at("duration_s").get<double>();
    scene.sample_rate = j.value("sample_rate", scene.sample_rate);
    scene.num_classes = j.value("num_classes", scene.num_classes);
    scene.max_overlap = j.value("max_overlap", scene.max_overlap);
    for (const auto& je : j.at("events")) {
      SourceEvent e;
      e.class_id = je.at("class_id").get<int>();
      e.onset_s = je.at("onset_s").get<double>();
      e.offset_s = je.at("offset_s").get<double>();
      e.position = je.at("position").get<Vec3>();
      e.gain = je.at("gain").get<double>();
      const auto& k = je.at("signal_kind");
      e.signal.kind = SignalKindFromName(k.at("type").get<std::string>());
      e.signal.freq_hz = k.value("freq_hz", 0.0);
      e.signal.lo_hz = k.value("lo_hz", 0.0);
      e.signal.hi_hz = k.value("hi_hz", 0.0);
      e.signal.am_rate_hz = k.value("am_rate_hz", 0.0);
      scene.events.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed scene: ") + e.what());
  }
  return scene;
}

nlohmann::json ManifestToJson(const std::vector<ManifestEntry>& entries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : entries) {
    nlohmann::json j = SceneToJson(m.scene);
    j["clip_id"] = m.clip_id;
    j["label_hop_samples"] = m.label_hop_samples;
    j["num_label_frames"] = m.num_label_frames;
    j["rotation_b"] = m.rotation_b;
    arr.push_back(j);
  }
  return arr;
}

std::vector<ManifestEntry> ManifestFromJson(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("manifest must be a JSON array");
  std::vector<ManifestEntry> entries;
  for (const auto& je : j) {
    ManifestEntry m;
    m.scene = SceneFromJson(je);
    try {
      m.clip_id = je.at("clip_id").get<std::string>();
      m.label_hop_samples = je.at("label_hop_samples").get<int>();
      m.num_label_frames = je.at("num_label_frames").get<int>();
      m.rotation_b = je.value("rotation_b", 0);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed manifest entry: ") + e.what());
    }
    entries.push_back(std::move(m));
  }
  return entries;
}

std::vector<ManifestEntry> ReadManifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read manifest " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return ManifestFromJson(j);
}

std::vector<ManifestEntry> GenerateDataset(const DatasetConfig& config,
                                           uint64_t seed,
                                           const std::string& out_dir) {
  namespace fs = std::filesystem;
  config.Validate();
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "clips", ec);
  if (!ec) fs::create_directories(fs::path(out_dir) / "labels", ec);
  if (ec) {
    throw DataError("cannot create output directory " + out_dir + ": " +
                    ec.message());
  }
  std::vector<ManifestEntry> entries(config.count);
  const RotationElement rot_b = RotationGroup()[config.rotation_b];
  ParallelFor(config.count, [&](size_t i) {
    char id[32];
    std::snprintf(id, sizeof(id), "clip_%04zu", i);
    ManifestEntry& m = entries[i];
    m.clip_id = id;
    m.scene = GenerateScene(config, MixSeed(seed, i));
    m.label_hop_samples = config.label_hop_samples;
    m.num_label_frames =
        static_cast<int>(m.scene.NumSamples() / config.label_hop_samples);
    m.rotation_b = config.rotation_b;
    const FoaClip a = EncodeFoa(m.scene, ArrayId::kA);
    FoaClip b = RotateFoa(a, rot_b);
    b.array_id = ArrayId::kB;
    const fs::path dir(out_dir);
    WriteFoaWav(a, (dir / "clips" / (m.clip_id + "_A.wav")).string());
    WriteFoaWav(b, (dir / "clips" / (m.clip_id + "_B.wav")).string());
    WriteLabelCsv(LabelFrames(m.scene, m.label_hop_samples,
                              m.num_label_frames, config.max_overlap),
                  (dir / "labels" / (m.clip_id + ".csv")).string());
  });
  std::ofstream os(fs::path(out_dir) / "manifest.json", std::ios::binary);
  if (!os) throw DataError("cannot write manifest in " + out_dir);
  os << ManifestToJson(entries).dump(2) << "\n";
  return entries;
}

}  // namespace seld
