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

#include "seld/pipeline.h"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

#include "seld/augment.h"
#include "seld/checkpoint.h"
#include "seld/config.h"
#include "seld/features.h"
#include "seld/parallel.h"
#include "seld/prediction_io.h"
#include "seld/rotation.h"
#include "seld/wav.h"

namespace seld {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> kSubcommands = {
    "synth", "extract", "augment", "train",
    "predict", "ensemble", "eval", "repro-ensemble-gap"};

namespace {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };
LogLevel g_log_level = LogLevel::kInfo;
std::mutex g_log_mutex;

void Log(LogLevel level, const std::string& msg) {
  if (level > g_log_level) return;
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::cerr << "[seld-forge] " << msg << "\n";
}

void SetLogLevel(const json& cfg) {
  const std::string level = cfg.value("log_level", std::string("info"));
  if (level == "error") {
    g_log_level = LogLevel::kError;
  } else if (level == "warn") {
    g_log_level = LogLevel::kWarn;
  } else if (level == "info") {
    g_log_level = LogLevel::kInfo;
  } else if (level == "debug") {
    g_log_level = LogLevel::kDebug;
  } else {
    throw ConfigError("log_level: expected error|warn|info|debug");
  }
}

uint64_t ResolveSeed(const RunOptions& opts) {
  if (opts.seed) return *opts.seed;
  const json& s = RequireKey(opts.config, "seed");
  if (!s.is_number_integer() || s.get<int64_t>() < 0) {
    throw ConfigError("seed must be a non-negative integer");
  }
  return s.get<uint64_t>();
}

fs::path ResolveOutDir(const RunOptions& opts) {
  const std::string dir =
      opts.out_dir ? *opts.out_dir : RequireString(opts.config, "output_dir");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir);
  return dir;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

void WriteJson(const fs::path& path, const json& j) {
  WriteText(path, j.dump(2) + "\n");
}

json ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void EchoConfig(const fs::path& out, const std::string& command,
                json resolved) {
  resolved["command"] = command;
  WriteJson(out / "resolved_config.json", resolved);
}

fs::path InputDir(const json& cfg, const std::string& key) {
  const fs::path p = RequireString(cfg, key);
  if (!fs::is_directory(p)) {
    throw DataError(key + ": no such directory: " + p.string());
  }
  return p;
}

int FeatureHop(const FeatureConfig& fc) {
  return fc.family == FeatureFamily::kLogMelIv ? fc.logmel_hop : fc.salsa_hop;
}

std::string CsvDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Features directory index entry.
struct IndexEntry {
  std::string id;
  std::string source;  // clip the entry was derived from
  std::string features;
  std::string labels;
  int label_frames = 0;
  int label_hop = 0;
  int feature_hop = 0;
  int sample_rate = 0;
};

json IndexToJson(const std::vector<IndexEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    arr.push_back({{"id", e.id},
                   {"source", e.source},
                   {"features", e.features},
                   {"labels", e.labels},
                   {"label_frames", e.label_frames},
                   {"label_hop_samples", e.label_hop},
                   {"feature_hop_samples", e.feature_hop},
                   {"sample_rate", e.sample_rate}});
  }
  return arr;
}

std::vector<IndexEntry> ReadIndex(const fs::path& dir) {
  const json j = ReadJson(dir / "index.json");
  if (!j.is_array()) throw DataError("index.json must be an array");
  std::vector<IndexEntry> out;
  try {
    for (const auto& e : j) {
      IndexEntry x;
      x.id = e.at("id").get<std::string>();
      x.source = e.value("source", x.id);
      x.features = e.at("features").get<std::string>();
      x.labels = e.value("labels", std::string());
      x.label_frames = e.at("label_frames").get<int>();
      x.label_hop = e.at("label_hop_samples").get<int>();
      x.feature_hop = e.at("feature_hop_samples").get<int>();
      x.sample_rate = e.at("sample_rate").get<int>();
      out.push_back(std::move(x));
    }
  } catch (const json::exception& e) {
    throw DataError((dir / "index.json").string() + ": " + e.what());
  }
  return out;
}

const ManifestEntry* FindClip(const std::vector<ManifestEntry>& manifest,
                              const std::string& id) {
  for (const auto& m : manifest) {
    if (m.clip_id == id) return &m;
  }
  return nullptr;
}

struct LoadedClip {
  FoaClip a;
  FoaClip b;
  TrackwiseSeq labels;
};

LoadedClip LoadClip(const fs::path& dataset, const ManifestEntry& m) {
  LoadedClip c;
  c.a = ReadFoaWav((dataset / "clips" / (m.clip_id + "_A.wav")).string());
  c.b = ReadFoaWav((dataset / "clips" / (m.clip_id + "_B.wav")).string());
  c.b.array_id = ArrayId::kB;
  c.labels = ReadLabelCsv((dataset / "labels" / (m.clip_id + ".csv")).string(),
                          m.num_label_frames, m.scene.max_overlap,
                          m.scene.num_classes);
  return c;
}

std::vector<std::string> PredictionIds(const fs::path& dir) {
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".sldp") ids.push_back(e.path().stem());
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw DataError("no .sldp files in " + dir.string());
  return ids;
}

std::vector<fs::path> PathList(const json& cfg, const std::string& key) {
  const json& v = RequireKey(cfg, key);
  std::vector<fs::path> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_string()) throw ConfigError(key + " must hold strings");
      out.push_back(x.get<std::string>());
    }
  } else {
    throw ConfigError(key + " must be a string or a list of strings");
  }
  for (const auto& p : out) {
    if (!fs::is_directory(p)) {
      throw DataError(key + ": no such directory: " + p.string());
    }
  }
  return out;
}

std::string LossCurveCsv(const TrainReport& r, const TrainConfig& tc) {
  std::string out = "epoch,lr,train_loss,val_f\n";
  for (size_t e = 0; e < r.train_loss.size(); ++e) {
    out += std::to_string(e + 1) + "," +
           CsvDouble(ScheduledLr(tc, static_cast<int>(e))) + "," +
           CsvDouble(r.train_loss[e]) + "," + CsvDouble(r.val_f[e]) + "\n";
  }
  return out;
}

std::string EventsCsv(const std::vector<DetectedEvent>& events) {
  std::string out = "frame,track,class,x,y,z\n";
  char buf[160];
  for (const auto& e : events) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.9f,%.9f,%.9f\n", e.frame,
                  e.track, e.class_id, e.doa[0], e.doa[1], e.doa[2]);
    out += buf;
  }
  return out;
}

EpochCallback EpochLogger(const std::string& what, int epochs) {
  return [what, epochs](int epoch, double loss, double f) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s epoch %d/%d loss %.6f val F %.4f",
                  what.c_str(), epoch + 1, epochs, loss, f);
    Log(LogLevel::kInfo, buf);
  };
}

}  // namespace

void CmdSynth(const RunOptions& opts) {
  const uint64_t seed = ResolveSeed(opts);
  DatasetConfig dc = DatasetConfig::FromJson(Section(opts.config, "synth"));
  const fs::path out = ResolveOutDir(opts);
  Log(LogLevel::kInfo, "synth: " + std::to_string(dc.count) + " clips -> " +
                           out.string());
  GenerateDataset(dc, seed, out.string());
  EchoConfig(out, "synth", {{"seed", seed}, {"synth", dc.ToJson()}});
}

void CmdExtract(const RunOptions& opts) {
  const json& cfg = opts.config;
  const fs::path dataset = InputDir(cfg, "extract.dataset");
  const FeatureConfig fc = FeatureConfig::FromJson(Section(cfg, "features"));
  const fs::path out = ResolveOutDir(opts);
  fs::create_directories(out / "labels");
  const auto manifest = ReadManifest((dataset / "manifest.json").string());
  std::vector<IndexEntry> index(manifest.size());
  ParallelFor(manifest.size(), [&](size_t i) {
    const ManifestEntry& m = manifest[i];
    const LoadedClip clip = LoadClip(dataset, m);
    const FeatureTensor feat = ExtractFeatures(clip.a, clip.b, fc);
    WriteFeatureFile(feat, (out / (m.clip_id + ".sldf")).string());
    WriteLabelCsv(clip.labels, (out / "labels" / (m.clip_id + ".csv")).string());
    index[i] = {m.clip_id,          m.clip_id,
                m.clip_id + ".sldf", "labels/" + m.clip_id + ".csv",
                m.num_label_frames, m.label_hop_samples,
                FeatureHop(fc),     m.scene.sample_rate};
  });
  WriteJson(out / "index.json", IndexToJson(index));
  WriteJson(out / "manifest.json", ManifestToJson(manifest));
  Log(LogLevel::kInfo, "extract: " + std::to_string(manifest.size()) +
                           " clips -> " + out.string());
  EchoConfig(out, "extract",
             {{"extract", {{"dataset", dataset.string()}}},
              {"features", fc.ToJson()}});
}

void CmdAugment(const RunOptions& opts) {
  const json& cfg = opts.config;
  const uint64_t seed = ResolveSeed(opts);
  const fs::path dataset = InputDir(cfg, "augment.dataset");
  json policy_json = Section(cfg, "augment");
  policy_json.erase("dataset");
  const AugmentPolicy policy = AugmentPolicy::FromJson(policy_json);
  if (policy.copies < 1) throw ConfigError("augment.copies must be >= 1");
  const FeatureConfig fc = FeatureConfig::FromJson(Section(cfg, "features"));
  const fs::path out = ResolveOutDir(opts);
  fs::create_directories(out / "labels");
  const auto manifest = ReadManifest((dataset / "manifest.json").string());
  const size_t n = manifest.size();
  const auto& group = RotationGroup();
  std::vector<IndexEntry> index(n * policy.copies);
  ParallelFor(n, [&](size_t i) {
    const ManifestEntry& m = manifest[i];
    const LoadedClip src = LoadClip(dataset, m);
    const RotationElement& rot_b = group.at(m.rotation_b);
    for (int j = 0; j < policy.copies; ++j) {
      Rng rng(MixSeed(MixSeed(seed, i), static_cast<uint64_t>(j)));
      Labeled<FoaClip> a{src.a, src.labels};
      if (policy.rotation) {
        const RotationElement& r = group[rng.UniformInt(0, kRotationGroupSize - 1)];
        a.data = RotateFoa(a.data, r);
        a.labels = RotateLabels(a.labels, r);
      }
      if (policy.waveform_mixup && n > 1) {
        for (int attempt = 0; attempt < policy.mixup_retries; ++attempt) {
          size_t p = static_cast<size_t>(rng.UniformInt(0, static_cast<int>(n) - 2));
          if (p >= i) ++p;
          const double lambda = rng.Beta(policy.mixup_alpha, policy.mixup_alpha);
          const LoadedClip partner = LoadClip(dataset, manifest[p]);
          auto mixed = MixupWaveforms(a, {partner.a, partner.labels}, lambda);
          if (mixed) {
            a = std::move(*mixed);
            break;
          }
        }
      }
      FoaClip b = RotateFoa(a.data, rot_b);
      b.array_id = ArrayId::kB;
      FeatureTensor feat = ExtractFeatures(a.data, b, fc);
      switch (policy.mode) {
        case AugMode::kNone:
          break;
        case AugMode::kSerial:
          feat = SerialCompose(feat, policy.pool, rng);
          break;
        case AugMode::kChains:
          feat = AugmixCompose(feat, policy.pool, policy.augmix, rng);
          break;
      }
      const std::string id = m.clip_id + "_aug" + std::to_string(j);
      WriteFeatureFile(feat, (out / (id + ".sldf")).string());
      WriteLabelCsv(a.labels, (out / "labels" / (id + ".csv")).string());
      index[i * policy.copies + j] = {id, m.clip_id, id + ".sldf",
                                      "labels/" + id + ".csv",
                                      m.num_label_frames, m.label_hop_samples,
                                      FeatureHop(fc), m.scene.sample_rate};
    }
  });
  WriteJson(out / "index.json", IndexToJson(index));
  Log(LogLevel::kInfo, "augment: " + std::to_string(index.size()) +
                           " examples -> " + out.string());
  json resolved_policy = policy.ToJson();
  resolved_policy["dataset"] = dataset.string();
  EchoConfig(out, "augment",
             {{"seed", seed}, {"augment", resolved_policy},
              {"features", fc.ToJson()}});
}

std::vector<TrainExample> SegmentExample(const FeatureTensor& feat,
                                         const TrackwiseSeq& labels,
                                         int segment_frames) {
  if (segment_frames < 4 || segment_frames % 4 != 0) {
    throw ConfigError("segment length must be a positive multiple of 4 frames");
  }
  std::vector<TrainExample> out;
  for (int start = 0; start + 4 <= feat.frames; start += segment_frames) {
    const int len = std::min(segment_frames, feat.frames - start);
    TrainExample ex;
    ex.features = FeatureTensor(feat.layout, feat.bin_scale, len, feat.bins);
    for (int c = 0; c < feat.channels; ++c) {
      for (int t = 0; t < len; ++t) {
        for (int f = 0; f < feat.bins; ++f) {
          ex.features.at(c, t, f) = feat.at(c, start + t, f);
        }
      }
    }
    const int out_frames = ToyNet::OutputFrames(len);
    const int label_start = start / 4;
    const TrackwiseFrame empty(labels.empty() ? kDefaultTracks
                                              : labels.front().num_tracks,
                               labels.empty() ? kDefaultClasses
                                              : labels.front().num_classes);
    for (int t = 0; t < out_frames; ++t) {
      const size_t k = static_cast<size_t>(label_start + t);
      ex.labels.push_back(k < labels.size() ? labels[k] : empty);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void CmdTrain(const RunOptions& opts) {
  const json& cfg = opts.config;
  const uint64_t seed = ResolveSeed(opts);
  const std::vector<fs::path> dirs = PathList(cfg, "train.features");
  const TrainConfig tc = TrainConfig::FromJson(Section(cfg, "train"));
  const fs::path out = ResolveOutDir(opts);

  std::vector<std::pair<IndexEntry, FeatureTensor>> clips;
  std::vector<TrackwiseSeq> clip_labels;
  for (const auto& dir : dirs) {
    for (const auto& e : ReadIndex(dir)) {
      if (e.labels.empty()) {
        throw DataError(e.id + ": training entry without labels");
      }
      if (e.label_hop != 4 * e.feature_hop) {
        throw ConfigError(
            "label hop (" + std::to_string(e.label_hop) +
            " samples) must be 4x the feature hop (" +
            std::to_string(e.feature_hop) + ") for the toy model");
      }
      FeatureTensor feat = ReadFeatureFile((dir / e.features).string());
      clip_labels.push_back(ReadLabelCsv((dir / e.labels).string(),
                                         e.label_frames));
      clips.emplace_back(e, std::move(feat));
    }
  }
  if (clips.empty()) throw DataError("train.features: no training clips");

  json model_json = Section(cfg, "model");
  const FeatureTensor& first = clips.front().second;
  if (!model_json.contains("in_channels")) model_json["in_channels"] = first.channels;
  if (!model_json.contains("in_bins")) model_json["in_bins"] = first.bins;
  const ToyNetConfig mc = ToyNetConfig::FromJson(model_json);

  const IndexEntry& e0 = clips.front().first;
  const int seg = static_cast<int>(tc.segment_s * e0.sample_rate /
                                   e0.feature_hop) / 4 * 4;
  std::vector<TrainExample> data;
  std::vector<const FeatureTensor*> stats;
  for (size_t i = 0; i < clips.size(); ++i) {
    for (auto& ex : SegmentExample(clips[i].second, clip_labels[i], seg)) {
      data.push_back(std::move(ex));
    }
  }
  for (const auto& ex : data) stats.push_back(&ex.features);

  // Validation on the original clips when the source manifest is present.
  std::vector<EvalClip> val;
  for (const auto& dir : dirs) {
    if (!fs::exists(dir / "manifest.json")) continue;
    const auto manifest = ReadManifest((dir / "manifest.json").string());
    for (const auto& [e, feat] : clips) {
      if (e.id != e.source) continue;
      const ManifestEntry* m = FindClip(manifest, e.id);
      if (!m) continue;
      val.push_back({feat, ReferenceEvents(m->scene, m->label_hop_samples,
                                           m->num_label_frames)});
    }
  }

  ToyNet net(mc, MixSeed(seed, 0));
  std::vector<double> mean, stddev;
  ChannelStatistics(stats, &mean, &stddev);
  net.SetInputNormalization(mean, stddev);
  Log(LogLevel::kInfo, "train: " + std::to_string(data.size()) +
                           " segments, " + std::to_string(net.NumParameters()) +
                           " parameters");
  const TrainReport report = Train(net, data, val, tc, MixSeed(seed, 1),
                                   EpochLogger("train", tc.epochs));
  json arch = {{"type", "toynet"},
               {"model", mc.ToJson()},
               {"feature_hop_samples", e0.feature_hop},
               {"label_hop_samples", e0.label_hop}};
  WriteCheckpoint((out / "model.sldm").string(), arch, net.Params());
  WriteText(out / "loss_curve.csv", LossCurveCsv(report, tc));
  json feature_dirs = json::array();
  for (const auto& d : dirs) feature_dirs.push_back(d.string());
  json train_json = tc.ToJson();
  train_json["features"] = feature_dirs;
  EchoConfig(out, "train",
             {{"seed", seed}, {"train", train_json}, {"model", mc.ToJson()}});
}

void CmdPredict(const RunOptions& opts) {
  const json& cfg = opts.config;
  const fs::path ck_path = RequireString(cfg, "predict.checkpoint");
  const fs::path dir = InputDir(cfg, "predict.features");
  const json section = Section(cfg, "predict");
  const double threshold = section.value("sed_threshold", 0.5);
  const fs::path out = ResolveOutDir(opts);
  const Checkpoint ck = ReadCheckpoint(ck_path.string());
  if (ck.arch.value("type", std::string()) != "toynet") {
    throw DataError(ck_path.string() + ": not a toy model checkpoint");
  }
  ToyNet net(ToyNetConfig::FromJson(ck.arch.at("model")), 0);
  net.LoadParams(ck.tensors);
  const auto index = ReadIndex(dir);
  for (const auto& e : index) {
    const FeatureTensor feat = ReadFeatureFile((dir / e.features).string());
    const TrackwiseSeq pred = net.Forward(feat);
    WritePredictionFile((out / (e.id + ".sldp")).string(), {pred});
    WriteText(out / (e.id + "_events.csv"), EventsCsv(Binarize(pred, threshold)));
  }
  Log(LogLevel::kInfo, "predict: " + std::to_string(index.size()) +
                           " clips -> " + out.string());
  EchoConfig(out, "predict",
             {{"predict",
               {{"checkpoint", ck_path.string()},
                {"features", dir.string()},
                {"sed_threshold", threshold}}}});
}

namespace {

// Per clip id, the predictions of all input directories stacked in order.
std::map<std::string, std::vector<TrackwiseSeq>> LoadPredictionSets(
    const std::vector<fs::path>& dirs) {
  std::map<std::string, std::vector<TrackwiseSeq>> sets;
  const auto ids = PredictionIds(dirs.front());
  for (const auto& id : ids) {
    auto& models = sets[id];
    for (const auto& d : dirs) {
      for (auto& s : ReadPredictionFile((d / (id + ".sldp")).string())) {
        models.push_back(std::move(s));
      }
    }
    CheckCompatible(models);
  }
  return sets;
}

std::unique_ptr<EnsembleNet> LoadEnsemble(const fs::path& path) {
  const Checkpoint ck = ReadCheckpoint(path.string());
  if (ck.arch.value("type", std::string()) != "ensemble") {
    throw DataError(path.string() + ": not an ensemble checkpoint");
  }
  auto net = std::make_unique<EnsembleNet>(
      EnsembleNetConfig::FromJson(ck.arch.at("model")), 0);
  net->LoadParams(ck.tensors);
  return net;
}

}  // namespace

void CmdEnsemble(const RunOptions& opts) {
  const json& cfg = opts.config;
  const std::string mode = RequireString(cfg, "ensemble.mode");
  const auto dirs = PathList(cfg, "ensemble.predictions");
  const fs::path out = ResolveOutDir(opts);
  const auto sets = LoadPredictionSets(dirs);
  json resolved = {{"ensemble", Section(cfg, "ensemble")}};
  if (mode == "average") {
    for (const auto& [id, models] : sets) {
      WritePredictionFile((out / (id + ".sldp")).string(),
                          {AverageEnsemble(models)});
    }
  } else if (mode == "apply") {
    const auto net = LoadEnsemble(RequireString(cfg, "ensemble.checkpoint"));
    for (const auto& [id, models] : sets) {
      WritePredictionFile((out / (id + ".sldp")).string(),
                          {net->Forward(BuildEnsembleInput(models))});
    }
  } else if (mode == "train") {
    const uint64_t seed = ResolveSeed(opts);
    const fs::path dataset = InputDir(cfg, "ensemble.dataset");
    const auto manifest = ReadManifest((dataset / "manifest.json").string());
    const TrainConfig tc = TrainConfig::FromJson(Section(cfg, "train"));
    json net_json = Section(cfg, "ensemble");
    const auto& any = sets.begin()->second;
    net_json["num_models"] = static_cast<int>(any.size());
    if (!any.front().empty()) {
      net_json["num_tracks"] = any.front().front().num_tracks;
      net_json["num_classes"] = any.front().front().num_classes;
    }
    const EnsembleNetConfig nc = EnsembleNetConfig::FromJson(net_json);
    std::vector<EnsembleExample> data;
    for (const auto& [id, models] : sets) {
      const ManifestEntry* m = FindClip(manifest, id);
      if (!m) throw DataError(id + ": not in the dataset manifest");
      TrackwiseSeq labels = ReadLabelCsv(
          (dataset / "labels" / (id + ".csv")).string(), m->num_label_frames,
          nc.num_tracks, nc.num_classes);
      labels.resize(std::max(labels.size(), models.front().size()),
                    TrackwiseFrame(nc.num_tracks, nc.num_classes));
      data.push_back({BuildEnsembleInput(models), std::move(labels)});
    }
    EnsembleNet net(nc, MixSeed(seed, 0));
    const TrainReport report = TrainEnsemble(
        net, data, {}, tc, MixSeed(seed, 1), EpochLogger("ensemble", tc.epochs));
    WriteCheckpoint((out / "ensemble.sldm").string(),
                    {{"type", "ensemble"}, {"model", nc.ToJson()}},
                    net.Params());
    WriteText(out / "loss_curve.csv", LossCurveCsv(report, tc));
    resolved["seed"] = seed;
    resolved["train"] = tc.ToJson();
    resolved["model"] = nc.ToJson();
  } else {
    throw ConfigError("ensemble.mode: expected average|train|apply");
  }
  Log(LogLevel::kInfo, "ensemble (" + mode + "): " +
                           std::to_string(sets.size()) + " clips -> " +
                           out.string());
  EchoConfig(out, "ensemble", resolved);
}

void CmdEval(const RunOptions& opts) {
  const json& cfg = opts.config;
  const fs::path preds_dir = InputDir(cfg, "eval.predictions");
  const fs::path dataset = InputDir(cfg, "eval.dataset");
  const json section = Section(cfg, "eval");
  const double threshold = section.value("threshold_m", 1.0);
  const double sed_threshold = section.value("sed_threshold", 0.5);
  std::vector<double> sweep =
      section.value("sweep", std::vector<double>{1.0, 2.0});
  const fs::path out = ResolveOutDir(opts);
  const auto manifest = ReadManifest((dataset / "manifest.json").string());
  std::vector<EventInstance> preds;
  std::vector<EventInstance> refs;
  int offset = 0;
  int clips = 0;
  for (const auto& m : manifest) {
    const fs::path p = preds_dir / (m.clip_id + ".sldp");
    if (!fs::exists(p)) continue;
    const auto models = ReadPredictionFile(p.string());
    if (models.size() != 1) {
      throw DataError(p.string() + ": evaluation expects one model per file");
    }
    const int frames = static_cast<int>(models.front().size());
    for (auto e : PredictionEvents(Binarize(models.front(), sed_threshold))) {
      e.frame += offset;
      preds.push_back(e);
    }
    for (auto e : ReferenceEvents(m.scene, m.label_hop_samples,
                                  std::min(frames, m.num_label_frames))) {
      e.frame += offset;
      refs.push_back(e);
    }
    offset += frames;
    ++clips;
  }
  if (clips == 0) throw DataError("eval: no predictions match the manifest");
  const ScoreReport report = LocationSensitiveFscore(preds, refs, threshold);
  WriteJson(out / "report.json", report.ToJson());
  if (!sweep.empty()) {
    WriteText(out / "sweep.csv",
              FormatSweepCsv(ThresholdSweep(preds, refs, sweep)));
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "eval: %d clips, F(<=%gm) = %.4f", clips,
                threshold, report.f_score);
  Log(LogLevel::kInfo, buf);
  EchoConfig(out, "eval",
             {{"eval",
               {{"predictions", preds_dir.string()},
                {"dataset", dataset.string()},
                {"threshold_m", threshold},
                {"sed_threshold", sed_threshold},
                {"sweep", sweep}}}});
}

TrackwiseSeq SceneLabels(const SceneSpec& scene, int hop_samples) {
  const int frames = static_cast<int>(scene.NumSamples() / hop_samples);
  return LabelFrames(scene, hop_samples, frames, scene.max_overlap);
}

EnsembleGapConfig::EnsembleGapConfig() {
  train.epochs = 20;
  train.batch_size = 4;
  train.lr = 1e-3;
  train.lr_final = 1e-4;
  train.weight_decay = 0.0;
  train.eval_threshold_m = 1.0;
}

EnsembleGapConfig EnsembleGapConfig::FromJson(const json& j) {
  EnsembleGapConfig c;
  c.synth = DatasetConfig::FromJson(Section(j, "synth"));
  const json r = Section(j, "repro");
  c.eval_clips = r.value("eval_clips", c.eval_clips);
  c.train_clips = r.value("train_clips", c.train_clips);
  c.num_models = r.value("num_models", c.num_models);
  c.noise.doa_sigma_rad = r.value("doa_sigma_rad", c.noise.doa_sigma_rad);
  c.noise.sed_on = r.value("sed_on", c.noise.sed_on);
  c.noise.sed_off = r.value("sed_off", c.noise.sed_off);
  c.noise.sed_jitter = r.value("sed_jitter", c.noise.sed_jitter);
  c.noise.permute = r.value("permute", c.noise.permute);
  c.thresholds = r.value("thresholds", c.thresholds);
  json net = Section(j, "ensemble");
  net["num_models"] = c.num_models;
  net["num_tracks"] = c.synth.max_overlap;
  net["num_classes"] = c.synth.num_classes;
  c.net = EnsembleNetConfig::FromJson(net);
  json tj = c.train.ToJson();
  const json train_section = Section(j, "train");  // items() must outlive the loop
  for (const auto& [k, v] : train_section.items()) tj[k] = v;
  c.train = TrainConfig::FromJson(tj);
  if (c.eval_clips < 1 || c.train_clips < 1) {
    throw ConfigError("repro.eval_clips and repro.train_clips must be >= 1");
  }
  if (c.num_models < 2) throw ConfigError("repro.num_models must be >= 2");
  if (c.thresholds.empty()) throw ConfigError("repro.thresholds is empty");
  return c;
}

json EnsembleGapConfig::ToJson() const {
  return {{"synth", synth.ToJson()},
          {"repro",
           {{"eval_clips", eval_clips},
            {"train_clips", train_clips},
            {"num_models", num_models},
            {"doa_sigma_rad", noise.doa_sigma_rad},
            {"sed_on", noise.sed_on},
            {"sed_off", noise.sed_off},
            {"sed_jitter", noise.sed_jitter},
            {"permute", noise.permute},
            {"thresholds", thresholds}}},
          {"ensemble", net.ToJson()},
          {"train", train.ToJson()}};
}

json EnsembleGapResult::ToJson() const {
  auto scores = [](const MethodScores& m) {
    json reports = json::array();
    for (const auto& r : m.reports) reports.push_back(r.ToJson());
    return json{{"method", m.method}, {"reports", reports}};
  };
  json singles_json = json::array();
  for (const auto& s : singles) singles_json.push_back(scores(s));
  return {{"single_predictors", singles_json},
          {"average_ensemble", scores(average)},
          {"trackwise_ensemble", scores(trackwise)},
          {"ensemble_train_loss", training.train_loss}};
}

std::string EnsembleGapResult::FormatTable() const {
  std::string out = "method";
  for (const auto& r : average.reports) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), ",f_score_le_%gm", r.threshold_m);
    out += buf;
  }
  out += "\n";
  for (const MethodScores* m : {&average, &trackwise}) {
    out += m->method;
    for (const auto& r : m->reports) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), ",%.3f", r.f_score);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

namespace {

struct GapSplit {
  std::vector<TrackwiseSeq> labels;
  std::vector<std::vector<EventInstance>> refs;
  std::vector<std::vector<TrackwiseSeq>> predictors;  // [clip][model]
};

GapSplit MakeGapSplit(const EnsembleGapConfig& cfg, uint64_t seed, int count) {
  GapSplit s;
  s.labels.resize(count);
  s.refs.resize(count);
  s.predictors.resize(count);
  const int hop = cfg.synth.label_hop_samples;
  ParallelFor(static_cast<size_t>(count), [&](size_t i) {
    const SceneSpec scene = GenerateScene(cfg.synth, MixSeed(MixSeed(seed, 0), i));
    s.labels[i] = SceneLabels(scene, hop);
    s.refs[i] = ReferenceEvents(scene, hop, static_cast<int>(s.labels[i].size()));
    s.predictors[i] = SynthPermutedPredictors(s.labels[i], cfg.num_models,
                                              cfg.noise, MixSeed(MixSeed(seed, 1), i));
  });
  return s;
}

std::vector<ScoreReport> SweepSequences(
    const std::vector<TrackwiseSeq>& preds,
    const std::vector<std::vector<EventInstance>>& refs,
    const std::vector<double>& thresholds, double sed_threshold) {
  std::vector<EventInstance> all_pred;
  std::vector<EventInstance> all_ref;
  int offset = 0;
  for (size_t c = 0; c < preds.size(); ++c) {
    const int frames = static_cast<int>(preds[c].size());
    for (auto e : PredictionEvents(Binarize(preds[c], sed_threshold))) {
      e.frame += offset;
      all_pred.push_back(e);
    }
    for (auto e : refs[c]) {
      if (e.frame >= frames) continue;
      e.frame += offset;
      all_ref.push_back(e);
    }
    offset += frames;
  }
  return ThresholdSweep(all_pred, all_ref, thresholds);
}

}  // namespace

EnsembleGapResult RunEnsembleGap(const EnsembleGapConfig& cfg, uint64_t seed) {
  const GapSplit eval = MakeGapSplit(cfg, MixSeed(seed, 10), cfg.eval_clips);
  const GapSplit train = MakeGapSplit(cfg, MixSeed(seed, 20), cfg.train_clips);
  const double sed_thr = cfg.train.sed_threshold;
  EnsembleGapResult result;
  for (int i = 0; i < cfg.num_models; ++i) {
    std::vector<TrackwiseSeq> preds;
    for (const auto& p : eval.predictors) preds.push_back(p[i]);
    result.singles.push_back(
        {"Single predictor " + std::to_string(i),
         SweepSequences(preds, eval.refs, cfg.thresholds, sed_thr)});
  }
  std::vector<TrackwiseSeq> averaged;
  for (const auto& p : eval.predictors) averaged.push_back(AverageEnsemble(p));
  result.average = {"Average Ensemble",
                    SweepSequences(averaged, eval.refs, cfg.thresholds, sed_thr)};

  std::vector<EnsembleExample> data;
  for (int i = 0; i < cfg.train_clips; ++i) {
    data.push_back({BuildEnsembleInput(train.predictors[i]), train.labels[i]});
  }
  EnsembleNet net(cfg.net, MixSeed(seed, 30));
  result.training = TrainEnsemble(net, data, {}, cfg.train, MixSeed(seed, 31),
                                  EpochLogger("ensemble", cfg.train.epochs));
  std::vector<TrackwiseSeq> ens;
  for (const auto& p : eval.predictors) ens.push_back(net.Forward(BuildEnsembleInput(p)));
  result.trackwise = {"Track-wise Ensemble",
                      SweepSequences(ens, eval.refs, cfg.thresholds, sed_thr)};
  return result;
}

void CmdReproEnsembleGap(const RunOptions& opts) {
  const uint64_t seed = ResolveSeed(opts);
  const EnsembleGapConfig gc = EnsembleGapConfig::FromJson(opts.config);
  const fs::path out = ResolveOutDir(opts);
  const EnsembleGapResult result = RunEnsembleGap(gc, seed);
  WriteJson(out / "report.json", result.ToJson());
  const std::string table = result.FormatTable();
  WriteText(out / "table.csv", table);
  Log(LogLevel::kInfo, "ensemble gap:\n" + table);
  json resolved = gc.ToJson();
  resolved["seed"] = seed;
  EchoConfig(out, "repro-ensemble-gap", resolved);
}

void RunSubcommand(const std::string& name, const RunOptions& opts) {
  SetLogLevel(opts.config);
  try {
    if (name == "synth") {
      CmdSynth(opts);
    } else if (name == "extract") {
      CmdExtract(opts);
    } else if (name == "augment") {
      CmdAugment(opts);
    } else if (name == "train") {
      CmdTrain(opts);
    } else if (name == "predict") {
      CmdPredict(opts);
    } else if (name == "ensemble") {
      CmdEnsemble(opts);
    } else if (name == "eval") {
      CmdEval(opts);
    } else if (name == "repro-ensemble-gap") {
      CmdReproEnsembleGap(opts);
    } else {
      throw ConfigError("unknown subcommand '" + name + "'");
    }
  } catch (const json::exception& e) {
    // type mismatches inside config tables
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const fs::filesystem_error& e) {
    throw DataError(e.what());
  }
}

}  // namespace seld
