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

#include "seld/metrics.h"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>

namespace seld {

namespace {

constexpr int kMaxMatchSide = 16;

using FrameClass = std::pair<int, int>;

std::map<FrameClass, std::vector<EventInstance>> GroupByFrameClass(
    const std::vector<EventInstance>& events) {
  std::map<FrameClass, std::vector<EventInstance>> groups;
  for (const auto& e : events) groups[{e.frame, e.class_id}].push_back(e);
  return groups;
}

}  // namespace

nlohmann::json ScoreReport::ToJson() const {
  return {{"threshold_m", threshold_m}, {"tp", tp},
          {"fp", fp},                   {"fn", fn},
          {"precision", precision},     {"recall", recall},
          {"f_score", f_score}};
}

ScoreReport ScoreReport::FromCounts(double threshold_m, int64_t tp,
                                    int64_t fp, int64_t fn) {
  ScoreReport r;
  r.threshold_m = threshold_m;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  r.f_score = r.precision + r.recall > 0.0
                  ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                  : 0.0;
  return r;
}

double PairDistance(const EventInstance& pred, const EventInstance& ref) {
  if (pred.direction_only && !ref.direction_only) {
    return Distance(Scale(Normalized(pred.position), Norm(ref.position)),
                    ref.position);
  }
  if (ref.direction_only && !pred.direction_only) {
    return Distance(pred.position,
                    Scale(Normalized(ref.position), Norm(pred.position)));
  }
  return Distance(pred.position, ref.position);
}

std::vector<std::pair<int, int>> MatchInstances(
    const std::vector<EventInstance>& preds,
    const std::vector<EventInstance>& refs) {
  const bool swap = preds.size() > refs.size();
  const auto& small = swap ? refs : preds;
  const auto& large = swap ? preds : refs;
  const int ns = static_cast<int>(small.size());
  const int nl = static_cast<int>(large.size());
  if (ns == 0) return {};
  if (nl > kMaxMatchSide) {
    throw DataError("matching: more than " + std::to_string(kMaxMatchSide) +
                    " instances of one class in one frame");
  }
  // dp[i][mask]: cheapest way to assign small[0..i) to the large items in
  // mask (|mask| == i).
  const double inf = std::numeric_limits<double>::infinity();
  const size_t states = size_t{1} << nl;
  std::vector<std::vector<double>> dp(ns + 1, std::vector<double>(states, inf));
  std::vector<std::vector<int>> choice(ns + 1, std::vector<int>(states, -1));
  dp[0][0] = 0.0;
  for (int i = 0; i < ns; ++i) {
    for (size_t mask = 0; mask < states; ++mask) {
      if (dp[i][mask] == inf) continue;
      for (int j = 0; j < nl; ++j) {
        if (mask & (size_t{1} << j)) continue;
        const double d = swap ? PairDistance(large[j], small[i])
                              : PairDistance(small[i], large[j]);
        const size_t next = mask | (size_t{1} << j);
        if (dp[i][mask] + d < dp[i + 1][next]) {
          dp[i + 1][next] = dp[i][mask] + d;
          choice[i + 1][next] = j;
        }
      }
    }
  }
  size_t best = 0;
  for (size_t mask = 0; mask < states; ++mask) {
    if (dp[ns][mask] < dp[ns][best]) best = mask;
  }
  std::vector<std::pair<int, int>> pairs;
  size_t mask = best;
  for (int i = ns; i > 0; --i) {
    const int j = choice[i][mask];
    pairs.push_back(swap ? std::make_pair(j, i - 1) : std::make_pair(i - 1, j));
    mask &= ~(size_t{1} << j);
  }
  std::reverse(pairs.begin(), pairs.end());
  return pairs;
}

ScoreReport LocationSensitiveFscore(const std::vector<EventInstance>& preds,
                                    const std::vector<EventInstance>& refs,
                                    double threshold_m) {
  return ThresholdSweep(preds, refs, {threshold_m}).front();
}

std::vector<ScoreReport> ThresholdSweep(
    const std::vector<EventInstance>& preds,
    const std::vector<EventInstance>& refs,
    const std::vector<double>& thresholds) {
  for (size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0)) {
      throw ConfigError("metric thresholds must be positive");
    }
    if (i > 0 && thresholds[i] < thresholds[i - 1]) {
      throw ConfigError("metric thresholds must be ascending");
    }
  }
  // The matching does not depend on the threshold, so it is computed once
  // and its pair distances are reused for every threshold.
  auto pred_groups = GroupByFrameClass(preds);
  auto ref_groups = GroupByFrameClass(refs);
  std::vector<double> matched;
  for (const auto& [key, group] : pred_groups) {
    const auto it = ref_groups.find(key);
    if (it == ref_groups.end()) continue;
    for (const auto& [p, r] : MatchInstances(group, it->second)) {
      matched.push_back(PairDistance(group[p], it->second[r]));
    }
  }
  std::vector<ScoreReport> reports;
  for (double thr : thresholds) {
    int64_t tp = 0;
    for (double d : matched) tp += d <= thr;
    reports.push_back(ScoreReport::FromCounts(
        thr, tp, static_cast<int64_t>(preds.size()) - tp,
        static_cast<int64_t>(refs.size()) - tp));
  }
  return reports;
}

std::vector<EventInstance> ReferenceEvents(const SceneSpec& scene,
                                           int hop_samples, int num_frames) {
  std::vector<EventInstance> refs;
  const auto active = ActiveEventsPerFrame(scene, hop_samples, num_frames);
  for (int t = 0; t < num_frames; ++t) {
    for (int i : active[t]) {
      const SourceEvent& e = scene.events[i];
      refs.push_back({t, e.class_id, e.position, false});
    }
  }
  return refs;
}

std::vector<EventInstance> PredictionEvents(
    const std::vector<DetectedEvent>& detections) {
  std::vector<EventInstance> out;
  out.reserve(detections.size());
  for (const auto& d : detections) {
    out.push_back({d.frame, d.class_id, d.doa, true});
  }
  return out;
}

std::string FormatSweepCsv(const std::vector<ScoreReport>& reports) {
  std::string out = "threshold_m,tp,fp,fn,precision,recall,f_score\n";
  char buf[200];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof(buf), "%g,%lld,%lld,%lld,%.6f,%.6f,%.6f\n",
                  r.threshold_m, static_cast<long long>(r.tp),
                  static_cast<long long>(r.fp), static_cast<long long>(r.fn),
                  r.precision, r.recall, r.f_score);
    out += buf;
  }
  return out;
}

}  // namespace seld
