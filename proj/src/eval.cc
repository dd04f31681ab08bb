// Copyright 2026 The pointloc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pointloc/eval.h"

#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pointloc/strings.h"

namespace pointloc {

namespace {

bool RanksBefore(const ScoredPrediction& a, const ScoredPrediction& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.t_s != b.t_s) return a.t_s < b.t_s;
  return a.t_e < b.t_e;
}

}  // namespace

std::vector<ScoredPrediction> Nms(std::vector<ScoredPrediction> preds,
                                  double threshold) {
  std::stable_sort(preds.begin(), preds.end(), RanksBefore);
  std::vector<ScoredPrediction> kept;
  std::vector<bool> suppressed(preds.size(), false);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (suppressed[i]) continue;
    kept.push_back(preds[i]);
    for (std::size_t j = i + 1; j < preds.size(); ++j) {
      if (!suppressed[j] &&
          Tiou(preds[i].interval(), preds[j].interval()) > threshold) {
        suppressed[j] = true;
      }
    }
  }
  return kept;
}

std::vector<ScoredPrediction> NmsPerClass(
    const std::vector<ScoredPrediction>& preds, double threshold) {
  std::map<int, std::vector<ScoredPrediction>> by_class;
  for (const auto& p : preds) by_class[p.class_id].push_back(p);
  std::vector<ScoredPrediction> out;
  for (auto& [cls, group] : by_class) {
    for (auto& p : Nms(std::move(group), threshold)) out.push_back(p);
  }
  std::stable_sort(out.begin(), out.end(), RanksBefore);
  return out;
}

std::vector<GroundTruthRecord> GroundTruthRecords(
    const std::vector<VideoAnnotation>& annotations) {
  std::vector<GroundTruthRecord> out;
  for (const auto& a : annotations) {
    for (const auto& g : a.gt) out.push_back({a.video_id, g});
  }
  return out;
}

std::optional<double> AveragePrecision(
    const std::vector<VideoPrediction>& preds,
    const std::vector<GroundTruthRecord>& gt, double tiou_threshold) {
  if (gt.empty()) return std::nullopt;

  std::map<std::string, std::vector<std::size_t>> gt_by_video;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    gt_by_video[gt[g].video_id].push_back(g);
  }
  std::vector<const VideoPrediction*> ranked;
  ranked.reserve(preds.size());
  for (const auto& p : preds) ranked.push_back(&p);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const VideoPrediction* a, const VideoPrediction* b) {
                     if (a->prediction.score != b->prediction.score) {
                       return a->prediction.score > b->prediction.score;
                     }
                     if (a->video_id != b->video_id) {
                       return a->video_id < b->video_id;
                     }
                     if (a->prediction.t_s != b->prediction.t_s) {
                       return a->prediction.t_s < b->prediction.t_s;
                     }
                     return a->prediction.t_e < b->prediction.t_e;
                   });

  std::vector<bool> matched(gt.size(), false);
  const double n_gt = static_cast<double>(gt.size());
  double ap = 0.0;
  int true_positives = 0;
  for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
    const VideoPrediction& p = *ranked[rank];
    const auto it = gt_by_video.find(p.video_id);
    if (it == gt_by_video.end()) continue;
    double best = -1.0;
    std::size_t best_gt = 0;
    for (const std::size_t g : it->second) {
      if (matched[g]) continue;
      const double overlap =
          Tiou(p.prediction.interval(), gt[g].instance.interval());
      if (overlap > best) {
        best = overlap;
        best_gt = g;
      }
    }
    if (best >= tiou_threshold) {
      matched[best_gt] = true;
      ++true_positives;
      ap += (1.0 / n_gt) * (true_positives / static_cast<double>(rank + 1));
    }
  }
  return ap;
}

EvalReport Evaluate(const std::vector<VideoPrediction>& preds,
                    const std::vector<GroundTruthRecord>& gt,
                    const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("no tIoU thresholds");
  if (gt.empty()) throw std::invalid_argument("empty ground truth");

  std::map<int, std::vector<GroundTruthRecord>> gt_by_class;
  for (const auto& g : gt) {
    if (g.instance.class_id) gt_by_class[*g.instance.class_id].push_back(g);
  }
  if (gt_by_class.empty()) {
    throw std::invalid_argument("ground truth has no classed instances");
  }
  std::map<int, std::vector<VideoPrediction>> preds_by_class;
  std::set<int> ignored;
  for (const auto& p : preds) {
    if (gt_by_class.count(p.prediction.class_id)) {
      preds_by_class[p.prediction.class_id].push_back(p);
    } else {
      ignored.insert(p.prediction.class_id);
    }
  }
  for (const int c : ignored) {
    std::clog << "eval: class " << c
              << " has no ground truth; its AP is undefined and excluded\n";
  }

  EvalReport report;
  report.thresholds = thresholds;
  for (const double threshold : thresholds) {
    double sum = 0.0;
    for (const auto& [cls, class_gt] : gt_by_class) {
      const double ap =
          AveragePrecision(preds_by_class[cls], class_gt, threshold).value();
      report.class_ap[cls].push_back(ap);
      sum += ap;
    }
    report.map.push_back(sum / static_cast<double>(gt_by_class.size()));
  }
  double total = 0.0;
  for (const double m : report.map) total += m;
  report.average_map = total / static_cast<double>(report.map.size());
  return report;
}

std::vector<double> ActivityNetThresholds() {
  std::vector<double> out;
  for (int i = 0; i < 10; ++i) out.push_back((50 + 5 * i) / 100.0);
  return out;
}

std::vector<double> ThumosThresholds() {
  std::vector<double> out;
  for (int i = 1; i <= 7; ++i) out.push_back(i / 10.0);
  return out;
}

std::vector<double> ThresholdGrid(const std::string& name) {
  if (name == "anet") return ActivityNetThresholds();
  if (name == "thumos") return ThumosThresholds();
  throw std::invalid_argument("unknown threshold grid '" + name +
                              "' (expected anet or thumos)");
}

std::string FormatReportCsv(const EvalReport& report) {
  std::ostringstream out;
  out << "threshold,mAP";
  for (const auto& [cls, aps] : report.class_ap) out << ",AP_class" << cls;
  out << '\n';
  for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
    out << FormatDouble(report.thresholds[i]) << ','
        << FormatDouble(report.map[i]);
    for (const auto& [cls, aps] : report.class_ap) {
      out << ',' << FormatDouble(aps[i]);
    }
    out << '\n';
  }
  out << "average," << FormatDouble(report.average_map) << '\n';
  return out.str();
}

}  // namespace pointloc
