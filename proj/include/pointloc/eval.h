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

#ifndef POINTLOC_EVAL_H_
#define POINTLOC_EVAL_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pointloc/io.h"
#include "pointloc/types.h"

namespace pointloc {

// Greedy NMS: keep the best remaining prediction (score, then smaller t_s,
// then smaller t_e) and drop every other with tIoU > threshold against it.
// Input is expected to be a single class; see NmsPerClass otherwise.
std::vector<ScoredPrediction> Nms(std::vector<ScoredPrediction> preds,
                                  double threshold);
std::vector<ScoredPrediction> NmsPerClass(
    const std::vector<ScoredPrediction>& preds, double threshold);

struct GroundTruthRecord {
  std::string video_id;
  ActionInstance instance;
};

std::vector<GroundTruthRecord> GroundTruthRecords(
    const std::vector<VideoAnnotation>& annotations);

// Non-interpolated AP for the predictions and ground truth passed in (the
// caller filters to one class). Predictions are ranked by score, then video
// id, then t_s; a prediction is a true positive if its best-tIoU unmatched
// ground truth in the same video reaches the threshold. Returns nullopt when
// there is no ground truth.
std::optional<double> AveragePrecision(
    const std::vector<VideoPrediction>& preds,
    const std::vector<GroundTruthRecord>& gt, double tiou_threshold);

struct EvalReport {
  std::vector<double> thresholds;
  std::vector<double> map;  // one per threshold
  // class id -> AP at each threshold, for classes with ground truth.
  std::map<int, std::vector<double>> class_ap;
  double average_map = 0.0;
};

// Throws std::invalid_argument on empty thresholds or empty ground truth.
EvalReport Evaluate(const std::vector<VideoPrediction>& preds,
                    const std::vector<GroundTruthRecord>& gt,
                    const std::vector<double>& thresholds);

// [0.5:0.05:0.95]
std::vector<double> ActivityNetThresholds();
// [0.1:0.1:0.7]
std::vector<double> ThumosThresholds();
// "anet" or "thumos".
std::vector<double> ThresholdGrid(const std::string& name);

std::string FormatReportCsv(const EvalReport& report);

}  // namespace pointloc

#endif  // POINTLOC_EVAL_H_
