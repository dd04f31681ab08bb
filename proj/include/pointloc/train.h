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

#ifndef POINTLOC_TRAIN_H_
#define POINTLOC_TRAIN_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pointloc/apn.h"
#include "pointloc/eval.h"
#include "pointloc/losses.h"
#include "pointloc/pseudo_label.h"
#include "pointloc/synth.h"

namespace pointloc {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double lr = 1e-4;
  double lambda1 = 1.0;
  double lambda2 = 0.1;
  double tau = 0.1;
  int num_samples = 32;   // N
  int update_every = 10;  // R
  int d_min = 1;
  int d_max = 0;  // 0 means the video length
  double nms_threshold = 0.5;
  std::uint64_t seed = 0;

  int embed_dim = 64;
  int hidden_dim = 64;
  double confidence_temperature = 0.2;
  double kappa = 0.5;
  int cluster_max_iters = 100;
  double peak_ratio = 0.5;
  // PEM training proposals per video; larger sets are evenly subsampled.
  int max_train_proposals = 128;
  Interpolation interpolation = Interpolation::kLinear;
  bool cross_class_nms = false;
  bool multi_class_emission = false;
  std::string class_embeddings_file;
};

// Throws std::invalid_argument naming the first bad field.
void ValidateTrainConfig(const TrainConfig& config);
// Keys are the field names above; N and R are accepted for num_samples and
// update_every. Unknown keys are an error.
TrainConfig ParseTrainConfig(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> TrainConfigToMap(const TrainConfig& config);

struct LossBreakdown {
  double bdm = 0.0;
  double pem = 0.0;
  double ctr = 0.0;
  double total = 0.0;
  int num_targets = 0;
};

// Training proposals for one video: BDM candidates paired under the duration
// bounds, filtered to those holding exactly one point.
std::vector<ProposalTarget> TrainingTargets(const ApnModel& model,
                                            const Matrix& features,
                                            const std::vector<PointAnnotation>& points,
                                            const PseudoLabelSet& pseudo,
                                            const TrainConfig& config);

// Full objective for one video with fixed pseudo labels and targets. When
// grad_scale > 0, parameter gradients of grad_scale * total accumulate in
// the model. Throws std::runtime_error naming `video_id` and the loss
// component if a loss is not finite.
LossBreakdown VideoObjective(ApnModel& model, const Matrix& features,
                             const PseudoLabelSet& pseudo,
                             std::span<const ProposalTarget> targets,
                             const TrainConfig& config, double grad_scale,
                             const std::string& video_id = "");

struct EpochLog {
  int epoch = 0;
  int iter = 0;
  double l_bdm = 0.0;
  double l_pem = 0.0;
  double l_ctr = 0.0;
  double total = 0.0;
  double pseudo_map50 = 0.0;  // NaN without ground truth
};

struct PseudoUpdate {
  int iter = 0;
  double map50 = 0.0;
};

struct TrainResult {
  ApnModel model;
  std::vector<EpochLog> log;
  // Initial labels (iter 0) followed by every progressive update.
  std::vector<PseudoUpdate> pseudo_history;
  std::vector<PseudoLabelSet> pseudo;
};

TrainResult Train(const std::vector<Video>& corpus,
                  const std::vector<std::string>& class_names,
                  const TrainConfig& config);

std::vector<PseudoLabelSet> GenerateCorpusPseudoLabels(
    const ApnModel& model, const std::vector<Video>& corpus,
    const TrainConfig& config, int epoch_tag);

// mAP of pseudo actions (as unit-score predictions) against ground truth;
// NaN if the corpus has no ground truth.
double PseudoLabelMap(const std::vector<Video>& corpus,
                      const std::vector<PseudoLabelSet>& pseudo,
                      double tiou_threshold = 0.5);

std::vector<ScoredPrediction> Infer(const ApnModel& model,
                                    const FeatureSequence& features,
                                    const TrainConfig& config);

std::vector<VideoPrediction> InferCorpus(const ApnModel& model,
                                         const std::vector<Video>& corpus,
                                         const TrainConfig& config);

void SaveCheckpoint(const std::string& path, ApnModel& model,
                    const TrainConfig& config);

struct LoadedCheckpoint {
  ApnModel model;
  TrainConfig config;
};
LoadedCheckpoint LoadCheckpoint(const std::string& path);

void WriteMetricsCsv(const std::string& path, const std::vector<EpochLog>& log);

}  // namespace pointloc

#endif  // POINTLOC_TRAIN_H_
