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

#ifndef POINTLOC_IO_H_
#define POINTLOC_IO_H_

// File formats:
//   features CSV      T rows x D comma-separated columns.
//   annotations.json  [{video_id, T, gt: [{t_s, t_e, class_id}],
//                       points: [{t_p, class_id}]}, ...]
//   predictions.json  [{video_id, t_s, t_e, class_id, score}, ...]
//   pseudo.json       annotations.json plus "backgrounds" and "epoch_tag".
//   config files      flat "key = value" lines, '#' starts a comment.
// A dataset directory holds annotations.json, classes.txt (one label per
// line) and features/<video_id>.csv.

#include <map>
#include <string>
#include <vector>

#include "pointloc/pseudo_label.h"
#include "pointloc/synth.h"
#include "pointloc/types.h"

namespace pointloc {

void SaveMatrixCsv(const std::string& path, const Matrix& matrix);
// Errors name the offending 1-based row and column.
Matrix LoadMatrixCsv(const std::string& path);

void SaveFeatures(const std::string& path, const FeatureSequence& features);
FeatureSequence LoadFeatures(const std::string& path);

struct VideoAnnotation {
  std::string video_id;
  int T = 0;
  std::vector<ActionInstance> gt;
  std::vector<PointAnnotation> points;
};

void SaveAnnotations(const std::string& path,
                     const std::vector<VideoAnnotation>& videos);
std::vector<VideoAnnotation> LoadAnnotations(const std::string& path);

struct VideoPrediction {
  std::string video_id;
  ScoredPrediction prediction;

  friend bool operator==(const VideoPrediction&,
                         const VideoPrediction&) = default;
};

// Sorts by video id, then by descending score.
void SortPredictions(std::vector<VideoPrediction>& predictions);
void SavePredictions(const std::string& path,
                     std::vector<VideoPrediction> predictions);
std::vector<VideoPrediction> LoadPredictions(const std::string& path);

struct VideoPseudoLabels {
  VideoAnnotation annotation;
  PseudoLabelSet pseudo;
};
void SavePseudoLabels(const std::string& path,
                      const std::vector<VideoPseudoLabels>& videos);

std::map<std::string, std::string> LoadKeyValueFile(const std::string& path);

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<Video> videos;
};

void SaveDataset(const std::string& dir, const Dataset& dataset);
Dataset LoadDataset(const std::string& dir);

VideoAnnotation AnnotationOf(const Video& video);

}  // namespace pointloc

#endif  // POINTLOC_IO_H_
