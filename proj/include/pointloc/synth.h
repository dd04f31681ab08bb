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

#ifndef POINTLOC_SYNTH_H_
#define POINTLOC_SYNTH_H_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pointloc/types.h"

namespace pointloc {

enum class PointMode { kUniform, kCenterGaussian };

PointMode ParsePointMode(const std::string& text);
std::string PointModeName(PointMode mode);

struct CorpusConfig {
  int num_videos = 10;
  int t_min = 64;
  int t_max = 128;
  int feature_dim = 32;
  int num_classes = 3;
  int instances_min = 1;
  int instances_max = 4;
  // Instance extent in snippets (t_e - t_s + 1).
  int instance_len_min = 6;
  int instance_len_max = 24;
  // Class and background means are class_separation * (random unit vector).
  double class_separation = 4.0;
  double noise_std = 1.0;
  PointMode point_mode = PointMode::kCenterGaussian;
  std::uint64_t seed = 0;
};

// Throws std::invalid_argument for empty ranges, negative scales, or a
// layout that cannot fit instances_max instances of minimal length (with a
// background snippet between neighbours) into t_min snippets.
void ValidateCorpusConfig(const CorpusConfig& config);
// Keys are the CorpusConfig field names; unknown keys are rejected.
CorpusConfig ParseCorpusConfig(const std::map<std::string, std::string>& kv);

struct Video {
  std::string id;
  FeatureSequence features;
  std::vector<ActionInstance> gt;
  std::vector<PointAnnotation> points;
};

// Per-class and background feature means.
struct FeatureModel {
  Matrix class_means;        // M x D
  RowVector background_mean;  // 1 x D
  double noise_std = 1.0;
};

FeatureModel DrawFeatureModel(const CorpusConfig& config, std::mt19937_64& rng);

// Fills features for a fixed ground-truth layout: action snippets around
// their class mean, everything else around the background mean.
Matrix SynthesizeFeatures(int T, const std::vector<ActionInstance>& gt,
                          const FeatureModel& model, std::mt19937_64& rng);

std::vector<Video> GenerateCorpus(const CorpusConfig& config);

// Exactly one point per instance, sorted by position. Center-gaussian mode
// draws from N(midpoint, (d_g/6)^2) truncated to the instance.
std::vector<PointAnnotation> SamplePointAnnotations(
    const std::vector<ActionInstance>& gt, PointMode mode, std::uint64_t seed);

// Human-readable class labels used for prompt embeddings.
std::vector<std::string> DefaultClassNames(int num_classes);

}  // namespace pointloc

#endif  // POINTLOC_SYNTH_H_
