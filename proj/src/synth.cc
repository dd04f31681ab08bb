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

#include "pointloc/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <stdexcept>

#include "pointloc/strings.h"

namespace pointloc {

PointMode ParsePointMode(const std::string& text) {
  if (text == "uniform") return PointMode::kUniform;
  if (text == "center-gaussian") return PointMode::kCenterGaussian;
  throw std::invalid_argument("unknown point mode '" + text +
                              "' (expected uniform or center-gaussian)");
}

std::string PointModeName(PointMode mode) {
  return mode == PointMode::kUniform ? "uniform" : "center-gaussian";
}

void ValidateCorpusConfig(const CorpusConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("corpus config: " + what);
  };
  require(c.num_videos >= 1, "num_videos must be >= 1");
  require(c.t_min >= 1 && c.t_min <= c.t_max, "empty T range");
  require(c.feature_dim >= 1, "feature_dim must be >= 1");
  require(c.num_classes >= 1, "num_classes must be >= 1");
  require(c.instances_min >= 1 && c.instances_min <= c.instances_max,
          "empty instances_per_video range");
  require(c.instance_len_min >= 1 && c.instance_len_min <= c.instance_len_max,
          "empty instance length range");
  require(std::isfinite(c.class_separation) && c.class_separation >= 0.0,
          "class_separation must be finite and >= 0");
  require(std::isfinite(c.noise_std) && c.noise_std >= 0.0,
          "noise_std must be finite and >= 0");
  const long long needed =
      static_cast<long long>(c.instances_max) * c.instance_len_min +
      (c.instances_max - 1);
  require(needed <= c.t_min,
          std::to_string(c.instances_max) + " instances of length >= " +
              std::to_string(c.instance_len_min) + " need " +
              std::to_string(needed) + " snippets but t_min is " +
              std::to_string(c.t_min));
}

namespace {

RowVector RandomUnit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RowVector v(dim);
  do {
    for (int d = 0; d < dim; ++d) v(d) = normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

// Places instances left to right with at least one background snippet
// between neighbours; the free snippets are spread over the n + 1 gaps.
std::vector<ActionInstance> DrawLayout(const CorpusConfig& c, int T,
                                       std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count_dist(c.instances_min,
                                                c.instances_max);
  std::uniform_int_distribution<int> len_dist(c.instance_len_min,
                                              c.instance_len_max);
  std::uniform_int_distribution<int> class_dist(0, c.num_classes - 1);
  const int n = count_dist(rng);
  std::vector<int> lengths(static_cast<std::size_t>(n));
  int total = 0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    total = n - 1;
    for (int& len : lengths) {
      len = len_dist(rng);
      total += len;
    }
    if (total <= T) break;
  }
  if (total > T) {
    std::fill(lengths.begin(), lengths.end(), c.instance_len_min);
    total = n * c.instance_len_min + n - 1;
  }
  const int free = T - total;
  // Stars and bars: n cut points in [0, free] split the slack into n+1 gaps.
  std::uniform_int_distribution<int> cut_dist(0, free);
  std::vector<int> cuts(static_cast<std::size_t>(n));
  for (int& cut : cuts) cut = cut_dist(rng);
  std::sort(cuts.begin(), cuts.end());

  std::vector<ActionInstance> gt;
  int cursor = 0;
  int previous_cut = 0;
  for (int i = 0; i < n; ++i) {
    cursor += cuts[static_cast<std::size_t>(i)] - previous_cut;
    previous_cut = cuts[static_cast<std::size_t>(i)];
    if (i > 0) ++cursor;  // mandatory separator
    const int len = lengths[static_cast<std::size_t>(i)];
    gt.push_back({cursor, cursor + len - 1, class_dist(rng)});
    cursor += len;
  }
  return gt;
}

}  // namespace

namespace {

int ConfigInt(const std::string& key, const std::string& value) {
  const auto v = ParseInt(value);
  if (!v) {
    throw std::invalid_argument("corpus config key '" + key +
                                "': bad integer '" + value + "'");
  }
  return static_cast<int>(*v);
}

double ConfigDouble(const std::string& key, const std::string& value) {
  const auto v = ParseDouble(value);
  if (!v) {
    throw std::invalid_argument("corpus config key '" + key +
                                "': bad number '" + value + "'");
  }
  return *v;
}

}  // namespace

CorpusConfig ParseCorpusConfig(const std::map<std::string, std::string>& kv) {
  CorpusConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "num_videos") c.num_videos = ConfigInt(key, value);
    else if (key == "t_min") c.t_min = ConfigInt(key, value);
    else if (key == "t_max") c.t_max = ConfigInt(key, value);
    else if (key == "feature_dim") c.feature_dim = ConfigInt(key, value);
    else if (key == "num_classes") c.num_classes = ConfigInt(key, value);
    else if (key == "instances_min") c.instances_min = ConfigInt(key, value);
    else if (key == "instances_max") c.instances_max = ConfigInt(key, value);
    else if (key == "instance_len_min") c.instance_len_min = ConfigInt(key, value);
    else if (key == "instance_len_max") c.instance_len_max = ConfigInt(key, value);
    else if (key == "class_separation") c.class_separation = ConfigDouble(key, value);
    else if (key == "noise_std") c.noise_std = ConfigDouble(key, value);
    else if (key == "point_mode") c.point_mode = ParsePointMode(value);
    else if (key == "seed") {
      const auto v = ParseInt(value);
      if (!v || *v < 0) {
        throw std::invalid_argument("corpus config key 'seed': bad value '" +
                                    value + "'");
      }
      c.seed = static_cast<std::uint64_t>(*v);
    } else {
      throw std::invalid_argument("unknown corpus config key '" + key + "'");
    }
  }
  ValidateCorpusConfig(c);
  return c;
}

FeatureModel DrawFeatureModel(const CorpusConfig& config,
                              std::mt19937_64& rng) {
  FeatureModel model;
  model.class_means.resize(config.num_classes, config.feature_dim);
  for (int c = 0; c < config.num_classes; ++c) {
    model.class_means.row(c) =
        config.class_separation * RandomUnit(config.feature_dim, rng);
  }
  model.background_mean =
      config.class_separation * RandomUnit(config.feature_dim, rng);
  model.noise_std = config.noise_std;
  return model;
}

Matrix SynthesizeFeatures(int T, const std::vector<ActionInstance>& gt,
                          const FeatureModel& model, std::mt19937_64& rng) {
  const Eigen::Index D = model.class_means.cols();
  Matrix features(T, D);
  for (int t = 0; t < T; ++t) features.row(t) = model.background_mean;
  for (const ActionInstance& inst : gt) {
    ValidateInstance(inst, T);
    for (int t = inst.t_s; t <= inst.t_e; ++t) {
      features.row(t) = model.class_means.row(inst.class_id.value_or(0));
    }
  }
  if (model.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, model.noise_std);
    for (Eigen::Index i = 0; i < features.size(); ++i) {
      features.data()[i] += noise(rng);
    }
  }
  return features;
}

std::vector<Video> GenerateCorpus(const CorpusConfig& config) {
  ValidateCorpusConfig(config);
  std::mt19937_64 rng(config.seed);
  const FeatureModel model = DrawFeatureModel(config, rng);
  std::uniform_int_distribution<int> t_dist(config.t_min, config.t_max);

  std::vector<Video> corpus;
  corpus.reserve(static_cast<std::size_t>(config.num_videos));
  for (int v = 0; v < config.num_videos; ++v) {
    Video video;
    char id[32];
    std::snprintf(id, sizeof(id), "video_%04d", v);
    video.id = id;
    const int T = t_dist(rng);
    video.gt = DrawLayout(config, T, rng);
    video.features = FeatureSequence(SynthesizeFeatures(T, video.gt, model, rng));
    video.points = SamplePointAnnotations(video.gt, config.point_mode, rng());
    corpus.push_back(std::move(video));
  }
  return corpus;
}

std::vector<PointAnnotation> SamplePointAnnotations(
    const std::vector<ActionInstance>& gt, PointMode mode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<PointAnnotation> points;
  points.reserve(gt.size());
  for (const ActionInstance& inst : gt) {
    int t = inst.t_s;
    const int d = inst.t_e - inst.t_s;
    if (d > 0) {
      if (mode == PointMode::kUniform) {
        t = std::uniform_int_distribution<int>(inst.t_s, inst.t_e)(rng);
      } else {
        std::normal_distribution<double> normal(0.5 * (inst.t_s + inst.t_e),
                                                d / 6.0);
        do {
          t = static_cast<int>(std::lround(normal(rng)));
        } while (t < inst.t_s || t > inst.t_e);
      }
    }
    points.push_back({t, inst.class_id.value_or(0)});
  }
  std::sort(points.begin(), points.end(),
            [](const auto& a, const auto& b) { return a.t_p < b.t_p; });
  return points;
}

std::vector<std::string> DefaultClassNames(int num_classes) {
  static const char* const kNames[] = {
      "playing tennis", "diving",         "pole vault",
      "cliff jumping",  "throwing discus", "shot put",
      "cricket bowling", "basketball dunk", "billiards",
      "golf swing",     "volleyball spiking", "soccer penalty"};
  constexpr int kCount = static_cast<int>(std::size(kNames));
  std::vector<std::string> names;
  for (int c = 0; c < num_classes; ++c) {
    std::string name = kNames[c % kCount];
    if (c >= kCount) name += " variant " + std::to_string(c / kCount);
    names.push_back(name);
  }
  return names;
}

}  // namespace pointloc
