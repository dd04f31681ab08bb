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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "pointloc/io.h"
#include "pointloc/synth.h"

namespace pointloc {
namespace {

using ::testing::HasSubstr;

std::string TempPath(const std::string& name) {
  return ::testing::TempDir() + "/pointloc_synth_io_" + name;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

template <typename F>
std::string ErrorOf(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

CorpusConfig SmallConfig() {
  CorpusConfig c;
  c.num_videos = 4;
  c.t_min = 40;
  c.t_max = 60;
  c.feature_dim = 6;
  c.num_classes = 3;
  c.instances_min = 1;
  c.instances_max = 3;
  c.seed = 7;
  return c;
}

TEST(SynthTest, SingleFixedInstanceGetsOnePointInside) {
  CorpusConfig config = SmallConfig();
  std::mt19937_64 rng(1);
  const FeatureModel model = DrawFeatureModel(config, rng);
  const std::vector<ActionInstance> gt = {{5, 10, 0}};
  const Matrix f = SynthesizeFeatures(20, gt, model, rng);
  EXPECT_EQ(f.rows(), 20);
  EXPECT_EQ(f.cols(), 6);
  const auto points = SamplePointAnnotations(gt, PointMode::kCenterGaussian, 3);
  ASSERT_EQ(points.size(), 1u);
  EXPECT_GE(points[0].t_p, 5);
  EXPECT_LE(points[0].t_p, 10);
  EXPECT_EQ(points[0].class_id, 0);
}

TEST(SynthTest, OneVideoCorpusWithOneInstance) {
  CorpusConfig config = SmallConfig();
  config.num_videos = 1;
  config.t_min = config.t_max = 20;
  config.instances_min = config.instances_max = 1;
  config.instance_len_min = 6;
  config.instance_len_max = 6;
  const auto corpus = GenerateCorpus(config);
  ASSERT_EQ(corpus.size(), 1u);
  const Video& v = corpus[0];
  EXPECT_EQ(v.features.T(), 20);
  ASSERT_EQ(v.gt.size(), 1u);
  ASSERT_EQ(v.points.size(), 1u);
  EXPECT_EQ(v.gt[0].t_e - v.gt[0].t_s + 1, 6);
  EXPECT_TRUE(v.gt[0].interval().contains(v.points[0].t_p));
  EXPECT_EQ(*v.gt[0].class_id, v.points[0].class_id);
}

TEST(SynthTest, CorpusIsDeterministic) {
  const auto a = GenerateCorpus(SmallConfig());
  const auto b = GenerateCorpus(SmallConfig());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].gt, b[i].gt);
    EXPECT_EQ(a[i].points, b[i].points);
    EXPECT_TRUE(a[i].features.data() == b[i].features.data());
  }
}

TEST(SynthTest, CorpusSatisfiesLayoutInvariants) {
  CorpusConfig config = SmallConfig();
  config.num_videos = 30;
  for (const Video& v : GenerateCorpus(config)) {
    ASSERT_EQ(v.gt.size(), v.points.size());
    EXPECT_GE(v.features.T(), config.t_min);
    EXPECT_LE(v.features.T(), config.t_max);
    for (std::size_t i = 0; i < v.gt.size(); ++i) {
      const auto& g = v.gt[i];
      EXPECT_LE(g.t_s, g.t_e);
      EXPECT_TRUE(g.interval().contains(v.points[i].t_p));
      EXPECT_EQ(*g.class_id, v.points[i].class_id);
      if (i > 0) EXPECT_GE(g.t_s, v.gt[i - 1].t_e + 2) << v.id;
    }
  }
}

TEST(SynthTest, InfeasibleConfigIsRejectedWithDiagnostic) {
  CorpusConfig config = SmallConfig();
  config.t_min = config.t_max = 20;
  config.instances_min = config.instances_max = 4;
  config.instance_len_min = 6;
  const std::string err = ErrorOf([&] { GenerateCorpus(config); });
  EXPECT_THAT(err, HasSubstr("need 27 snippets"));
}

TEST(SynthTest, RejectsNegativeScales) {
  CorpusConfig config = SmallConfig();
  config.noise_std = -1.0;
  EXPECT_THROW(ValidateCorpusConfig(config), std::invalid_argument);
  config = SmallConfig();
  config.class_separation = std::nan("");
  EXPECT_THROW(ValidateCorpusConfig(config), std::invalid_argument);
}

TEST(PointAnnotationTest, SingleSnippetInstance) {
  const auto p = SamplePointAnnotations({{5, 5, 1}}, PointMode::kUniform, 0);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].t_p, 5);
  EXPECT_EQ(p[0].class_id, 1);
}

TEST(PointAnnotationTest, TwoInstancesGiveSortedPoints) {
  const auto p = SamplePointAnnotations({{2, 8, 0}, {12, 30, 2}},
                                        PointMode::kCenterGaussian, 9);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_LT(p[0].t_p, p[1].t_p);
  EXPECT_EQ(p[1].class_id, 2);
}

TEST(PointAnnotationTest, UniformModeFrequencies) {
  std::map<int, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    ++counts[SamplePointAnnotations({{0, 9, 0}}, PointMode::kUniform, i)[0].t_p];
  }
  ASSERT_EQ(counts.size(), 10u);
  for (const auto& [t, n] : counts) {
    EXPECT_NEAR(static_cast<double>(n) / draws, 0.1, 0.01) << "snippet " << t;
  }
}

TEST(PointAnnotationTest, CenterGaussianConcentratesAtMidpoint) {
  const int draws = 100000;
  double sum = 0.0;
  int outer = 0;
  for (int i = 0; i < draws; ++i) {
    const int t =
        SamplePointAnnotations({{0, 60, 0}}, PointMode::kCenterGaussian, i)[0]
            .t_p;
    sum += t;
    if (std::abs(t - 30) > 20) ++outer;
  }
  // std 10, rounded to the nearest snippet and truncated to [0, 60]:
  // |t - 30| > 20 iff |z| >= 2.05, and the support is |z| < 3.05.
  auto two_sided_tail = [](double z) { return std::erfc(z / std::sqrt(2.0)); };
  const double expected = (two_sided_tail(2.05) - two_sided_tail(3.05)) /
                          (1.0 - two_sided_tail(3.05));
  const double std_err = std::sqrt(expected * (1.0 - expected) / draws);
  EXPECT_NEAR(sum / draws, 30.0, 0.2);
  EXPECT_NEAR(static_cast<double>(outer) / draws, expected, 4.0 * std_err);
}

// Nearest-mean snippet classification: means estimated on even-indexed
// videos, accuracy measured on odd-indexed ones.
double NearestMeanAccuracy(double separation, std::uint64_t seed,
                           int* evaluated) {
  CorpusConfig config;
  config.num_videos = 120;
  config.t_min = 64;
  config.t_max = 96;
  config.feature_dim = 16;
  config.num_classes = 3;
  config.class_separation = separation;
  config.noise_std = 1.0;
  config.seed = seed;
  const auto corpus = GenerateCorpus(config);
  Matrix sums = Matrix::Zero(3, 16);
  std::vector<int> counts(3, 0);
  for (std::size_t i = 0; i < corpus.size(); i += 2) {
    for (const auto& g : corpus[i].gt) {
      for (int t = g.t_s; t <= g.t_e; ++t) {
        sums.row(*g.class_id) += corpus[i].features.row(t);
        ++counts[*g.class_id];
      }
    }
  }
  for (int c = 0; c < 3; ++c) sums.row(c) /= counts[c];
  int correct = 0, total = 0;
  for (std::size_t i = 1; i < corpus.size(); i += 2) {
    for (const auto& g : corpus[i].gt) {
      for (int t = g.t_s; t <= g.t_e; ++t) {
        int best = 0;
        double best_d = 1e300;
        for (int c = 0; c < 3; ++c) {
          const double d = (corpus[i].features.row(t) - sums.row(c)).squaredNorm();
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
        correct += best == *g.class_id;
        ++total;
      }
    }
  }
  if (evaluated) *evaluated = total;
  return static_cast<double>(correct) / total;
}

TEST(SeparabilityTest, ZeroSeparationIsChance) {
  int evaluated = 0;
  const double acc = NearestMeanAccuracy(0.0, 11, &evaluated);
  EXPECT_GE(evaluated, 1500);
  EXPECT_NEAR(acc, 1.0 / 3.0, 0.05);
}

TEST(SeparabilityTest, AccuracyNonDecreasingInSeparation) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const double a0 = NearestMeanAccuracy(0.0, seed, nullptr);
    const double a1 = NearestMeanAccuracy(1.0, seed, nullptr);
    const double a4 = NearestMeanAccuracy(4.0, seed, nullptr);
    EXPECT_LE(a0, a1) << "seed " << seed;
    EXPECT_LE(a1, a4) << "seed " << seed;
    EXPECT_GT(a4, 0.95) << "seed " << seed;
  }
}

TEST(MatrixCsvTest, RoundTripIsBitwise) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  Matrix m(7, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng) * 1e3;
  const std::string path = TempPath("roundtrip.csv");
  SaveFeatures(path, FeatureSequence(m));
  EXPECT_TRUE(LoadFeatures(path).data() == m);
}

TEST(MatrixCsvTest, NonNumericCellNamesLocation) {
  const std::string path = TempPath("bad.csv");
  WriteText(path, "1,2,3\n4,x,6\n");
  EXPECT_THAT(ErrorOf([&] { LoadMatrixCsv(path); }),
              HasSubstr("row 2, column 2"));
}

TEST(MatrixCsvTest, RaggedRowNamesLocation) {
  const std::string path = TempPath("ragged.csv");
  WriteText(path, "1,2,3\n4,5\n");
  EXPECT_THAT(ErrorOf([&] { LoadMatrixCsv(path); }), HasSubstr("row 2"));
}

TEST(MatrixCsvTest, EmptyFileIsRejected) {
  const std::string path = TempPath("empty.csv");
  WriteText(path, "");
  EXPECT_THAT(ErrorOf([&] { LoadFeatures(path); }),
              HasSubstr("T=0 not allowed"));
}

TEST(MatrixCsvTest, MissingFileIsReported) {
  EXPECT_THAT(ErrorOf([&] { LoadMatrixCsv(TempPath("nope.csv")); }),
              HasSubstr("cannot open"));
}

TEST(PredictionsTest, SingleRecordRoundTrip) {
  const std::string path = TempPath("one_pred.json");
  SavePredictions(path, {{"video_0001", {0, 10, 2, 0.9}}});
  const auto loaded = LoadPredictions(path);
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded[0].video_id, "video_0001");
  EXPECT_EQ(loaded[0].prediction, (ScoredPrediction{0, 10, 2, 0.9}));
}

TEST(PredictionsTest, EmptyListIsValid) {
  const std::string path = TempPath("empty_pred.json");
  SavePredictions(path, {});
  EXPECT_TRUE(LoadPredictions(path).empty());
}

TEST(PredictionsTest, SavedSortedByVideoThenScore) {
  const std::string path = TempPath("sorted_pred.json");
  SavePredictions(path, {{"b", {0, 1, 0, 0.2}},
                         {"a", {0, 1, 0, 0.1}},
                         {"b", {2, 3, 0, 0.7}},
                         {"a", {2, 3, 1, 0.5}}});
  const auto loaded = LoadPredictions(path);
  ASSERT_EQ(loaded.size(), 4u);
  EXPECT_EQ(loaded[0].video_id, "a");
  EXPECT_DOUBLE_EQ(loaded[0].prediction.score, 0.5);
  EXPECT_DOUBLE_EQ(loaded[1].prediction.score, 0.1);
  EXPECT_EQ(loaded[2].video_id, "b");
  EXPECT_DOUBLE_EQ(loaded[2].prediction.score, 0.7);
}

TEST(PredictionsTest, SchemaViolationsAreDiagnosed) {
  const std::string path = TempPath("bad_pred.json");
  WriteText(path, R"([{"video_id": "a", "t_s": 0, "t_e": 3, "class_id": 0}])");
  EXPECT_THAT(ErrorOf([&] { LoadPredictions(path); }), HasSubstr("score"));
  WriteText(path, R"([{"video_id": "a", "t_s": 5, "t_e": 3, "class_id": 0, "score": 0.5}])");
  EXPECT_THAT(ErrorOf([&] { LoadPredictions(path); }), HasSubstr("t_s > t_e"));
}

TEST(AnnotationsTest, RoundTrip) {
  const std::string path = TempPath("ann.json");
  const std::vector<VideoAnnotation> in = {
      {"v0", 30, {{2, 8, 1}, {15, 20, 0}}, {{5, 1}, {17, 0}}},
      {"v1", 12, {}, {}}};
  SaveAnnotations(path, in);
  const auto out = LoadAnnotations(path);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].video_id, "v0");
  EXPECT_EQ(out[0].T, 30);
  EXPECT_EQ(out[0].gt, in[0].gt);
  EXPECT_EQ(out[0].points, in[0].points);
  EXPECT_EQ(out[1].T, 12);
}

TEST(AnnotationsTest, PointOutsideVideoIsRejected) {
  const std::string path = TempPath("bad_ann.json");
  WriteText(path, R"([{"video_id": "v", "T": 10, "gt": [],
                       "points": [{"t_p": 10, "class_id": 0}]}])");
  EXPECT_THAT(ErrorOf([&] { LoadAnnotations(path); }), HasSubstr("t_p=10"));
}

TEST(DatasetTest, RoundTrip) {
  const std::string dir = TempPath("dataset");
  std::filesystem::remove_all(dir);
  Dataset in{DefaultClassNames(3), GenerateCorpus(SmallConfig())};
  SaveDataset(dir, in);
  const Dataset out = LoadDataset(dir);
  EXPECT_EQ(out.class_names, in.class_names);
  ASSERT_EQ(out.videos.size(), in.videos.size());
  for (std::size_t i = 0; i < in.videos.size(); ++i) {
    EXPECT_EQ(out.videos[i].id, in.videos[i].id);
    EXPECT_EQ(out.videos[i].gt, in.videos[i].gt);
    EXPECT_EQ(out.videos[i].points, in.videos[i].points);
    EXPECT_TRUE(out.videos[i].features.data() == in.videos[i].features.data());
  }
}

TEST(CorpusConfigTest, ParsesKnownKeys) {
  const CorpusConfig c = ParseCorpusConfig({{"num_videos", "7"},
                                            {"t_min", "50"},
                                            {"t_max", "60"},
                                            {"noise_std", "0.25"},
                                            {"point_mode", "uniform"},
                                            {"seed", "12"}});
  EXPECT_EQ(c.num_videos, 7);
  EXPECT_EQ(c.t_min, 50);
  EXPECT_EQ(c.t_max, 60);
  EXPECT_DOUBLE_EQ(c.noise_std, 0.25);
  EXPECT_EQ(c.point_mode, PointMode::kUniform);
  EXPECT_EQ(c.seed, 12u);
}

TEST(CorpusConfigTest, RejectsBadInput) {
  EXPECT_THROW(ParseCorpusConfig({{"videos", "3"}}), std::invalid_argument);
  EXPECT_THROW(ParseCorpusConfig({{"t_min", "ten"}}), std::invalid_argument);
  EXPECT_THROW(ParseCorpusConfig({{"t_min", "90"}, {"t_max", "80"}}),
               std::invalid_argument);
  EXPECT_THROW(ParseCorpusConfig({{"point_mode", "edge"}}),
               std::invalid_argument);
}

TEST(KeyValueFileTest, ParsesCommentsAndWhitespace) {
  const std::string path = TempPath("kv.txt");
  WriteText(path, "# comment\nepochs = 5\n\n  lr=0.001  # trailing\nname value\n");
  const auto kv = LoadKeyValueFile(path);
  EXPECT_EQ(kv.at("epochs"), "5");
  EXPECT_EQ(kv.at("lr"), "0.001");
  EXPECT_EQ(kv.at("name"), "value");
}

}  // namespace
}  // namespace pointloc
