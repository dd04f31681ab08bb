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

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "gradient_scenario.h"
#include "pointloc/losses.h"

namespace pointloc {
namespace {

using testing_util::LossPath;

RowVector Unit(int dim, int axis) {
  RowVector v = RowVector::Zero(dim);
  v(axis) = 1.0;
  return v;
}

RegionFeature Region(RowVector v, RegionKind kind, std::optional<int> cls,
                     int instance) {
  RegionFeature r;
  r.mean_norm = v.norm();
  r.vector = v / v.norm();
  r.kind = kind;
  r.class_id = cls;
  r.instance = instance;
  return r;
}

TEST(BoundaryLabelsTest, RegionAroundStart) {
  PseudoLabelSet p;
  p.actions = {{10, 20, 0}};
  const BoundaryLabels l = BoundaryLabelsFromPseudo(p, 30);
  for (int t = 0; t < 30; ++t) {
    EXPECT_EQ(l.start(t), (t >= 9 && t <= 11) ? 1.0 : 0.0) << t;
    EXPECT_EQ(l.end(t), (t >= 19 && t <= 21) ? 1.0 : 0.0) << t;
  }
}

TEST(BoundaryLabelsTest, EmptyPseudoGivesZeros) {
  const BoundaryLabels l = BoundaryLabelsFromPseudo({}, 12);
  EXPECT_TRUE(l.start.isZero(0.0));
  EXPECT_TRUE(l.end.isZero(0.0));
}

TEST(BoundaryLabelsTest, ShortInstanceStillMarksOneSnippet) {
  PseudoLabelSet p;
  p.actions = {{4, 6, 0}};
  const BoundaryLabels l = BoundaryLabelsFromPseudo(p, 10);
  EXPECT_EQ(l.start.sum(), 1.0);
  EXPECT_EQ(l.start(4), 1.0);
}

TEST(BoundaryLabelsTest, OverlappingRegionsUnion) {
  PseudoLabelSet p;
  p.actions = {{0, 20, 0}, {21, 41, 1}};
  const BoundaryLabels l = BoundaryLabelsFromPseudo(p, 50);
  // End region of the first [18, 22] and start region of the second
  // [19, 23] live in different sequences; starts of both are disjoint.
  EXPECT_EQ(l.start.sum(), 3.0 + 5.0);
  EXPECT_TRUE((l.start.array() <= 1.0).all());
  EXPECT_EQ(l.end(20), 1.0);
}

TEST(BdmLossTest, UniformHalfGivesTwoLogTwo) {
  BoundaryProbabilities p{Vector::Constant(10, 0.5), Vector::Constant(10, 0.5)};
  BoundaryLabels l{Vector::Zero(10), Vector::Zero(10)};
  l.start(2) = l.start(3) = 1.0;
  l.end(7) = 1.0;
  EXPECT_NEAR(BdmLoss(p, l), 2.0 * std::log(2.0), 1e-12);
}

TEST(BdmLossTest, PerfectPredictorNearZero) {
  BoundaryLabels l{Vector::Zero(10), Vector::Zero(10)};
  l.start(2) = 1.0;
  l.end(8) = 1.0;
  BoundaryProbabilities p{l.start, l.end};
  EXPECT_LE(BdmLoss(p, l), 1e-5);
}

TEST(BdmLossTest, AllNegativeSequenceDropsPositiveTerm) {
  BoundaryProbabilities p{Vector::Constant(4, 0.5), Vector::Constant(4, 0.5)};
  BoundaryLabels l{Vector::Zero(4), Vector::Zero(4)};
  EXPECT_NEAR(BdmLoss(p, l), 2.0 * 0.5 * std::log(2.0), 1e-12);
}

TEST(AssignTargetsTest, FiltersByPointCount) {
  PseudoLabelSet p;
  p.actions = {{5, 15, 1}, {20, 30, 0}};
  const std::vector<PointAnnotation> points = {{10, 1}, {25, 0}};
  const std::vector<Interval> proposals = {{0, 3}, {5, 15}, {8, 27}, {22, 35}};
  const auto targets = AssignProposalTargets(proposals, points, p, 2);
  ASSERT_EQ(targets.size(), 2u);
  EXPECT_EQ(targets[0].proposal_index, 1);
  EXPECT_EQ(targets[0].class_id, 1);
  EXPECT_DOUBLE_EQ(targets[0].tiou, 1.0);
  EXPECT_EQ(targets[0].class_one_hot, (Vector(2) << 0.0, 1.0).finished());
  EXPECT_EQ(targets[1].proposal_index, 3);
  EXPECT_EQ(targets[1].point_index, 1);
  EXPECT_DOUBLE_EQ(targets[1].tiou, Tiou({22, 35}, {20, 30}));
}

TEST(AssignTargetsTest, MissingPseudoInstanceIsInternalError) {
  PseudoLabelSet p;
  p.actions = {{0, 4, 0}};
  const std::vector<Interval> proposals = {{5, 15}};
  EXPECT_THROW(AssignProposalTargets(proposals, {{10, 0}}, p, 1),
               std::logic_error);
}

ProposalTarget Target(int cls, int num_classes, double tiou) {
  ProposalTarget t;
  t.class_id = cls;
  t.class_one_hot = Vector::Zero(num_classes);
  t.class_one_hot(cls) = 1.0;
  t.tiou = tiou;
  return t;
}

TEST(PemLossTest, AnalyticHalfCase) {
  const std::vector<PemPrediction> preds = {
      {Vector::Constant(2, 0.5), Vector::Constant(2, 0.5)}};
  const std::vector<ProposalTarget> targets = {Target(0, 2, 1.0)};
  EXPECT_NEAR(PemLoss(preds, targets), 2.0 * std::log(2.0), 1e-12);
}

TEST(PemLossTest, MatchingPredictionNearZero) {
  Vector c(3);
  c << 0.0, 1.0, 0.0;
  Vector s(3);
  s << 0.3, 1.0, 0.2;
  const std::vector<PemPrediction> preds = {{c, s}};
  const std::vector<ProposalTarget> targets = {Target(1, 3, 1.0)};
  EXPECT_LE(PemLoss(preds, targets), 1e-5);
}

TEST(PemLossTest, EmptyInputIsZero) {
  EXPECT_EQ(PemLoss({}, {}), 0.0);
}

TEST(PemLossTest, DecreasesTowardTargets) {
  const std::vector<ProposalTarget> targets = {Target(2, 3, 0.6)};
  double previous = 1e300;
  for (double a : {0.0, 0.5, 0.9, 0.99}) {
    Vector c = Vector::Constant(3, 0.5 * (1 - a));
    c(2) = 0.5 + 0.5 * a;
    Vector s = Vector::Constant(3, 0.5);
    s(2) = 0.5 + 0.1 * a;
    const double loss = PemLoss(std::vector<PemPrediction>{{c, s}}, targets);
    EXPECT_LT(loss, previous);
    previous = loss;
  }
}

TEST(RegionFeaturesTest, CountsAndNormalisation) {
  Matrix x = Matrix::Zero(30, 3);
  for (int t = 0; t < 30; ++t) x.row(t) << 2.0, 0.0, 0.0;
  PseudoLabelSet p;
  p.actions = {{2, 8, 0}, {15, 25, 1}};
  p.backgrounds = {{10, 13, std::nullopt}};
  const auto regions = RegionFeatures(x, p);
  ASSERT_EQ(regions.size(), 5u);
  EXPECT_EQ(regions[0].kind, RegionKind::kStart);
  EXPECT_EQ(regions[1].kind, RegionKind::kEnd);
  EXPECT_EQ(regions[4].kind, RegionKind::kBackground);
  EXPECT_FALSE(regions[4].class_id.has_value());
  for (const auto& r : regions) EXPECT_TRUE(r.vector.isApprox(Unit(3, 0)));
}

TEST(RegionFeaturesTest, ShortInstanceUsesSingleSnippet) {
  PseudoLabelSet p;
  p.actions = {{5, 7, 0}};
  const auto regions = RegionFeatures(Matrix::Ones(10, 2), p);
  EXPECT_EQ(regions[0].range, (Interval{5, 5}));
  EXPECT_EQ(regions[1].range, (Interval{7, 7}));
}

TEST(CtrLossTest, ZeroWithoutRepeatedClass) {
  std::vector<RegionFeature> regions = {
      Region(Unit(3, 0), RegionKind::kStart, 0, 0),
      Region(Unit(3, 1), RegionKind::kEnd, 0, 0),
      Region(Unit(3, 0), RegionKind::kStart, 1, 1),
      Region(Unit(3, 1), RegionKind::kEnd, 1, 1),
      Region(Unit(3, 2), RegionKind::kBackground, std::nullopt, 0)};
  EXPECT_EQ(CtrLoss(regions, 0.1), 0.0);
  EXPECT_TRUE(ContrastiveAnchorLosses(regions, 0.1).empty());
}

TEST(CtrLossTest, ZeroWithoutBackground) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<RegionFeature> regions;
  for (int i = 0; i < 3; ++i) {
    RowVector a(4), b(4);
    for (int d = 0; d < 4; ++d) {
      a(d) = normal(rng);
      b(d) = normal(rng);
    }
    regions.push_back(Region(a, RegionKind::kStart, 0, i));
    regions.push_back(Region(b, RegionKind::kEnd, 0, i));
  }
  const auto terms = ContrastiveAnchorLosses(regions, 0.1);
  EXPECT_EQ(terms.size(), 6u);
  for (const auto& t : terms) EXPECT_NEAR(t.loss, 0.0, 1e-15);
  EXPECT_NEAR(CtrLoss(regions, 0.1), 0.0, 1e-14);
}

TEST(CtrLossTest, IdenticalAnchorsOrthogonalBackground) {
  std::vector<RegionFeature> regions = {
      Region(Unit(3, 0), RegionKind::kStart, 0, 0),
      Region(Unit(3, 0), RegionKind::kStart, 0, 1),
      Region(Unit(3, 1), RegionKind::kBackground, std::nullopt, 0)};
  const double expected = std::log1p(std::exp(-10.0));
  const auto terms = ContrastiveAnchorLosses(regions, 0.1);
  ASSERT_EQ(terms.size(), 2u);
  for (const auto& t : terms) EXPECT_NEAR(t.loss, expected, 1e-12);
  EXPECT_NEAR(CtrLoss(regions, 0.1), 2.0 * expected, 1e-12);
}

TEST(CtrLossTest, StartsAndEndsContrastSeparately) {
  // The end anchors would score differently if starts were positives.
  std::vector<RegionFeature> regions = {
      Region(Unit(3, 0), RegionKind::kStart, 0, 0),
      Region(Unit(3, 0), RegionKind::kStart, 0, 1),
      Region(Unit(3, 2), RegionKind::kEnd, 0, 0),
      Region(Unit(3, 2), RegionKind::kEnd, 0, 1),
      Region(Unit(3, 1), RegionKind::kBackground, std::nullopt, 0)};
  const double expected = std::log1p(std::exp(-10.0));
  for (const auto& t : ContrastiveAnchorLosses(regions, 0.1)) {
    EXPECT_NEAR(t.loss, expected, 1e-12);
  }
}

TEST(CtrLossTest, NonNegativeAndOrderInvariantWithBackground) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  auto random = [&] {
    RowVector v(5);
    for (int d = 0; d < 5; ++d) v(d) = normal(rng);
    return v;
  };
  std::vector<RegionFeature> regions;
  for (int i = 0; i < 4; ++i) {
    regions.push_back(Region(random(), RegionKind::kStart, i % 2, i));
    regions.push_back(Region(random(), RegionKind::kEnd, i % 2, i));
  }
  regions.push_back(Region(random(), RegionKind::kBackground, std::nullopt, 0));
  regions.push_back(Region(random(), RegionKind::kBackground, std::nullopt, 1));
  const double loss = CtrLoss(regions, 0.1);
  for (const auto& t : ContrastiveAnchorLosses(regions, 0.1)) EXPECT_GE(t.loss, 0.0);
  std::vector<RegionFeature> shuffled = regions;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_NEAR(CtrLoss(shuffled, 0.1), loss, 1e-12);
  std::reverse(shuffled.begin(), shuffled.end());
  EXPECT_NEAR(CtrLoss(shuffled, 0.1), loss, 1e-12);
}

TEST(CtrLossTest, LargeLogitsStayFinite) {
  std::vector<RegionFeature> regions = {
      Region(Unit(2, 0), RegionKind::kStart, 0, 0),
      Region(-Unit(2, 0), RegionKind::kStart, 0, 1),
      Region(Unit(2, 0), RegionKind::kBackground, std::nullopt, 0)};
  const double loss = CtrLoss(regions, 1e-3);
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_GT(loss, 1000.0);
}

TEST(TotalLossTest, WeightedSum) {
  EXPECT_DOUBLE_EQ(TotalLoss(1, 2, 3, 1, 0.1), 3.3);
  EXPECT_DOUBLE_EQ(TotalLoss(1, 2, 3, 1, 0.0), TotalLoss(1, 2, 99, 1, 0.0));
}

class ModelGradientTest
    : public ::testing::TestWithParam<std::tuple<LossPath, int>> {};

TEST_P(ModelGradientTest, MatchesFiniteDifferences) {
  const auto [path, seed] = GetParam();
  EXPECT_LE(testing_util::ModelGradientError(path, seed), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(
    PathsAndSeeds, ModelGradientTest,
    ::testing::Combine(::testing::Values(LossPath::kBdm, LossPath::kPem,
                                         LossPath::kCtr, LossPath::kTotal),
                       ::testing::Range(1, 6)),
    [](const auto& info) {
      return std::string(testing_util::LossPathName(std::get<0>(info.param))) +
             "_seed" + std::to_string(std::get<1>(info.param));
    });

}  // namespace
}  // namespace pointloc
