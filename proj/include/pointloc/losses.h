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

#ifndef POINTLOC_LOSSES_H_
#define POINTLOC_LOSSES_H_

#include <optional>
#include <span>
#include <vector>

#include "pointloc/apn.h"
#include "pointloc/pseudo_label.h"
#include "pointloc/types.h"

namespace pointloc {

inline constexpr double kProbEpsilon = 1e-7;

// [t - r, t + r] with r = round(d_g / 10), clamped to the video. A zero
// radius leaves the single snippet t.
Interval BoundaryRegion(int t, int d_g, int T);

struct BoundaryLabels {
  Vector start;  // 1 inside some starting region, else 0
  Vector end;
};

BoundaryLabels BoundaryLabelsFromPseudo(const PseudoLabelSet& pseudo, int T);

// Class-balanced BCE per sequence, weights T/(2 T+) and T/(2 T-); a side with
// no members is dropped. Returns start loss + end loss. When `grad` is set
// it receives dL/dp for both sequences.
double BdmLoss(const BoundaryProbabilities& probs,
               const BoundaryLabels& labels,
               BoundaryProbabilities* grad = nullptr);

struct ProposalTarget {
  int proposal_index = 0;
  Interval proposal;
  int point_index = 0;
  int class_id = 0;
  Vector class_one_hot;
  double tiou = 0.0;  // with the pseudo instance of the contained point
};

// Keeps proposals containing exactly one point. Throws std::logic_error if
// a point has no pseudo action containing it.
std::vector<ProposalTarget> AssignProposalTargets(
    std::span<const Interval> proposals,
    const std::vector<PointAnnotation>& points, const PseudoLabelSet& pseudo,
    int num_classes);

struct PemPrediction {
  Vector class_probs;
  Vector confidence;
};

struct PemLossGrad {
  std::vector<Vector> class_probs;
  std::vector<Vector> confidence;
};

// Mean over proposals of [class-averaged BCE(c_hat, one-hot) +
// BCE(s_hat[target class], tIoU)]. Empty input yields 0 and a warning.
double PemLoss(std::span<const PemPrediction> preds,
               std::span<const ProposalTarget> targets,
               PemLossGrad* grad = nullptr);

enum class RegionKind { kStart, kEnd, kBackground };

struct RegionFeature {
  RowVector vector;  // unit norm (zero if the region mean is zero)
  double mean_norm = 0.0;
  RegionKind kind = RegionKind::kBackground;
  std::optional<int> class_id;
  int instance = 0;
  Interval range;
};

// Per action: normalized mean over its starting and ending regions; per
// background instance: normalized mean over the whole instance.
std::vector<RegionFeature> RegionFeatures(const Matrix& x,
                                          const PseudoLabelSet& pseudo);
// Back-propagates dL/d(region vector) into grad_x (accumulating).
void RegionFeaturesBackward(const std::vector<RegionFeature>& regions,
                            const std::vector<RowVector>& grad_vectors,
                            Matrix& grad_x);

struct AnchorLoss {
  std::size_t region = 0;  // index into the region list
  double loss = 0.0;
};

// Per-anchor terms: for each class with at least two instances, each start
// (end) anchor against the other starts (ends) of its class as positives and
// every background region as negatives, at temperature tau.
std::vector<AnchorLoss> ContrastiveAnchorLosses(
    const std::vector<RegionFeature>& regions, double tau);

// Sum of the anchor terms. `grad`, when set, is resized to the region count
// and receives dL/d(region vector).
double CtrLoss(const std::vector<RegionFeature>& regions, double tau,
               std::vector<RowVector>* grad = nullptr);

double TotalLoss(double l_bdm, double l_pem, double l_ctr, double lambda1,
                 double lambda2);

}  // namespace pointloc

#endif  // POINTLOC_LOSSES_H_
