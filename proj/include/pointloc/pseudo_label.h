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

#ifndef POINTLOC_PSEUDO_LABEL_H_
#define POINTLOC_PSEUDO_LABEL_H_

// Dense pseudo labels from point annotations: a k-medoids clustering in
// which every cluster is a contiguous snippet range holding exactly one
// annotated point, followed by background mining at the cluster ends.

#include <vector>

#include "pointloc/types.h"

namespace pointloc {

// Cosine distance 1 - cos(a, b), in [0, 2]. A zero vector is at distance 1
// from every nonzero vector and 0 from another zero vector.
double CosineDistance(const Eigen::Ref<const RowVector>& a,
                      const Eigen::Ref<const RowVector>& b);

// Symmetric T x T table of CosineDistance between snippet rows.
Matrix DistanceTable(const FeatureSequence& x);

// Best split b in [lo, hi) between a cluster on the left with medoid
// m_left and one on the right with medoid m_right: frames lo..b go left and
// b+1..hi go right. Ties resolve to the smallest b. Throws
// std::invalid_argument on an empty range.
int OptimalSplit(const FeatureSequence& x, int m_left, int m_right, int lo,
                 int hi);
int OptimalSplit(const Matrix& distances, int m_left, int m_right, int lo,
                 int hi);

struct ClusterState {
  // One medoid per annotation.
  std::vector<int> medoids;
  // Cluster i covers (splits[i-1], splits[i]]; the first cluster starts at
  // 0 and the last ends at T - 1, so there are k - 1 splits.
  std::vector<int> splits;
  double objective = 0.0;
  // Objective after each full split + medoid round.
  std::vector<double> history;
  int rounds = 0;
  bool converged = false;

  Interval Cluster(int i, int T) const;
};

// Sum of distances from every snippet to its cluster medoid.
double ClusterObjective(const Matrix& distances, const ClusterState& state);

// Alternates optimal splits (keeping each annotation and medoid inside its
// cluster) with medoid updates (ties toward the annotated frame, then the
// smaller index) until nothing changes or max_iters rounds have run.
// `points` must be nonempty and strictly increasing.
ClusterState ClusterVideo(const FeatureSequence& x,
                          const std::vector<PointAnnotation>& points,
                          int max_iters = 100);

struct PseudoLabelSet {
  // actions[i] is seeded by points[i] and carries its class.
  std::vector<ActionInstance> actions;
  std::vector<ActionInstance> backgrounds;
  int epoch_tag = 0;

  friend bool operator==(const PseudoLabelSet&,
                         const PseudoLabelSet&) = default;
};

// Trims each cluster from both ends while the end frame's distance to the
// medoid exceeds mean + kappa * std of the cluster's distances, never past
// the annotated frame. Trimmed runs (merged when adjacent) are background.
PseudoLabelSet MineBackground(const FeatureSequence& x,
                              const ClusterState& state,
                              const std::vector<PointAnnotation>& points,
                              double kappa = 0.5);

struct PseudoLabelOptions {
  int max_iters = 100;
  double kappa = 0.5;
};

PseudoLabelSet GeneratePseudoLabels(const FeatureSequence& x,
                                    const std::vector<PointAnnotation>& points,
                                    const PseudoLabelOptions& options = {});

// True iff iteration > 0 and iteration is a multiple of every_r.
bool ShouldUpdate(int iteration, int every_r);

}  // namespace pointloc

#endif  // POINTLOC_PSEUDO_LABEL_H_
