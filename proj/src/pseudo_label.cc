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

#include "pointloc/pseudo_label.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pointloc {

double CosineDistance(const Eigen::Ref<const RowVector>& a,
                      const Eigen::Ref<const RowVector>& b) {
  // Plain loops keep the summation order fixed regardless of alignment, so
  // the same pair always yields bit-identical distances.
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += a(i) * b(i);
    na += a(i) * a(i);
    nb += b(i) * b(i);
  }
  if (na == 0.0 || nb == 0.0) return (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
  const double cosine = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return 1.0 - cosine;
}

Matrix DistanceTable(const FeatureSequence& x) {
  const int T = x.T();
  Matrix table(T, T);
  for (int a = 0; a < T; ++a) {
    table(a, a) = CosineDistance(x.row(a), x.row(a));
    for (int b = a + 1; b < T; ++b) {
      table(a, b) = table(b, a) = CosineDistance(x.row(a), x.row(b));
    }
  }
  return table;
}

namespace {

void CheckSplitArgs(int T, int m_left, int m_right, int lo, int hi) {
  if (lo >= hi) {
    throw std::invalid_argument("OptimalSplit: empty range [" +
                                std::to_string(lo) + ", " +
                                std::to_string(hi) + ")");
  }
  if (lo < 0 || hi >= T || m_left < 0 || m_left >= T || m_right < 0 ||
      m_right >= T) {
    throw std::invalid_argument("OptimalSplit: index out of range");
  }
}

// cost(b) = sum_{t=lo..b} left[t-lo] + sum_{t=b+1..hi} right[t-lo].
template <typename LeftFn, typename RightFn>
int ArgminSplit(int lo, int hi, LeftFn left, RightFn right) {
  const int n = hi - lo + 1;
  std::vector<double> suffix(static_cast<std::size_t>(n) + 1, 0.0);
  for (int t = hi; t >= lo; --t) {
    suffix[static_cast<std::size_t>(t - lo)] =
        suffix[static_cast<std::size_t>(t - lo + 1)] + right(t);
  }
  double prefix = 0.0;
  int best = lo;
  double best_cost = 0.0;
  for (int b = lo; b < hi; ++b) {
    prefix += left(b);
    const double cost = prefix + suffix[static_cast<std::size_t>(b - lo + 1)];
    if (b == lo || cost < best_cost) {
      best = b;
      best_cost = cost;
    }
  }
  return best;
}

}  // namespace

int OptimalSplit(const FeatureSequence& x, int m_left, int m_right, int lo,
                 int hi) {
  CheckSplitArgs(x.T(), m_left, m_right, lo, hi);
  return ArgminSplit(
      lo, hi, [&](int t) { return CosineDistance(x.row(t), x.row(m_left)); },
      [&](int t) { return CosineDistance(x.row(t), x.row(m_right)); });
}

int OptimalSplit(const Matrix& distances, int m_left, int m_right, int lo,
                 int hi) {
  CheckSplitArgs(static_cast<int>(distances.rows()), m_left, m_right, lo, hi);
  return ArgminSplit(
      lo, hi, [&](int t) { return distances(t, m_left); },
      [&](int t) { return distances(t, m_right); });
}

Interval ClusterState::Cluster(int i, int T) const {
  const int first = i == 0 ? 0 : splits[static_cast<std::size_t>(i) - 1] + 1;
  const int last = i + 1 == static_cast<int>(medoids.size())
                       ? T - 1
                       : splits[static_cast<std::size_t>(i)];
  return {first, last};
}

namespace {

double MedoidCost(const Matrix& distances, const Interval& cluster,
                  int medoid) {
  double cost = 0.0;
  for (int t = cluster.t_s; t <= cluster.t_e; ++t) cost += distances(t, medoid);
  return cost;
}

}  // namespace

double ClusterObjective(const Matrix& distances, const ClusterState& state) {
  const int T = static_cast<int>(distances.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < state.medoids.size(); ++i) {
    total += MedoidCost(distances, state.Cluster(static_cast<int>(i), T),
                        state.medoids[i]);
  }
  return total;
}

ClusterState ClusterVideo(const FeatureSequence& x,
                          const std::vector<PointAnnotation>& points,
                          int max_iters) {
  if (points.empty()) {
    throw std::invalid_argument("ClusterVideo: no point annotations");
  }
  ValidatePoints(points, x.T(), 0);
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");

  const int T = x.T();
  const int k = static_cast<int>(points.size());
  const Matrix distances = DistanceTable(x);

  ClusterState state;
  for (const auto& p : points) state.medoids.push_back(p.t_p);
  std::vector<int> previous_splits;

  for (int round = 1; round <= max_iters; ++round) {
    const std::vector<int> previous_medoids = state.medoids;

    state.splits.assign(static_cast<std::size_t>(k - 1), 0);
    for (int i = 0; i + 1 < k; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const int lo = std::max(points[u].t_p, state.medoids[u]);
      const int hi = std::min(points[u + 1].t_p, state.medoids[u + 1]);
      state.splits[u] = OptimalSplit(distances, state.medoids[u],
                                     state.medoids[u + 1], lo, hi);
    }

    double objective = 0.0;
    for (int i = 0; i < k; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const Interval cluster = state.Cluster(i, T);
      int best = points[u].t_p;
      double best_cost = MedoidCost(distances, cluster, best);
      for (int m = cluster.t_s; m <= cluster.t_e; ++m) {
        const double cost = MedoidCost(distances, cluster, m);
        if (cost < best_cost) {
          best = m;
          best_cost = cost;
        }
      }
      state.medoids[u] = best;
      objective += best_cost;
    }
    state.objective = objective;
    state.history.push_back(objective);
    state.rounds = round;

    const bool splits_stable = k == 1 || state.splits == previous_splits;
    if (splits_stable && state.medoids == previous_medoids) {
      state.converged = true;
      break;
    }
    previous_splits = state.splits;
  }
  return state;
}

PseudoLabelSet MineBackground(const FeatureSequence& x,
                              const ClusterState& state,
                              const std::vector<PointAnnotation>& points,
                              double kappa) {
  if (state.medoids.size() != points.size()) {
    throw std::invalid_argument("MineBackground: state/point count mismatch");
  }
  const int T = x.T();
  PseudoLabelSet out;
  auto add_background = [&out](int first, int last) {
    if (first > last) return;
    if (!out.backgrounds.empty() && out.backgrounds.back().t_e + 1 == first) {
      out.backgrounds.back().t_e = last;
    } else {
      out.backgrounds.push_back({first, last, std::nullopt});
    }
  };

  for (std::size_t i = 0; i < points.size(); ++i) {
    const Interval cluster = state.Cluster(static_cast<int>(i), T);
    const int medoid = state.medoids[i];
    const int anchor = points[i].t_p;
    const int n = cluster.t_e - cluster.t_s + 1;
    std::vector<double> dist(static_cast<std::size_t>(n));
    double mean = 0.0;
    for (int t = cluster.t_s; t <= cluster.t_e; ++t) {
      const double d = CosineDistance(x.row(t), x.row(medoid));
      dist[static_cast<std::size_t>(t - cluster.t_s)] = d;
      mean += d;
    }
    mean /= n;
    double var = 0.0;
    for (const double d : dist) var += (d - mean) * (d - mean);
    const double threshold = mean + kappa * std::sqrt(var / n);
    auto far = [&](int t) {
      return dist[static_cast<std::size_t>(t - cluster.t_s)] > threshold;
    };

    int first = cluster.t_s;
    while (first < anchor && far(first)) ++first;
    int last = cluster.t_e;
    while (last > anchor && far(last)) --last;

    add_background(cluster.t_s, first - 1);
    out.actions.push_back({first, last, points[i].class_id});
    add_background(last + 1, cluster.t_e);
  }
  return out;
}

PseudoLabelSet GeneratePseudoLabels(const FeatureSequence& x,
                                    const std::vector<PointAnnotation>& points,
                                    const PseudoLabelOptions& options) {
  if (points.empty()) return {};
  const ClusterState state = ClusterVideo(x, points, options.max_iters);
  return MineBackground(x, state, points, options.kappa);
}

bool ShouldUpdate(int iteration, int every_r) {
  if (every_r < 1) throw std::invalid_argument("R must be >= 1");
  return iteration > 0 && iteration % every_r == 0;
}

}  // namespace pointloc
