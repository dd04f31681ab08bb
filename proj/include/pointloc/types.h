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

#ifndef POINTLOC_TYPES_H_
#define POINTLOC_TYPES_H_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pointloc {

// Row-major so that one row is one snippet.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// T x D per-snippet features. Used both for the raw features and for their
// embedded form.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  // Throws std::invalid_argument if T or D is zero or an entry is not finite.
  explicit FeatureSequence(Matrix data);

  const Matrix& data() const { return data_; }
  int T() const { return static_cast<int>(data_.rows()); }
  int D() const { return static_cast<int>(data_.cols()); }
  auto row(int t) const { return data_.row(t); }

 private:
  Matrix data_;
};

struct PointAnnotation {
  int t_p = 0;
  int class_id = 0;

  friend bool operator==(const PointAnnotation&,
                         const PointAnnotation&) = default;
};

// Closed snippet range [t_s, t_e]. Its length for overlap purposes is
// t_e - t_s.
struct Interval {
  int t_s = 0;
  int t_e = 0;

  int length() const { return t_e - t_s; }
  bool contains(int t) const { return t_s <= t && t <= t_e; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Ground-truth, pseudo-label or background span. Background has no class.
struct ActionInstance {
  int t_s = 0;
  int t_e = 0;
  std::optional<int> class_id;

  Interval interval() const { return {t_s, t_e}; }
  bool is_background() const { return !class_id.has_value(); }
  friend bool operator==(const ActionInstance&,
                         const ActionInstance&) = default;
};

struct ScoredPrediction {
  int t_s = 0;
  int t_e = 0;
  int class_id = 0;
  double score = 0.0;

  Interval interval() const { return {t_s, t_e}; }
  friend bool operator==(const ScoredPrediction&,
                         const ScoredPrediction&) = default;
};

// Temporal IoU with half-open length (t_e - t_s). Identical zero-length
// intervals give 1, any other zero-union pair gives 0.
double Tiou(const Interval& a, const Interval& b);

// Throws std::invalid_argument describing the first violated invariant.
void ValidatePoints(const std::vector<PointAnnotation>& points, int T,
                    int num_classes);
void ValidateInstance(const ActionInstance& instance, int T);

}  // namespace pointloc

#endif  // POINTLOC_TYPES_H_
