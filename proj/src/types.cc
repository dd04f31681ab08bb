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

#include "pointloc/types.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pointloc {

FeatureSequence::FeatureSequence(Matrix data) : data_(std::move(data)) {
  if (data_.rows() == 0) throw std::invalid_argument("T=0 not allowed");
  if (data_.cols() == 0) throw std::invalid_argument("D=0 not allowed");
  for (Eigen::Index t = 0; t < data_.rows(); ++t) {
    for (Eigen::Index d = 0; d < data_.cols(); ++d) {
      if (!std::isfinite(data_(t, d))) {
        throw std::invalid_argument("non-finite feature at row " +
                                    std::to_string(t) + ", column " +
                                    std::to_string(d));
      }
    }
  }
}

double Tiou(const Interval& a, const Interval& b) {
  const double inter =
      std::max(0, std::min(a.t_e, b.t_e) - std::max(a.t_s, b.t_s));
  const double uni = a.length() + b.length() - inter;
  if (uni <= 0.0) return a == b ? 1.0 : 0.0;
  return inter / uni;
}

void ValidatePoints(const std::vector<PointAnnotation>& points, int T,
                    int num_classes) {
  for (size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (p.t_p < 0 || p.t_p >= T) {
      throw std::invalid_argument("point " + std::to_string(i) + ": t_p=" +
                                  std::to_string(p.t_p) +
                                  " outside [0, T=" + std::to_string(T) + ")");
    }
    if (p.class_id < 0 || (num_classes > 0 && p.class_id >= num_classes)) {
      throw std::invalid_argument("point " + std::to_string(i) +
                                  ": class_id " + std::to_string(p.class_id) +
                                  " out of range");
    }
    if (i > 0 && points[i - 1].t_p >= p.t_p) {
      throw std::invalid_argument("points not strictly increasing at index " +
                                  std::to_string(i));
    }
  }
}

void ValidateInstance(const ActionInstance& instance, int T) {
  if (instance.t_s < 0 || instance.t_s > instance.t_e || instance.t_e >= T) {
    throw std::invalid_argument(
        "instance [" + std::to_string(instance.t_s) + ", " +
        std::to_string(instance.t_e) + "] invalid for T=" + std::to_string(T));
  }
}

}  // namespace pointloc
