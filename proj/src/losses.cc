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

#include "pointloc/losses.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace pointloc {

Interval BoundaryRegion(int t, int d_g, int T) {
  const int radius = static_cast<int>(std::lround(d_g / 10.0));
  return {std::max(0, t - radius), std::min(T - 1, t + radius)};
}

BoundaryLabels BoundaryLabelsFromPseudo(const PseudoLabelSet& pseudo, int T) {
  BoundaryLabels labels{Vector::Zero(T), Vector::Zero(T)};
  for (const ActionInstance& a : pseudo.actions) {
    const int d_g = a.t_e - a.t_s;
    const Interval rs = BoundaryRegion(a.t_s, d_g, T);
    const Interval re = BoundaryRegion(a.t_e, d_g, T);
    for (int t = rs.t_s; t <= rs.t_e; ++t) labels.start(t) = 1.0;
    for (int t = re.t_s; t <= re.t_e; ++t) labels.end(t) = 1.0;
  }
  return labels;
}

namespace {

double ClampProb(double p) {
  return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

bool IsClamped(double p) {
  return p < kProbEpsilon || p > 1.0 - kProbEpsilon;
}

// -[q log p + (1 - q) log(1 - p)] with p clamped.
double Bce(double p, double q) {
  const double c = ClampProb(p);
  return -(q * std::log(c) + (1.0 - q) * std::log(1.0 - c));
}

double BceGrad(double p, double q) {
  if (IsClamped(p)) return 0.0;
  return -q / p + (1.0 - q) / (1.0 - p);
}

double BalancedBce(const Vector& p, const Vector& g, Vector* grad) {
  const Eigen::Index T = p.size();
  if (g.size() != T) throw std::invalid_argument("BdmLoss: length mismatch");
  Eigen::Index positives = 0;
  for (Eigen::Index t = 0; t < T; ++t) positives += g(t) > 0.5 ? 1 : 0;
  const Eigen::Index negatives = T - positives;
  const double w_pos =
      positives > 0 ? static_cast<double>(T) / (2.0 * positives) : 0.0;
  const double w_neg =
      negatives > 0 ? static_cast<double>(T) / (2.0 * negatives) : 0.0;
  if (grad) grad->setZero(T);
  double loss = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const double c = ClampProb(p(t));
    if (g(t) > 0.5) {
      loss -= w_pos * std::log(c);
      if (grad && !IsClamped(p(t))) (*grad)(t) = -w_pos / (p(t) * T);
    } else {
      loss -= w_neg * std::log(1.0 - c);
      if (grad && !IsClamped(p(t))) (*grad)(t) = w_neg / ((1.0 - p(t)) * T);
    }
  }
  return loss / static_cast<double>(T);
}

}  // namespace

double BdmLoss(const BoundaryProbabilities& probs,
               const BoundaryLabels& labels, BoundaryProbabilities* grad) {
  return BalancedBce(probs.start, labels.start, grad ? &grad->start : nullptr) +
         BalancedBce(probs.end, labels.end, grad ? &grad->end : nullptr);
}

std::vector<ProposalTarget> AssignProposalTargets(
    std::span<const Interval> proposals,
    const std::vector<PointAnnotation>& points, const PseudoLabelSet& pseudo,
    int num_classes) {
  std::vector<ProposalTarget> out;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const Interval& prop = proposals[i];
    int inside = 0;
    int which = -1;
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (prop.contains(points[p].t_p)) {
        ++inside;
        which = static_cast<int>(p);
      }
    }
    if (inside != 1) continue;
    const PointAnnotation& point = points[static_cast<std::size_t>(which)];
    const ActionInstance* seeded = nullptr;
    if (static_cast<std::size_t>(which) < pseudo.actions.size() &&
        pseudo.actions[static_cast<std::size_t>(which)].interval().contains(
            point.t_p)) {
      seeded = &pseudo.actions[static_cast<std::size_t>(which)];
    } else {
      for (const auto& a : pseudo.actions) {
        if (a.interval().contains(point.t_p)) seeded = &a;
      }
    }
    if (!seeded) {
      throw std::logic_error("point at t=" + std::to_string(point.t_p) +
                             " has no pseudo action instance");
    }
    if (point.class_id < 0 || point.class_id >= num_classes) {
      throw std::logic_error("point class out of range");
    }
    ProposalTarget target;
    target.proposal_index = static_cast<int>(i);
    target.proposal = prop;
    target.point_index = which;
    target.class_id = point.class_id;
    target.class_one_hot = Vector::Zero(num_classes);
    target.class_one_hot(point.class_id) = 1.0;
    target.tiou = Tiou(prop, seeded->interval());
    out.push_back(std::move(target));
  }
  return out;
}

double PemLoss(std::span<const PemPrediction> preds,
               std::span<const ProposalTarget> targets, PemLossGrad* grad) {
  if (preds.size() != targets.size()) {
    throw std::invalid_argument("PemLoss: predictions and targets differ in size");
  }
  if (grad) {
    grad->class_probs.clear();
    grad->confidence.clear();
  }
  if (targets.empty()) {
    std::cerr << "warning: PemLoss called with no proposal targets\n";
    return 0.0;
  }
  const double inv_n = 1.0 / static_cast<double>(targets.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Vector& c_hat = preds[i].class_probs;
    const Vector& s_hat = preds[i].confidence;
    const ProposalTarget& t = targets[i];
    const Eigen::Index M = c_hat.size();
    double cls = 0.0;
    for (Eigen::Index j = 0; j < M; ++j) cls += Bce(c_hat(j), t.class_one_hot(j));
    cls /= static_cast<double>(M);
    const double conf = Bce(s_hat(t.class_id), t.tiou);
    loss += cls + conf;
    if (grad) {
      Vector gc(M);
      for (Eigen::Index j = 0; j < M; ++j) {
        gc(j) = BceGrad(c_hat(j), t.class_one_hot(j)) * inv_n /
                static_cast<double>(M);
      }
      Vector gs = Vector::Zero(s_hat.size());
      gs(t.class_id) = BceGrad(s_hat(t.class_id), t.tiou) * inv_n;
      grad->class_probs.push_back(std::move(gc));
      grad->confidence.push_back(std::move(gs));
    }
  }
  return loss * inv_n;
}

namespace {

RegionFeature MakeRegion(const Matrix& x, const Interval& range,
                         RegionKind kind, std::optional<int> class_id,
                         int instance) {
  RegionFeature r;
  r.kind = kind;
  r.class_id = class_id;
  r.instance = instance;
  r.range = range;
  const RowVector mean =
      x.middleRows(range.t_s, range.t_e - range.t_s + 1).colwise().mean();
  r.mean_norm = mean.norm();
  r.vector = r.mean_norm > 0.0 ? RowVector(mean / r.mean_norm)
                               : RowVector::Zero(x.cols());
  return r;
}

double LogSumExp(const std::vector<double>& values) {
  double peak = -std::numeric_limits<double>::infinity();
  for (const double v : values) peak = std::max(peak, v);
  double sum = 0.0;
  for (const double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

}  // namespace

std::vector<RegionFeature> RegionFeatures(const Matrix& x,
                                          const PseudoLabelSet& pseudo) {
  const int T = static_cast<int>(x.rows());
  std::vector<RegionFeature> out;
  for (std::size_t i = 0; i < pseudo.actions.size(); ++i) {
    const ActionInstance& a = pseudo.actions[i];
    const int d_g = a.t_e - a.t_s;
    out.push_back(MakeRegion(x, BoundaryRegion(a.t_s, d_g, T),
                             RegionKind::kStart, a.class_id,
                             static_cast<int>(i)));
    out.push_back(MakeRegion(x, BoundaryRegion(a.t_e, d_g, T),
                             RegionKind::kEnd, a.class_id,
                             static_cast<int>(i)));
  }
  for (std::size_t k = 0; k < pseudo.backgrounds.size(); ++k) {
    out.push_back(MakeRegion(x, pseudo.backgrounds[k].interval(),
                             RegionKind::kBackground, std::nullopt,
                             static_cast<int>(k)));
  }
  return out;
}

void RegionFeaturesBackward(const std::vector<RegionFeature>& regions,
                            const std::vector<RowVector>& grad_vectors,
                            Matrix& grad_x) {
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const RegionFeature& r = regions[i];
    if (r.mean_norm == 0.0 || grad_vectors[i].size() == 0) continue;
    const RowVector& g = grad_vectors[i];
    const RowVector grad_mean = (g - r.vector * r.vector.dot(g)) / r.mean_norm;
    const int len = r.range.t_e - r.range.t_s + 1;
    grad_x.middleRows(r.range.t_s, len).rowwise() += grad_mean / len;
  }
}

namespace {

struct AnchorGroup {
  std::vector<std::size_t> members;
};

// Groups start/end regions by (class, kind); only groups with >= 2 members
// take part.
std::vector<AnchorGroup> ContrastGroups(
    const std::vector<RegionFeature>& regions) {
  std::map<std::pair<int, int>, AnchorGroup> groups;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const RegionFeature& r = regions[i];
    if (r.kind == RegionKind::kBackground || !r.class_id) continue;
    groups[{*r.class_id, static_cast<int>(r.kind)}].members.push_back(i);
  }
  std::vector<AnchorGroup> out;
  for (auto& [key, group] : groups) {
    if (group.members.size() >= 2) out.push_back(std::move(group));
  }
  return out;
}

std::vector<std::size_t> BackgroundIndices(
    const std::vector<RegionFeature>& regions) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].kind == RegionKind::kBackground) out.push_back(i);
  }
  return out;
}

double AnchorTerm(const std::vector<RegionFeature>& regions,
                  std::size_t anchor, const std::vector<std::size_t>& group,
                  const std::vector<std::size_t>& backgrounds, double tau,
                  std::vector<RowVector>* grad) {
  if (backgrounds.empty()) return 0.0;
  const RowVector& a = regions[anchor].vector;
  std::vector<std::size_t> others;
  std::vector<double> pos_logits;
  for (const std::size_t p : group) {
    if (p == anchor) continue;
    others.push_back(p);
    pos_logits.push_back(a.dot(regions[p].vector) / tau);
  }
  std::vector<double> all_logits = pos_logits;
  for (const std::size_t k : backgrounds) {
    all_logits.push_back(a.dot(regions[k].vector) / tau);
  }
  const double lse_pos = LogSumExp(pos_logits);
  const double lse_all = LogSumExp(all_logits);
  if (grad) {
    // dL/dz = softmax_all(z) - [z positive] softmax_pos(z).
    const std::size_t n_pos = others.size();
    for (std::size_t l = 0; l < all_logits.size(); ++l) {
      double dz = std::exp(all_logits[l] - lse_all);
      if (l < n_pos) dz -= std::exp(pos_logits[l] - lse_pos);
      const std::size_t other = l < n_pos ? others[l] : backgrounds[l - n_pos];
      (*grad)[anchor] += dz / tau * regions[other].vector;
      (*grad)[other] += dz / tau * a;
    }
  }
  return lse_all - lse_pos;
}

}  // namespace

std::vector<AnchorLoss> ContrastiveAnchorLosses(
    const std::vector<RegionFeature>& regions, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  const auto backgrounds = BackgroundIndices(regions);
  std::vector<AnchorLoss> out;
  for (const AnchorGroup& group : ContrastGroups(regions)) {
    for (const std::size_t anchor : group.members) {
      out.push_back({anchor, AnchorTerm(regions, anchor, group.members,
                                        backgrounds, tau, nullptr)});
    }
  }
  return out;
}

double CtrLoss(const std::vector<RegionFeature>& regions, double tau,
               std::vector<RowVector>* grad) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (grad) {
    grad->assign(regions.size(), RowVector());
    for (std::size_t i = 0; i < regions.size(); ++i) {
      (*grad)[i] = RowVector::Zero(regions[i].vector.size());
    }
  }
  const auto backgrounds = BackgroundIndices(regions);
  double total = 0.0;
  for (const AnchorGroup& group : ContrastGroups(regions)) {
    for (const std::size_t anchor : group.members) {
      total += AnchorTerm(regions, anchor, group.members, backgrounds, tau,
                          grad);
    }
  }
  return total;
}

double TotalLoss(double l_bdm, double l_pem, double l_ctr, double lambda1,
                 double lambda2) {
  return l_bdm + lambda1 * l_pem + lambda2 * l_ctr;
}

}  // namespace pointloc
