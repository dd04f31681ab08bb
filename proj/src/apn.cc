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

#include "pointloc/apn.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pointloc {

std::vector<int> SelectBoundaryCandidates(const Vector& p, double peak_ratio) {
  const Eigen::Index T = p.size();
  std::vector<int> out;
  if (T == 0) return out;
  const double cut = peak_ratio * p.maxCoeff();
  for (Eigen::Index t = 0; t < T; ++t) {
    const bool above_left = t == 0 || p(t) > p(t - 1);
    const bool above_right = t == T - 1 || p(t) > p(t + 1);
    const bool peak = T > 1 && above_left && above_right;
    if (p(t) > cut || peak) out.push_back(static_cast<int>(t));
  }
  return out;
}

std::vector<Interval> GenerateProposals(std::span<const int> starts,
                                        std::span<const int> ends, int d_min,
                                        int d_max) {
  std::vector<Interval> out;
  if (d_min > d_max) return out;
  for (const int s : starts) {
    auto it = std::lower_bound(ends.begin(), ends.end(), s + d_min);
    for (; it != ends.end() && *it - s <= d_max; ++it) out.push_back({s, *it});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Proposal feature sampling

ProposalSampler::ProposalSampler(int T, const Interval& proposal,
                                 int num_samples, Interpolation mode) {
  if (num_samples < 2) throw std::invalid_argument("num_samples must be >= 2");
  if (T < 1 || proposal.t_s > proposal.t_e) {
    throw std::invalid_argument("invalid proposal for sampling");
  }
  const long long d = proposal.t_e - proposal.t_s;
  const long long steps = num_samples - 1;
  for (int k = 0; k < num_samples; ++k) {
    // Offset from t_s, computed from integers so it does not depend on t_s.
    const double rel = static_cast<double>(d * (12 * k - steps)) /
                       static_cast<double>(10 * steps);
    int lower = 0;
    double weight = 0.0;
    if (mode == Interpolation::kNearest) {
      lower = proposal.t_s + static_cast<int>(std::lround(rel));
    } else {
      const double whole = std::floor(rel);
      lower = proposal.t_s + static_cast<int>(whole);
      weight = rel - whole;
    }
    if (lower < 0) {
      lower = 0;
      weight = 0.0;
    } else if (lower >= T - 1) {
      lower = T - 1;
      weight = 0.0;
    }
    lower_.push_back(lower);
    upper_.push_back(std::min(lower + 1, T - 1));
    upper_weight_.push_back(weight);
    positions_.push_back(lower + weight);
  }
}

Matrix ProposalSampler::Apply(const Matrix& x) const {
  Matrix out(static_cast<Eigen::Index>(lower_.size()), x.cols());
  for (std::size_t k = 0; k < lower_.size(); ++k) {
    const double w = upper_weight_[k];
    const auto r = static_cast<Eigen::Index>(k);
    if (w == 0.0) {
      out.row(r) = x.row(lower_[k]);
    } else {
      out.row(r) = (1.0 - w) * x.row(lower_[k]) + w * x.row(upper_[k]);
    }
  }
  return out;
}

void ProposalSampler::Backward(const Matrix& grad_samples,
                               Matrix& grad_x) const {
  for (std::size_t k = 0; k < lower_.size(); ++k) {
    const double w = upper_weight_[k];
    const auto r = static_cast<Eigen::Index>(k);
    grad_x.row(lower_[k]) += (1.0 - w) * grad_samples.row(r);
    if (w != 0.0) grad_x.row(upper_[k]) += w * grad_samples.row(r);
  }
}

Matrix SampleProposalFeatures(const FeatureSequence& x,
                              const Interval& proposal, int num_samples,
                              Interpolation mode) {
  return ProposalSampler(x.T(), proposal, num_samples, mode).Apply(x.data());
}

// ---------------------------------------------------------------------------
// Prompted class embeddings

std::vector<std::string> DefaultPrompts() {
  return {"the man in the scene is {}", "a video of a person {}",
          "a clip showing {}", "{}"};
}

namespace {

std::uint64_t Fnv1a(const std::string& text, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> Tokenize(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> tokens;
  for (std::string token; in >> token;) {
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    tokens.push_back(token);
  }
  return tokens;
}

RowVector TokenMean(const std::vector<std::string>& tokens, int dim,
                    std::uint64_t seed) {
  RowVector sum = RowVector::Zero(dim);
  for (const auto& token : tokens) {
    std::mt19937_64 stream(Fnv1a(token, seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int d = 0; d < dim; ++d) sum(d) += normal(stream);
  }
  if (!tokens.empty()) sum /= static_cast<double>(tokens.size());
  return sum;
}

std::string FillPrompt(const std::string& prompt, const std::string& label) {
  const auto slot = prompt.find("{}");
  if (slot == std::string::npos) return prompt + " " + label;
  return prompt.substr(0, slot) + label + prompt.substr(slot + 2);
}

}  // namespace

RowVector PromptClassEmbedding(const std::string& label,
                               const std::vector<std::string>& prompts,
                               int dim, std::uint64_t seed) {
  if (prompts.empty()) throw std::invalid_argument("empty prompt set");
  if (Tokenize(label).empty()) throw std::invalid_argument("empty label text");
  if (dim < 1) throw std::invalid_argument("embedding dim must be >= 1");

  RowVector total = RowVector::Zero(dim);
  for (const auto& prompt : prompts) {
    RowVector sentence = TokenMean(Tokenize(FillPrompt(prompt, label)), dim,
                                   seed);
    const RowVector templ = TokenMean(Tokenize(FillPrompt(prompt, "")), dim,
                                      seed);
    if (templ.norm() > 0.0) {
      const RowVector u = templ / templ.norm();
      const RowVector centered = sentence - sentence.dot(u) * u;
      if (centered.norm() > 1e-12) sentence = centered;
    }
    total += sentence;
  }
  total /= static_cast<double>(prompts.size());
  const double norm = total.norm();
  if (norm == 0.0) throw std::runtime_error("degenerate prompt embedding");
  return total / norm;
}

Matrix BuildClassEmbeddings(const std::vector<std::string>& labels,
                            const std::vector<std::string>& prompts, int dim) {
  Matrix table(static_cast<Eigen::Index>(labels.size()), dim);
  for (std::size_t c = 0; c < labels.size(); ++c) {
    table.row(static_cast<Eigen::Index>(c)) =
        PromptClassEmbedding(labels[c], prompts, dim);
  }
  return table;
}

Vector CosineSimilarities(const Matrix& table, const RowVector& v) {
  Vector sims = Vector::Zero(table.rows());
  const double vn = v.norm();
  if (vn == 0.0) return sims;
  for (Eigen::Index j = 0; j < table.rows(); ++j) {
    const double cn = table.row(j).norm();
    if (cn == 0.0) continue;
    sims(j) = std::clamp(table.row(j).dot(v) / (cn * vn), -1.0, 1.0);
  }
  return sims;
}

double ConfidenceFromSimilarity(double similarity, double temperature) {
  return nn::Sigmoid(similarity / temperature);
}

// ---------------------------------------------------------------------------
// ApnModel

ApnModel::ApnModel(const ApnDims& dims, std::uint64_t seed)
    : dims_(dims),
      embed_("embed", 3, dims.feature_dim, dims.feature_dim),
      bdm_hidden_("bdm.hidden", 3, dims.feature_dim,
                  std::max(1, dims.feature_dim / 2)),
      bdm_out_("bdm.out", 3, std::max(1, dims.feature_dim / 2), 2),
      cls_token_("pem.cls", 1, dims.feature_dim),
      mix_("pem.mix", 2 * dims.feature_dim, dims.hidden_dim),
      visual_("pem.visual", dims.hidden_dim, dims.embed_dim),
      head_hidden_("pem.head_hidden", dims.hidden_dim, dims.hidden_dim),
      head_out_("pem.head_out", dims.hidden_dim, dims.num_classes),
      class_table_("pem.class_embeddings", dims.num_classes, dims.embed_dim) {
  if (dims.num_classes < 1) throw std::invalid_argument("num_classes < 1");
  if (!(dims.confidence_temperature > 0.0)) {
    throw std::invalid_argument("confidence temperature must be > 0");
  }
  std::mt19937_64 rng(seed);
  embed_.Init(rng);
  bdm_hidden_.Init(rng);
  bdm_out_.Init(rng);
  nn::InitUniform(cls_token_, dims.feature_dim, rng);
  mix_.Init(rng);
  visual_.Init(rng);
  head_hidden_.Init(rng);
  head_out_.Init(rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < class_table_.value.size(); ++i) {
    class_table_.value.data()[i] = normal(rng);
  }
  NormalizeClassEmbeddings();
}

nn::ParameterList ApnModel::parameters() {
  nn::ParameterList out;
  embed_.AppendParameters(out);
  bdm_hidden_.AppendParameters(out);
  bdm_out_.AppendParameters(out);
  out.push_back(&cls_token_);
  mix_.AppendParameters(out);
  visual_.AppendParameters(out);
  head_hidden_.AppendParameters(out);
  head_out_.AppendParameters(out);
  out.push_back(&class_table_);
  return out;
}

void ApnModel::ZeroGrad() { nn::ZeroGrads(parameters()); }

Matrix ApnModel::Embed(const Matrix& features, EmbedCache* cache) const {
  Matrix pre = embed_.Forward(features);
  Matrix out = nn::Relu(pre);
  if (cache) cache->pre_activation = std::move(pre);
  return out;
}

void ApnModel::EmbedBackward(const Matrix& features, const EmbedCache& cache,
                             const Matrix& grad_embedded) {
  embed_.Backward(features, nn::ReluBackward(cache.pre_activation,
                                             grad_embedded));
}

BoundaryProbabilities ApnModel::Bdm(const Matrix& x, BdmCache* cache) const {
  Matrix hidden_pre = bdm_hidden_.Forward(x);
  Matrix hidden = nn::Relu(hidden_pre);
  Matrix probs = nn::Sigmoid(bdm_out_.Forward(hidden));
  BoundaryProbabilities out{probs.col(0), probs.col(1)};
  if (cache) {
    cache->hidden_pre = std::move(hidden_pre);
    cache->hidden = std::move(hidden);
    cache->probs = std::move(probs);
  }
  return out;
}

Matrix ApnModel::BdmBackward(const Matrix& x, const BdmCache& cache,
                             const Vector& grad_start, const Vector& grad_end) {
  Matrix grad_probs(cache.probs.rows(), 2);
  grad_probs.col(0) = grad_start;
  grad_probs.col(1) = grad_end;
  const Matrix grad_logits = nn::SigmoidBackward(cache.probs, grad_probs);
  const Matrix grad_hidden = bdm_out_.Backward(cache.hidden, grad_logits);
  return bdm_hidden_.Backward(
      x, nn::ReluBackward(cache.hidden_pre, grad_hidden));
}

PemOutput ApnModel::Pem(const Matrix& samples, PemCache* cache) const {
  const int D = dims_.feature_dim;
  Matrix joint(1, 2 * D);
  joint.leftCols(D) = cls_token_.value;
  joint.rightCols(D) = nn::MeanPool(samples);
  Matrix mix_pre = mix_.Forward(joint);
  Matrix mix = nn::Relu(mix_pre);
  Matrix head_pre = head_hidden_.Forward(mix);
  Matrix head = nn::Relu(head_pre);

  PemOutput out;
  out.class_probs = nn::Sigmoid(head_out_.Forward(head)).row(0).transpose();
  out.visual = visual_.Forward(mix).row(0);
  out.sims = CosineSimilarities(class_table_.value, out.visual);
  out.confidence = out.sims.unaryExpr([&](double s) {
    return ConfidenceFromSimilarity(s, dims_.confidence_temperature);
  });
  if (cache) {
    cache->joint = std::move(joint);
    cache->mix_pre = std::move(mix_pre);
    cache->mix = std::move(mix);
    cache->head_pre = std::move(head_pre);
    cache->head = std::move(head);
    cache->out = out;
  }
  return out;
}

Matrix ApnModel::PemBackward(const Matrix& samples, const PemCache& cache,
                             const Vector& grad_class_probs,
                             const Vector& grad_confidence) {
  const PemOutput& out = cache.out;
  const int D = dims_.feature_dim;

  // Classification head.
  const Matrix grad_logits =
      (grad_class_probs.array() * out.class_probs.array() *
       (1.0 - out.class_probs.array()))
          .matrix()
          .transpose();
  const Matrix grad_head = head_out_.Backward(cache.head, grad_logits);
  Matrix grad_mix = head_hidden_.Backward(
      cache.mix, nn::ReluBackward(cache.head_pre, grad_head));

  // Cosine similarity branch.
  const RowVector& v = out.visual;
  const double vn = v.norm();
  Matrix grad_visual = Matrix::Zero(1, v.size());
  if (vn > 0.0) {
    const double inv_temp = 1.0 / dims_.confidence_temperature;
    for (Eigen::Index j = 0; j < class_table_.value.rows(); ++j) {
      const double conf = out.confidence(j);
      const double g = grad_confidence(j) * conf * (1.0 - conf) * inv_temp;
      if (g == 0.0) continue;
      const RowVector c = class_table_.value.row(j);
      const double cn = c.norm();
      if (cn == 0.0) continue;
      const double s = out.sims(j);
      grad_visual.row(0) += g * (c / (cn * vn) - s * v / (vn * vn));
      class_table_.grad.row(j) += g * (v / (cn * vn) - s * c / (cn * cn));
    }
  }
  grad_mix += visual_.Backward(cache.mix, grad_visual);

  const Matrix grad_joint =
      mix_.Backward(cache.joint, nn::ReluBackward(cache.mix_pre, grad_mix));
  cls_token_.grad += grad_joint.leftCols(D);
  return nn::MeanPoolBackward(samples.rows(), grad_joint.rightCols(D));
}

void ApnModel::SetClassEmbeddings(const Matrix& table) {
  if (table.rows() != class_table_.value.rows() ||
      table.cols() != class_table_.value.cols()) {
    throw std::invalid_argument(
        "class embeddings must be " +
        std::to_string(class_table_.value.rows()) + " x " +
        std::to_string(class_table_.value.cols()) + ", got " +
        std::to_string(table.rows()) + " x " + std::to_string(table.cols()));
  }
  class_table_.value = table;
  NormalizeClassEmbeddings();
}

void ApnModel::NormalizeClassEmbeddings() {
  for (Eigen::Index j = 0; j < class_table_.value.rows(); ++j) {
    const double n = class_table_.value.row(j).norm();
    if (n > 0.0) class_table_.value.row(j) /= n;
  }
}

}  // namespace pointloc
