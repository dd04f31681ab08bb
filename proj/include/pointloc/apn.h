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

#ifndef POINTLOC_APN_H_
#define POINTLOC_APN_H_

// Action proposal network: snippet embedding, boundary detection, proposal
// generation and proposal evaluation by class-embedding similarity.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pointloc/nn.h"
#include "pointloc/types.h"

namespace pointloc {

struct BoundaryProbabilities {
  Vector start;
  Vector end;
};

// Index t is a candidate iff p[t] > peak_ratio * max(p) or p[t] is a strict
// local maximum (the two ends compare against their single neighbour).
// Sorted ascending.
std::vector<int> SelectBoundaryCandidates(const Vector& p,
                                          double peak_ratio = 0.5);

// Every (s, e) with e - s in [d_min, d_max], in lexicographic order. Both
// candidate lists must be sorted ascending.
std::vector<Interval> GenerateProposals(std::span<const int> starts,
                                        std::span<const int> ends, int d_min,
                                        int d_max);

enum class Interpolation { kLinear, kNearest };

// N equally spaced positions over [t_s - d/10, t_e + d/10] (d = t_e - t_s),
// clamped to [0, T - 1], each read by interpolating neighbouring rows.
class ProposalSampler {
 public:
  ProposalSampler(int T, const Interval& proposal, int num_samples,
                  Interpolation mode = Interpolation::kLinear);

  Matrix Apply(const Matrix& x) const;
  // Scatters dL/dsamples into grad_x (accumulating).
  void Backward(const Matrix& grad_samples, Matrix& grad_x) const;

  const std::vector<double>& positions() const { return positions_; }

 private:
  std::vector<double> positions_;
  std::vector<int> lower_;
  std::vector<int> upper_;
  std::vector<double> upper_weight_;
};

Matrix SampleProposalFeatures(const FeatureSequence& x,
                              const Interval& proposal, int num_samples,
                              Interpolation mode = Interpolation::kLinear);

// Prompt templates; "{}" marks where the label goes.
std::vector<std::string> DefaultPrompts();

inline constexpr std::uint64_t kPromptSeed = 0x9e3779b97f4a7c15ULL;

// Deterministic bag-of-tokens text embedding. Each whitespace token maps to a
// Gaussian vector drawn from a stream seeded by its hash. For every prompt
// the prompted label is the token mean with the template-only direction
// projected out (so templates shared by every label do not dominate); the
// prompt results are averaged and L2-normalized. Throws on an empty label or
// prompt set.
RowVector PromptClassEmbedding(const std::string& label,
                               const std::vector<std::string>& prompts,
                               int dim, std::uint64_t seed = kPromptSeed);

Matrix BuildClassEmbeddings(const std::vector<std::string>& labels,
                            const std::vector<std::string>& prompts, int dim);

// Cosine similarity of v against every row of `table`; 0 for zero vectors.
Vector CosineSimilarities(const Matrix& table, const RowVector& v);
// sigmoid(similarity / temperature).
double ConfidenceFromSimilarity(double similarity, double temperature);

struct ApnDims {
  int feature_dim = 32;
  int num_classes = 1;
  int embed_dim = 64;  // D_e, the shared vision/text space
  int hidden_dim = 64;
  double confidence_temperature = 0.2;
};

struct PemOutput {
  Vector class_probs;  // per-class sigmoid
  Vector sims;         // cosine to each class embedding
  Vector confidence;   // sigmoid(sims / temperature)
  RowVector visual;    // proposal representation
};

class ApnModel {
 public:
  ApnModel(const ApnDims& dims, std::uint64_t seed);

  const ApnDims& dims() const { return dims_; }
  nn::ParameterList parameters();
  void ZeroGrad();

  struct EmbedCache {
    Matrix pre_activation;
  };
  // conv1d (k=3, D -> D) + ReLU.
  Matrix Embed(const Matrix& features, EmbedCache* cache = nullptr) const;
  void EmbedBackward(const Matrix& features, const EmbedCache& cache,
                     const Matrix& grad_embedded);

  struct BdmCache {
    Matrix hidden_pre;
    Matrix hidden;
    Matrix probs;  // T x 2
  };
  // conv1d (k=3, D -> D/2) + ReLU, conv1d (k=3, D/2 -> 2) + sigmoid.
  BoundaryProbabilities Bdm(const Matrix& x, BdmCache* cache = nullptr) const;
  Matrix BdmBackward(const Matrix& x, const BdmCache& cache,
                     const Vector& grad_start, const Vector& grad_end);

  struct PemCache {
    Matrix joint;  // [cls | mean-pooled samples]
    Matrix mix_pre;
    Matrix mix;
    Matrix head_pre;
    Matrix head;
    PemOutput out;
  };
  PemOutput Pem(const Matrix& samples, PemCache* cache = nullptr) const;
  // Returns dL/dsamples; parameter gradients accumulate.
  Matrix PemBackward(const Matrix& samples, const PemCache& cache,
                     const Vector& grad_class_probs,
                     const Vector& grad_confidence);

  void SetClassEmbeddings(const Matrix& table);
  const Matrix& class_embeddings() const { return class_table_.value; }
  // Rescales every class embedding to unit norm.
  void NormalizeClassEmbeddings();

 private:
  ApnDims dims_;
  nn::Conv1d embed_;
  nn::Conv1d bdm_hidden_;
  nn::Conv1d bdm_out_;
  nn::Parameter cls_token_;
  nn::Dense mix_;
  nn::Dense visual_;
  nn::Dense head_hidden_;
  nn::Dense head_out_;
  nn::Parameter class_table_;
};

}  // namespace pointloc

#endif  // POINTLOC_APN_H_
