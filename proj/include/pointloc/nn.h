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

#ifndef POINTLOC_NN_H_
#define POINTLOC_NN_H_

// A deliberately small differentiable layer set: every layer exposes a
// Forward and a hand-derived Backward that accumulates parameter gradients
// and returns the gradient with respect to its input.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pointloc/types.h"

namespace pointloc::nn {

struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(name)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)) {}

  void ZeroGrad() { grad.setZero(); }

  std::string name;
  Matrix value;
  Matrix grad;
};

using ParameterList = std::vector<Parameter*>;

// uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)).
void InitUniform(Parameter& p, int fan_in, std::mt19937_64& rng);
void ZeroGrads(const ParameterList& params);

// Temporal convolution over the rows of a T x D_in matrix with zero
// "same" padding. The kernel is stored as a (k * D_in) x D_out matrix whose
// row block j holds tap j (offset j - k/2).
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(std::string name, int kernel_size, int in_dim, int out_dim,
         bool with_bias = true);

  void Init(std::mt19937_64& rng);
  Matrix Forward(const Matrix& x) const;
  // Accumulates into kernel.grad / bias.grad and returns dL/dx.
  Matrix Backward(const Matrix& x, const Matrix& grad_out);

  int kernel_size() const { return kernel_size_; }
  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  void AppendParameters(ParameterList& out);

  Parameter kernel;
  Parameter bias;

 private:
  Matrix Unfold(const Matrix& x) const;

  int kernel_size_ = 1;
  int in_dim_ = 0;
  int out_dim_ = 0;
  bool with_bias_ = true;
};

// y = x W + b, applied row-wise.
class Dense {
 public:
  Dense() = default;
  Dense(std::string name, int in_dim, int out_dim);

  void Init(std::mt19937_64& rng);
  Matrix Forward(const Matrix& x) const;
  Matrix Backward(const Matrix& x, const Matrix& grad_out);
  void AppendParameters(ParameterList& out);

  Parameter weight;
  Parameter bias;
};

Matrix Relu(const Matrix& x);
// `x` is the ReLU input.
Matrix ReluBackward(const Matrix& x, const Matrix& grad_out);

double Sigmoid(double x);
Matrix Sigmoid(const Matrix& x);
// `y` is the sigmoid output.
Matrix SigmoidBackward(const Matrix& y, const Matrix& grad_out);

// Row-wise, max-shifted.
Matrix Softmax(const Matrix& x);
Matrix SoftmaxBackward(const Matrix& y, const Matrix& grad_out);

// Mean over rows: n x D -> 1 x D.
RowVector MeanPool(const Matrix& x);
Matrix MeanPoolBackward(Eigen::Index rows, const RowVector& grad_out);

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moments are keyed by the order of the
// parameter list passed to Step, which must not change between calls.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Throws std::runtime_error naming the parameter if a gradient is not
  // finite; in that case no parameter is modified.
  void Step(const ParameterList& params);

  std::int64_t step_count() const { return step_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

 private:
  AdamOptions options_;
  std::int64_t step_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

struct GradCheckOptions {
  double h = 1e-5;
  // Tensors with more entries are probed at this many sampled coordinates.
  std::size_t max_coords = 1000;
  std::uint64_t seed = 0;
};

// Compares the gradients already stored in `params` against central
// differences of `loss`. Returns the max over probed coordinates of
// |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|). Parameter values are restored.
double GradCheck(const std::function<double()>& loss,
                 const ParameterList& params, GradCheckOptions options = {});

// Text checkpoint: a header of key/value metadata followed by named tensors.
// Values are written in shortest round-trip form, so loading is lossless.
void SaveParameters(const std::string& path, const ParameterList& params,
                    const std::map<std::string, std::string>& metadata);
std::map<std::string, std::string> ReadCheckpointMetadata(
    const std::string& path);
// Every parameter in `params` must be present with a matching shape.
void LoadParameters(const std::string& path, const ParameterList& params);

}  // namespace pointloc::nn

#endif  // POINTLOC_NN_H_
