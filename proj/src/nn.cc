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

#include "pointloc/nn.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pointloc/strings.h"

namespace pointloc::nn {

void InitUniform(Parameter& p, int fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / std::max(1, fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    p.value.data()[i] = dist(rng);
  }
  p.ZeroGrad();
}

void ZeroGrads(const ParameterList& params) {
  for (Parameter* p : params) p->ZeroGrad();
}

// ---------------------------------------------------------------------------
// Conv1d

Conv1d::Conv1d(std::string name, int kernel_size, int in_dim, int out_dim,
               bool with_bias)
    : kernel(name + ".kernel", Eigen::Index{kernel_size} * in_dim, out_dim),
      bias(name + ".bias", 1, out_dim),
      kernel_size_(kernel_size),
      in_dim_(in_dim),
      out_dim_(out_dim),
      with_bias_(with_bias) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw std::invalid_argument(name + ": kernel size must be odd, got " +
                                std::to_string(kernel_size));
  }
  if (in_dim < 1 || out_dim < 1) {
    throw std::invalid_argument(name + ": dimensions must be positive");
  }
}

void Conv1d::Init(std::mt19937_64& rng) {
  const int fan_in = kernel_size_ * in_dim_;
  InitUniform(kernel, fan_in, rng);
  if (with_bias_) {
    InitUniform(bias, fan_in, rng);
  } else {
    bias.value.setZero();
    bias.ZeroGrad();
  }
}

Matrix Conv1d::Unfold(const Matrix& x) const {
  if (x.cols() != in_dim_) {
    throw std::invalid_argument(
        kernel.name + ": input has " + std::to_string(x.cols()) +
        " columns, expected " + std::to_string(in_dim_));
  }
  const Eigen::Index T = x.rows();
  const int half = kernel_size_ / 2;
  Matrix cols = Matrix::Zero(T, Eigen::Index{kernel_size_} * in_dim_);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int j = 0; j < kernel_size_; ++j) {
      const Eigen::Index src = t + j - half;
      if (src < 0 || src >= T) continue;
      cols.block(t, Eigen::Index{j} * in_dim_, 1, in_dim_) = x.row(src);
    }
  }
  return cols;
}

Matrix Conv1d::Forward(const Matrix& x) const {
  Matrix y = Unfold(x) * kernel.value;
  if (with_bias_) y.rowwise() += bias.value.row(0);
  return y;
}

Matrix Conv1d::Backward(const Matrix& x, const Matrix& grad_out) {
  if (grad_out.rows() != x.rows() || grad_out.cols() != out_dim_) {
    throw std::invalid_argument(kernel.name + ": gradient shape mismatch");
  }
  const Matrix cols = Unfold(x);
  kernel.grad.noalias() += cols.transpose() * grad_out;
  if (with_bias_) bias.grad.row(0) += grad_out.colwise().sum();

  const Matrix dcols = grad_out * kernel.value.transpose();
  const Eigen::Index T = x.rows();
  const int half = kernel_size_ / 2;
  Matrix dx = Matrix::Zero(T, in_dim_);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int j = 0; j < kernel_size_; ++j) {
      const Eigen::Index src = t + j - half;
      if (src < 0 || src >= T) continue;
      dx.row(src) += dcols.block(t, Eigen::Index{j} * in_dim_, 1, in_dim_);
    }
  }
  return dx;
}

void Conv1d::AppendParameters(ParameterList& out) {
  out.push_back(&kernel);
  if (with_bias_) out.push_back(&bias);
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::string name, int in_dim, int out_dim)
    : weight(name + ".weight", in_dim, out_dim),
      bias(name + ".bias", 1, out_dim) {
  if (in_dim < 1 || out_dim < 1) {
    throw std::invalid_argument(name + ": dimensions must be positive");
  }
}

void Dense::Init(std::mt19937_64& rng) {
  const int fan_in = static_cast<int>(weight.value.rows());
  InitUniform(weight, fan_in, rng);
  InitUniform(bias, fan_in, rng);
}

Matrix Dense::Forward(const Matrix& x) const {
  if (x.cols() != weight.value.rows()) {
    throw std::invalid_argument(
        weight.name + ": input has " + std::to_string(x.cols()) +
        " columns, expected " + std::to_string(weight.value.rows()));
  }
  Matrix y = x * weight.value;
  y.rowwise() += bias.value.row(0);
  return y;
}

Matrix Dense::Backward(const Matrix& x, const Matrix& grad_out) {
  weight.grad.noalias() += x.transpose() * grad_out;
  bias.grad.row(0) += grad_out.colwise().sum();
  return grad_out * weight.value.transpose();
}

void Dense::AppendParameters(ParameterList& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

// ---------------------------------------------------------------------------
// Activations

Matrix Relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix ReluBackward(const Matrix& x, const Matrix& grad_out) {
  return (x.array() > 0.0).select(grad_out, 0.0);
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix Sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) { return Sigmoid(v); });
}

Matrix SigmoidBackward(const Matrix& y, const Matrix& grad_out) {
  return (grad_out.array() * y.array() * (1.0 - y.array())).matrix();
}

Matrix Softmax(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double shift = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - shift).exp();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

Matrix SoftmaxBackward(const Matrix& y, const Matrix& grad_out) {
  Matrix dx(y.rows(), y.cols());
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double dot = y.row(r).dot(grad_out.row(r));
    dx.row(r) = y.row(r).array() * (grad_out.row(r).array() - dot);
  }
  return dx;
}

RowVector MeanPool(const Matrix& x) {
  return x.colwise().sum() / static_cast<double>(x.rows());
}

Matrix MeanPoolBackward(Eigen::Index rows, const RowVector& grad_out) {
  return (grad_out / static_cast<double>(rows)).replicate(rows, 1);
}

// ---------------------------------------------------------------------------
// Adam

void Adam::Step(const ParameterList& params) {
  for (const Parameter* p : params) {
    if (!p->grad.allFinite()) {
      throw std::runtime_error("non-finite gradient in parameter '" +
                               p->name + "'");
    }
  }
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) {
    throw std::invalid_argument("Adam: parameter list changed between steps");
  }
  ++step_;
  const auto& o = options_;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    m_[i] = o.beta1 * m_[i] + (1.0 - o.beta1) * p.grad;
    v_[i] = o.beta2 * v_[i] + (1.0 - o.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= o.lr * (m_[i].array() / c1) /
                       ((v_[i].array() / c2).sqrt() + o.eps);
  }
}

// ---------------------------------------------------------------------------
// Gradient check

double GradCheck(const std::function<double()>& loss,
                 const ParameterList& params, GradCheckOptions options) {
  std::mt19937_64 rng(options.seed);
  double worst = 0.0;
  for (Parameter* p : params) {
    const Eigen::Index n = p->value.size();
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(n));
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    if (static_cast<std::size_t>(n) > options.max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords);
    }
    for (const Eigen::Index c : coords) {
      double& slot = p->value.data()[c];
      const double saved = slot;
      slot = saved + options.h;
      const double up = loss();
      slot = saved - options.h;
      const double down = loss();
      slot = saved;
      const double numeric = (up - down) / (2.0 * options.h);
      const double analytic = p->grad.data()[c];
      const double err = std::abs(analytic - numeric) /
                         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr std::string_view kMagic = "pointloc-checkpoint 1";

struct RawTensor {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<double> values;
};

struct RawCheckpoint {
  std::map<std::string, std::string> metadata;
  std::map<std::string, RawTensor> tensors;
};

RawCheckpoint ReadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  RawCheckpoint ckpt;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                             what);
  };
  if (!std::getline(in, line) || Trim(line) != kMagic) {
    lineno = 1;
    fail("not a pointloc checkpoint");
  }
  lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = Trim(line);
    if (view.empty()) continue;
    if (view.starts_with("meta ")) {
      const std::string_view rest = Trim(view.substr(5));
      const auto space = rest.find(' ');
      const std::string key(rest.substr(0, space));
      const std::string value(
          space == std::string_view::npos ? "" : Trim(rest.substr(space)));
      ckpt.metadata[key] = value;
    } else if (view.starts_with("param ")) {
      std::istringstream header{std::string(view.substr(6))};
      std::string name;
      RawTensor tensor;
      if (!(header >> name >> tensor.rows >> tensor.cols) || tensor.rows < 0 ||
          tensor.cols < 0) {
        fail("malformed param header");
      }
      tensor.values.reserve(static_cast<std::size_t>(tensor.rows * tensor.cols));
      for (Eigen::Index r = 0; r < tensor.rows; ++r) {
        if (!std::getline(in, line)) fail("truncated tensor " + name);
        ++lineno;
        const auto cells = Split(Trim(line), ' ');
        if (static_cast<Eigen::Index>(cells.size()) != tensor.cols &&
            !(tensor.cols == 0 && cells.size() == 1 && cells[0].empty())) {
          fail("tensor " + name + " row has " + std::to_string(cells.size()) +
               " values, expected " + std::to_string(tensor.cols));
        }
        for (Eigen::Index c = 0; c < tensor.cols; ++c) {
          const auto v = ParseDouble(cells[static_cast<std::size_t>(c)]);
          if (!v) fail("bad number in tensor " + name);
          tensor.values.push_back(*v);
        }
      }
      ckpt.tensors[name] = std::move(tensor);
    } else if (view == "end") {
      return ckpt;
    } else {
      fail("unexpected line '" + std::string(view) + "'");
    }
  }
  fail("missing end marker");
  return ckpt;
}

}  // namespace

void SaveParameters(const std::string& path, const ParameterList& params,
                    const std::map<std::string, std::string>& metadata) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << kMagic << '\n';
  for (const auto& [key, value] : metadata) {
    out << "meta " << key << ' ' << value << '\n';
  }
  for (const Parameter* p : params) {
    out << "param " << p->name << ' ' << p->value.rows() << ' '
        << p->value.cols() << '\n';
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        if (c > 0) out << ' ';
        out << FormatDouble(p->value(r, c));
      }
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

std::map<std::string, std::string> ReadCheckpointMetadata(
    const std::string& path) {
  return ReadCheckpoint(path).metadata;
}

void LoadParameters(const std::string& path, const ParameterList& params) {
  RawCheckpoint ckpt = ReadCheckpoint(path);
  for (Parameter* p : params) {
    const auto it = ckpt.tensors.find(p->name);
    if (it == ckpt.tensors.end()) {
      throw std::runtime_error(path + ": missing parameter " + p->name);
    }
    const RawTensor& t = it->second;
    if (t.rows != p->value.rows() || t.cols != p->value.cols()) {
      throw std::runtime_error(
          path + ": parameter " + p->name + " has shape " +
          std::to_string(t.rows) + "x" + std::to_string(t.cols) +
          ", expected " + std::to_string(p->value.rows()) + "x" +
          std::to_string(p->value.cols()));
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      p->value.data()[i] = t.values[static_cast<std::size_t>(i)];
    }
    p->ZeroGrad();
  }
}

}  // namespace pointloc::nn
