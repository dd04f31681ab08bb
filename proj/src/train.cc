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

#include "pointloc/train.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "pointloc/io.h"
#include "pointloc/strings.h"

namespace pointloc {

void ValidateTrainConfig(const TrainConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("train config: " + what);
  };
  require(c.epochs >= 1, "epochs must be positive");
  require(c.batch_size >= 1, "batch_size must be positive");
  require(c.lr > 0.0, "lr must be positive");
  require(c.lambda1 >= 0.0 && c.lambda2 >= 0.0, "loss weights must be >= 0");
  require(c.tau > 0.0, "tau must be positive");
  require(c.num_samples >= 2, "N must be >= 2");
  require(c.update_every >= 1, "R must be positive");
  require(c.d_min >= 1, "d_min must be positive");
  require(c.d_max == 0 || c.d_min <= c.d_max, "d_min must not exceed d_max");
  require(c.nms_threshold > 0.0 && c.nms_threshold <= 1.0,
          "nms_threshold must lie in (0, 1]");
  require(c.embed_dim >= 1 && c.hidden_dim >= 1, "dims must be positive");
  require(c.confidence_temperature > 0.0,
          "confidence_temperature must be positive");
  require(c.kappa >= 0.0, "kappa must be >= 0");
  require(c.cluster_max_iters >= 1, "cluster_max_iters must be positive");
  require(c.peak_ratio >= 0.0 && c.peak_ratio <= 1.0,
          "peak_ratio must lie in [0, 1]");
  require(c.max_train_proposals >= 1, "max_train_proposals must be positive");
}

namespace {

int ToInt(const std::string& key, const std::string& value) {
  const auto v = ParseInt(value);
  if (!v) throw std::invalid_argument("config key '" + key + "': bad integer '" + value + "'");
  return static_cast<int>(*v);
}

double ToDouble(const std::string& key, const std::string& value) {
  const auto v = ParseDouble(value);
  if (!v) throw std::invalid_argument("config key '" + key + "': bad number '" + value + "'");
  return *v;
}

bool ToBool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw std::invalid_argument("config key '" + key + "': bad boolean '" + value + "'");
}

}  // namespace

TrainConfig ParseTrainConfig(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "epochs") c.epochs = ToInt(key, value);
    else if (key == "batch_size") c.batch_size = ToInt(key, value);
    else if (key == "lr") c.lr = ToDouble(key, value);
    else if (key == "lambda1") c.lambda1 = ToDouble(key, value);
    else if (key == "lambda2") c.lambda2 = ToDouble(key, value);
    else if (key == "tau") c.tau = ToDouble(key, value);
    else if (key == "N" || key == "num_samples") c.num_samples = ToInt(key, value);
    else if (key == "R" || key == "update_every") c.update_every = ToInt(key, value);
    else if (key == "d_min") c.d_min = ToInt(key, value);
    else if (key == "d_max") c.d_max = ToInt(key, value);
    else if (key == "nms_threshold") c.nms_threshold = ToDouble(key, value);
    else if (key == "seed") {
      const auto v = ParseInt(value);
      if (!v || *v < 0) throw std::invalid_argument("config key 'seed': bad value '" + value + "'");
      c.seed = static_cast<std::uint64_t>(*v);
    }
    else if (key == "embed_dim") c.embed_dim = ToInt(key, value);
    else if (key == "hidden_dim") c.hidden_dim = ToInt(key, value);
    else if (key == "confidence_temperature") c.confidence_temperature = ToDouble(key, value);
    else if (key == "kappa") c.kappa = ToDouble(key, value);
    else if (key == "cluster_max_iters") c.cluster_max_iters = ToInt(key, value);
    else if (key == "peak_ratio") c.peak_ratio = ToDouble(key, value);
    else if (key == "max_train_proposals") c.max_train_proposals = ToInt(key, value);
    else if (key == "interpolation") {
      if (value == "linear") c.interpolation = Interpolation::kLinear;
      else if (value == "nearest") c.interpolation = Interpolation::kNearest;
      else throw std::invalid_argument("config key 'interpolation': expected linear or nearest");
    }
    else if (key == "cross_class_nms") c.cross_class_nms = ToBool(key, value);
    else if (key == "multi_class_emission") c.multi_class_emission = ToBool(key, value);
    else if (key == "class_embeddings_file") c.class_embeddings_file = value;
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
  ValidateTrainConfig(c);
  return c;
}

std::map<std::string, std::string> TrainConfigToMap(const TrainConfig& c) {
  return {
      {"epochs", std::to_string(c.epochs)},
      {"batch_size", std::to_string(c.batch_size)},
      {"lr", FormatDouble(c.lr)},
      {"lambda1", FormatDouble(c.lambda1)},
      {"lambda2", FormatDouble(c.lambda2)},
      {"tau", FormatDouble(c.tau)},
      {"N", std::to_string(c.num_samples)},
      {"R", std::to_string(c.update_every)},
      {"d_min", std::to_string(c.d_min)},
      {"d_max", std::to_string(c.d_max)},
      {"nms_threshold", FormatDouble(c.nms_threshold)},
      {"seed", std::to_string(c.seed)},
      {"embed_dim", std::to_string(c.embed_dim)},
      {"hidden_dim", std::to_string(c.hidden_dim)},
      {"confidence_temperature", FormatDouble(c.confidence_temperature)},
      {"kappa", FormatDouble(c.kappa)},
      {"cluster_max_iters", std::to_string(c.cluster_max_iters)},
      {"peak_ratio", FormatDouble(c.peak_ratio)},
      {"max_train_proposals", std::to_string(c.max_train_proposals)},
      {"interpolation",
       c.interpolation == Interpolation::kLinear ? "linear" : "nearest"},
      {"cross_class_nms", c.cross_class_nms ? "true" : "false"},
      {"multi_class_emission", c.multi_class_emission ? "true" : "false"},
  };
}

namespace {

int MaxDuration(const TrainConfig& config, int T) {
  return config.d_max > 0 ? config.d_max : T;
}

std::vector<Interval> ProposalsFrom(const BoundaryProbabilities& probs, int T,
                                    const TrainConfig& config) {
  const auto starts = SelectBoundaryCandidates(probs.start, config.peak_ratio);
  const auto ends = SelectBoundaryCandidates(probs.end, config.peak_ratio);
  return GenerateProposals(starts, ends, config.d_min, MaxDuration(config, T));
}

void CheckFinite(double value, const char* component,
                 const std::string& video_id) {
  if (!std::isfinite(value)) {
    throw std::runtime_error("non-finite " + std::string(component) +
                             " loss on video '" + video_id + "'");
  }
}

}  // namespace

std::vector<ProposalTarget> TrainingTargets(
    const ApnModel& model, const Matrix& features,
    const std::vector<PointAnnotation>& points, const PseudoLabelSet& pseudo,
    const TrainConfig& config) {
  const Matrix x = model.Embed(features);
  const int T = static_cast<int>(x.rows());
  const auto proposals = ProposalsFrom(model.Bdm(x), T, config);
  auto targets = AssignProposalTargets(proposals, points, pseudo,
                                       model.dims().num_classes);
  const auto cap = static_cast<std::size_t>(config.max_train_proposals);
  if (targets.size() > cap) {
    std::vector<ProposalTarget> kept;
    kept.reserve(cap);
    for (std::size_t i = 0; i < cap; ++i) {
      kept.push_back(std::move(targets[i * targets.size() / cap]));
    }
    targets = std::move(kept);
  }
  return targets;
}

LossBreakdown VideoObjective(ApnModel& model, const Matrix& features,
                             const PseudoLabelSet& pseudo,
                             std::span<const ProposalTarget> targets,
                             const TrainConfig& config, double grad_scale,
                             const std::string& video_id) {
  const bool backward = grad_scale > 0.0;
  ApnModel::EmbedCache embed_cache;
  const Matrix x = model.Embed(features, &embed_cache);
  const int T = static_cast<int>(x.rows());

  LossBreakdown out;
  ApnModel::BdmCache bdm_cache;
  const BoundaryProbabilities probs = model.Bdm(x, &bdm_cache);
  BoundaryProbabilities bdm_grad;
  out.bdm = BdmLoss(probs, BoundaryLabelsFromPseudo(pseudo, T),
                    backward ? &bdm_grad : nullptr);
  CheckFinite(out.bdm, "BDM", video_id);

  std::vector<ProposalSampler> samplers;
  std::vector<Matrix> samples;
  std::vector<ApnModel::PemCache> pem_caches(targets.size());
  std::vector<PemPrediction> preds;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    samplers.emplace_back(T, targets[i].proposal, config.num_samples,
                          config.interpolation);
    samples.push_back(samplers.back().Apply(x));
    const PemOutput pem = model.Pem(samples.back(), &pem_caches[i]);
    preds.push_back({pem.class_probs, pem.confidence});
  }
  PemLossGrad pem_grad;
  out.num_targets = static_cast<int>(targets.size());
  if (!targets.empty()) {
    out.pem = PemLoss(preds, targets, backward ? &pem_grad : nullptr);
  }
  CheckFinite(out.pem, "PEM", video_id);

  const auto regions = RegionFeatures(x, pseudo);
  std::vector<RowVector> region_grad;
  out.ctr = CtrLoss(regions, config.tau, backward ? &region_grad : nullptr);
  CheckFinite(out.ctr, "CTR", video_id);

  out.total = TotalLoss(out.bdm, out.pem, out.ctr, config.lambda1,
                        config.lambda2);
  CheckFinite(out.total, "total", video_id);
  if (!backward) return out;

  Matrix grad_x = model.BdmBackward(x, bdm_cache, grad_scale * bdm_grad.start,
                                    grad_scale * bdm_grad.end);
  const double pem_scale = grad_scale * config.lambda1;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Matrix grad_samples = model.PemBackward(
        samples[i], pem_caches[i], pem_scale * pem_grad.class_probs[i],
        pem_scale * pem_grad.confidence[i]);
    samplers[i].Backward(grad_samples, grad_x);
  }
  const double ctr_scale = grad_scale * config.lambda2;
  for (auto& g : region_grad) g *= ctr_scale;
  RegionFeaturesBackward(regions, region_grad, grad_x);
  model.EmbedBackward(features, embed_cache, grad_x);
  return out;
}

std::vector<PseudoLabelSet> GenerateCorpusPseudoLabels(
    const ApnModel& model, const std::vector<Video>& corpus,
    const TrainConfig& config, int epoch_tag) {
  std::vector<PseudoLabelSet> out;
  out.reserve(corpus.size());
  const PseudoLabelOptions options{config.cluster_max_iters, config.kappa};
  for (const Video& v : corpus) {
    const FeatureSequence x(model.Embed(v.features.data()));
    PseudoLabelSet pseudo = GeneratePseudoLabels(x, v.points, options);
    pseudo.epoch_tag = epoch_tag;
    out.push_back(std::move(pseudo));
  }
  return out;
}

double PseudoLabelMap(const std::vector<Video>& corpus,
                      const std::vector<PseudoLabelSet>& pseudo,
                      double tiou_threshold) {
  std::vector<VideoPrediction> preds;
  std::vector<GroundTruthRecord> gt;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (const auto& g : corpus[i].gt) gt.push_back({corpus[i].id, g});
    for (const auto& a : pseudo[i].actions) {
      preds.push_back({corpus[i].id, {a.t_s, a.t_e, a.class_id.value_or(0), 1.0}});
    }
  }
  if (gt.empty()) return std::numeric_limits<double>::quiet_NaN();
  return Evaluate(preds, gt, {tiou_threshold}).map.front();
}

TrainResult Train(const std::vector<Video>& corpus,
                  const std::vector<std::string>& class_names,
                  const TrainConfig& config) {
  ValidateTrainConfig(config);
  if (corpus.empty()) throw std::invalid_argument("Train: empty corpus");
  const int D = corpus.front().features.D();
  for (const Video& v : corpus) {
    if (v.points.empty()) {
      throw std::invalid_argument("Train: video '" + v.id +
                                  "' has no point annotation");
    }
    if (v.features.D() != D) {
      throw std::invalid_argument("Train: video '" + v.id +
                                  "' has a different feature dimension");
    }
    ValidatePoints(v.points, v.features.T(),
                   static_cast<int>(class_names.size()));
  }

  ApnDims dims;
  dims.feature_dim = D;
  dims.num_classes = static_cast<int>(class_names.size());
  dims.embed_dim = config.embed_dim;
  dims.hidden_dim = config.hidden_dim;
  dims.confidence_temperature = config.confidence_temperature;
  TrainResult result{ApnModel(dims, config.seed), {}, {}, {}};
  ApnModel& model = result.model;
  if (!config.class_embeddings_file.empty()) {
    model.SetClassEmbeddings(LoadMatrixCsv(config.class_embeddings_file));
  } else {
    model.SetClassEmbeddings(
        BuildClassEmbeddings(class_names, DefaultPrompts(), config.embed_dim));
  }

  nn::Adam adam({config.lr, 0.9, 0.999, 1e-8});
  const nn::ParameterList params = model.parameters();

  result.pseudo = GenerateCorpusPseudoLabels(model, corpus, config, 0);
  result.pseudo_history.push_back({0, PseudoLabelMap(corpus, result.pseudo)});

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(config.seed ^ 0x5851f42d4c957f2dULL);

  int iter = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochLog row;
    row.epoch = epoch;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(
          order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double scale = 1.0 / static_cast<double>(stop - start);
      model.ZeroGrad();
      for (std::size_t b = start; b < stop; ++b) {
        const Video& v = corpus[order[b]];
        const PseudoLabelSet& pseudo = result.pseudo[order[b]];
        const auto targets = TrainingTargets(model, v.features.data(),
                                             v.points, pseudo, config);
        const LossBreakdown loss = VideoObjective(
            model, v.features.data(), pseudo, targets, config, scale, v.id);
        row.l_bdm += loss.bdm;
        row.l_pem += loss.pem;
        row.l_ctr += loss.ctr;
        row.total += loss.total;
      }
      adam.Step(params);
      model.NormalizeClassEmbeddings();
      ++iter;
      if (ShouldUpdate(iter, config.update_every)) {
        result.pseudo = GenerateCorpusPseudoLabels(model, corpus, config, iter);
        result.pseudo_history.push_back(
            {iter, PseudoLabelMap(corpus, result.pseudo)});
      }
    }
    const double n = static_cast<double>(corpus.size());
    row.l_bdm /= n;
    row.l_pem /= n;
    row.l_ctr /= n;
    row.total /= n;
    row.iter = iter;
    row.pseudo_map50 = result.pseudo_history.back().map50;
    result.log.push_back(row);
  }
  return result;
}

std::vector<ScoredPrediction> Infer(const ApnModel& model,
                                    const FeatureSequence& features,
                                    const TrainConfig& config) {
  const Matrix x = model.Embed(features.data());
  const int T = static_cast<int>(x.rows());
  const auto proposals = ProposalsFrom(model.Bdm(x), T, config);
  std::vector<ScoredPrediction> raw;
  for (const Interval& prop : proposals) {
    const ProposalSampler sampler(T, prop, config.num_samples,
                                  config.interpolation);
    const PemOutput pem = model.Pem(sampler.Apply(x));
    const Vector scores =
        (pem.class_probs.array() * pem.confidence.array()).matrix();
    if (config.multi_class_emission) {
      for (Eigen::Index c = 0; c < scores.size(); ++c) {
        raw.push_back({prop.t_s, prop.t_e, static_cast<int>(c), scores(c)});
      }
    } else {
      Eigen::Index best = 0;
      scores.maxCoeff(&best);
      raw.push_back({prop.t_s, prop.t_e, static_cast<int>(best), scores(best)});
    }
  }
  if (config.cross_class_nms) return Nms(std::move(raw), config.nms_threshold);
  return NmsPerClass(raw, config.nms_threshold);
}

std::vector<VideoPrediction> InferCorpus(const ApnModel& model,
                                         const std::vector<Video>& corpus,
                                         const TrainConfig& config) {
  std::vector<VideoPrediction> out;
  for (const Video& v : corpus) {
    for (const auto& p : Infer(model, v.features, config)) {
      out.push_back({v.id, p});
    }
  }
  return out;
}

void SaveCheckpoint(const std::string& path, ApnModel& model,
                    const TrainConfig& config) {
  auto meta = TrainConfigToMap(config);
  meta["feature_dim"] = std::to_string(model.dims().feature_dim);
  meta["num_classes"] = std::to_string(model.dims().num_classes);
  nn::SaveParameters(path, model.parameters(), meta);
}

LoadedCheckpoint LoadCheckpoint(const std::string& path) {
  auto meta = nn::ReadCheckpointMetadata(path);
  auto take_int = [&](const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw std::runtime_error(path + ": missing " + key);
    const int value = ToInt(key, it->second);
    meta.erase(it);
    return value;
  };
  ApnDims dims;
  dims.feature_dim = take_int("feature_dim");
  dims.num_classes = take_int("num_classes");
  TrainConfig config = ParseTrainConfig(meta);
  dims.embed_dim = config.embed_dim;
  dims.hidden_dim = config.hidden_dim;
  dims.confidence_temperature = config.confidence_temperature;
  LoadedCheckpoint loaded{ApnModel(dims, config.seed), config};
  nn::LoadParameters(path, loaded.model.parameters());
  return loaded;
}

void WriteMetricsCsv(const std::string& path,
                     const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,iter,L_BDM,L_PEM,L_CTR,total,pseudo_mAP50\n";
  for (const auto& row : log) {
    out << row.epoch << ',' << row.iter << ',' << FormatDouble(row.l_bdm)
        << ',' << FormatDouble(row.l_pem) << ',' << FormatDouble(row.l_ctr)
        << ',' << FormatDouble(row.total) << ','
        << (std::isnan(row.pseudo_map50) ? std::string()
                                         : FormatDouble(row.pseudo_map50))
        << '\n';
  }
}

}  // namespace pointloc
