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

// Command-line front end: gen-data, cluster, train, infer and eval.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pointloc/eval.h"
#include "pointloc/io.h"
#include "pointloc/pseudo_label.h"
#include "pointloc/strings.h"
#include "pointloc/synth.h"
#include "pointloc/train.h"

namespace pointloc {
namespace {

namespace fs = std::filesystem;

struct GenDataArgs {
  std::string config;
  std::string out;
};

int RunGenData(const GenDataArgs& args) {
  const CorpusConfig config = ParseCorpusConfig(LoadKeyValueFile(args.config));
  Dataset dataset{DefaultClassNames(config.num_classes), GenerateCorpus(config)};
  SaveDataset(args.out, dataset);
  std::cout << "wrote " << dataset.videos.size() << " videos to " << args.out
            << "\n";
  return 0;
}

struct ClusterArgs {
  std::string features;
  std::string annotations;
  std::string out;
  std::string video;
  double kappa = 0.5;
  int max_iters = 100;
};

int RunCluster(const ClusterArgs& args) {
  const FeatureSequence x = LoadFeatures(args.features);
  const std::vector<VideoAnnotation> all = LoadAnnotations(args.annotations);
  const VideoAnnotation* annotation = nullptr;
  if (args.video.empty()) {
    if (all.size() != 1) {
      throw std::invalid_argument(
          args.annotations + " holds " + std::to_string(all.size()) +
          " videos; pick one with --video");
    }
    annotation = &all.front();
  } else {
    for (const auto& a : all) {
      if (a.video_id == args.video) annotation = &a;
    }
    if (!annotation) {
      throw std::invalid_argument("video '" + args.video + "' not found in " +
                                  args.annotations);
    }
  }
  if (annotation->T != x.T()) {
    throw std::invalid_argument(
        "features have T=" + std::to_string(x.T()) + " but annotation of '" +
        annotation->video_id + "' says T=" + std::to_string(annotation->T));
  }
  const PseudoLabelSet pseudo = GeneratePseudoLabels(
      x, annotation->points, {.max_iters = args.max_iters, .kappa = args.kappa});
  SavePseudoLabels(args.out, {{*annotation, pseudo}});
  std::cout << annotation->video_id << ": " << pseudo.actions.size()
            << " pseudo actions, " << pseudo.backgrounds.size()
            << " background spans\n";
  return 0;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
};

int RunTrain(const TrainArgs& args) {
  const TrainConfig config = ParseTrainConfig(LoadKeyValueFile(args.config));
  const Dataset dataset = LoadDataset(args.data);
  fs::create_directories(args.out);
  TrainResult result = Train(dataset.videos, dataset.class_names, config);

  const fs::path out(args.out);
  SaveCheckpoint((out / "model.ckpt").string(), result.model, config);
  WriteMetricsCsv((out / "metrics.csv").string(), result.log);
  std::vector<VideoPseudoLabels> pseudo;
  for (std::size_t i = 0; i < dataset.videos.size(); ++i) {
    pseudo.push_back({AnnotationOf(dataset.videos[i]), result.pseudo[i]});
  }
  SavePseudoLabels((out / "pseudo.json").string(), pseudo);

  for (const EpochLog& row : result.log) {
    std::printf("epoch %d iter %d L_BDM %.4f L_PEM %.4f L_CTR %.4f total %.4f"
                " pseudo_mAP50 %.4f\n",
                row.epoch, row.iter, row.l_bdm, row.l_pem, row.l_ctr,
                row.total, row.pseudo_map50);
  }
  std::cout << "checkpoint: " << (out / "model.ckpt").string() << "\n";
  return 0;
}

struct InferArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
};

int RunInfer(const InferArgs& args) {
  const LoadedCheckpoint loaded = LoadCheckpoint(args.checkpoint);
  const Dataset dataset = LoadDataset(args.data);
  const auto preds = InferCorpus(loaded.model, dataset.videos, loaded.config);
  SavePredictions(args.out, preds);
  std::cout << "wrote " << preds.size() << " predictions to " << args.out
            << "\n";
  return 0;
}

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string grid = "anet";
  std::string csv;
};

int RunEval(const EvalArgs& args) {
  const auto preds = LoadPredictions(args.pred);
  const auto gt = GroundTruthRecords(LoadAnnotations(args.gt));
  const EvalReport report = Evaluate(preds, gt, ThresholdGrid(args.grid));
  for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
    std::printf("mAP@%-5s %.4f\n", FormatDouble(report.thresholds[i]).c_str(),
                report.map[i]);
  }
  std::printf("average  %.4f\n", report.average_map);
  if (!args.csv.empty()) {
    std::FILE* f = std::fopen(args.csv.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + args.csv + " for writing");
    const std::string text = FormatReportCsv(report);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
  }
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"Point-supervised temporal action localization"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  gen_cmd->add_option("--config", gen.config, "Corpus key-value file")
      ->required()
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  ClusterArgs cluster;
  auto* cluster_cmd =
      app.add_subcommand("cluster", "Pseudo labels for one video");
  cluster_cmd->add_option("--features", cluster.features, "Feature CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cluster_cmd->add_option("--annotations", cluster.annotations,
                          "annotations.json")
      ->required()
      ->check(CLI::ExistingFile);
  cluster_cmd->add_option("--out", cluster.out, "Output pseudo.json")
      ->required();
  cluster_cmd->add_option("--video", cluster.video,
                          "Video id when the annotation file holds several");
  cluster_cmd->add_option("--kappa", cluster.kappa, "Background threshold")
      ->capture_default_str();
  cluster_cmd->add_option("--max-iters", cluster.max_iters, "Clustering rounds")
      ->capture_default_str();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", train.config, "Training key-value file")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--data", train.data, "Dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out", train.out, "Output directory")->required();

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Predict action instances");
  infer_cmd->add_option("--checkpoint", infer.checkpoint, "Model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  infer_cmd->add_option("--data", infer.data, "Dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  infer_cmd->add_option("--out", infer.out, "Output predictions.json")
      ->required();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions");
  eval_cmd->add_option("--pred", eval.pred, "predictions.json")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--gt", eval.gt, "annotations.json")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--grid", eval.grid, "Threshold grid")
      ->check(CLI::IsMember({"anet", "thumos"}))
      ->capture_default_str();
  eval_cmd->add_option("--csv", eval.csv, "Optional CSV report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) return RunGenData(gen);
    if (*cluster_cmd) return RunCluster(cluster);
    if (*train_cmd) return RunTrain(train);
    if (*infer_cmd) return RunInfer(infer);
    if (*eval_cmd) return RunEval(eval);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace pointloc

int main(int argc, char** argv) { return pointloc::Main(argc, argv); }
