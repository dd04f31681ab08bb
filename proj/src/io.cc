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

#include "pointloc/io.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pointloc/strings.h"

namespace pointloc {

using nlohmann::json;

namespace {

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path);
}

json ParseJsonFile(const std::string& path) {
  try {
    return json::parse(ReadFile(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

// Schema errors carry the path and the JSON location of the bad field.
[[noreturn]] void SchemaError(const std::string& path,
                              const std::string& where,
                              const std::string& what) {
  throw std::runtime_error(path + ": " + where + ": " + what);
}

int RequireInt(const json& obj, const char* key, const std::string& path,
               const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    SchemaError(path, where, std::string("missing field '") + key + "'");
  }
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    SchemaError(path, where, std::string("field '") + key +
                                 "' must be an integer");
  }
  return v.get<int>();
}

double RequireNumber(const json& obj, const char* key, const std::string& path,
                     const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    SchemaError(path, where, std::string("missing field '") + key + "'");
  }
  const json& v = obj.at(key);
  if (!v.is_number()) {
    SchemaError(path, where, std::string("field '") + key +
                                 "' must be a number");
  }
  return v.get<double>();
}

std::string RequireString(const json& obj, const char* key,
                          const std::string& path, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_string()) {
    SchemaError(path, where, std::string("missing string field '") + key + "'");
  }
  return obj.at(key).get<std::string>();
}

const json& RequireArray(const json& obj, const char* key,
                         const std::string& path, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_array()) {
    SchemaError(path, where, std::string("missing array field '") + key + "'");
  }
  return obj.at(key);
}

json InstanceJson(const ActionInstance& inst) {
  json j = {{"t_s", inst.t_s}, {"t_e", inst.t_e}};
  if (inst.class_id) j["class_id"] = *inst.class_id;
  return j;
}

json AnnotationJson(const VideoAnnotation& v) {
  json gt = json::array();
  for (const auto& inst : v.gt) gt.push_back(InstanceJson(inst));
  json points = json::array();
  for (const auto& p : v.points) {
    points.push_back({{"t_p", p.t_p}, {"class_id", p.class_id}});
  }
  return {{"video_id", v.video_id}, {"T", v.T}, {"gt", gt}, {"points", points}};
}

}  // namespace

// ---------------------------------------------------------------------------
// CSV

void SaveMatrixCsv(const std::string& path, const Matrix& matrix) {
  std::string out;
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      if (c > 0) out += ',';
      out += FormatDouble(matrix(r, c));
    }
    out += '\n';
  }
  WriteFile(path, out);
}

Matrix LoadMatrixCsv(const std::string& path) {
  const std::string text = ReadFile(path);
  std::vector<std::vector<double>> rows;
  std::size_t expected_cols = 0;
  int line_no = 0;
  for (std::string_view line : Split(text, '\n')) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto cells = Split(line, ',');
    if (rows.empty()) {
      expected_cols = cells.size();
    } else if (cells.size() != expected_cols) {
      throw std::runtime_error(
          path + ": row " + std::to_string(line_no) + " has " +
          std::to_string(cells.size()) + " columns, expected " +
          std::to_string(expected_cols));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto value = ParseDouble(cells[c]);
      if (!value) {
        throw std::runtime_error(path + ": row " + std::to_string(line_no) +
                                 ", column " + std::to_string(c + 1) +
                                 ": cannot parse '" + std::string(cells[c]) +
                                 "' as a number");
      }
      row.push_back(*value);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": T=0 not allowed");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(expected_cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < expected_cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

void SaveFeatures(const std::string& path, const FeatureSequence& features) {
  SaveMatrixCsv(path, features.data());
}

FeatureSequence LoadFeatures(const std::string& path) {
  Matrix m = LoadMatrixCsv(path);
  try {
    return FeatureSequence(std::move(m));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Annotations

void SaveAnnotations(const std::string& path,
                     const std::vector<VideoAnnotation>& videos) {
  json root = json::array();
  for (const auto& v : videos) root.push_back(AnnotationJson(v));
  WriteFile(path, root.dump(1) + "\n");
}

std::vector<VideoAnnotation> LoadAnnotations(const std::string& path) {
  const json root = ParseJsonFile(path);
  if (!root.is_array()) SchemaError(path, "root", "expected an array");
  std::vector<VideoAnnotation> out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& item = root[i];
    const std::string where = "video[" + std::to_string(i) + "]";
    VideoAnnotation v;
    v.video_id = RequireString(item, "video_id", path, where);
    v.T = RequireInt(item, "T", path, where);
    if (v.T < 1) SchemaError(path, where, "T must be >= 1");
    const json& gt = RequireArray(item, "gt", path, where);
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const std::string w = where + ".gt[" + std::to_string(g) + "]";
      ActionInstance inst{RequireInt(gt[g], "t_s", path, w),
                          RequireInt(gt[g], "t_e", path, w),
                          RequireInt(gt[g], "class_id", path, w)};
      try {
        ValidateInstance(inst, v.T);
      } catch (const std::invalid_argument& e) {
        SchemaError(path, w, e.what());
      }
      v.gt.push_back(inst);
    }
    const json& points = RequireArray(item, "points", path, where);
    for (std::size_t p = 0; p < points.size(); ++p) {
      const std::string w = where + ".points[" + std::to_string(p) + "]";
      v.points.push_back({RequireInt(points[p], "t_p", path, w),
                          RequireInt(points[p], "class_id", path, w)});
    }
    try {
      ValidatePoints(v.points, v.T, 0);
    } catch (const std::invalid_argument& e) {
      SchemaError(path, where, e.what());
    }
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Predictions

void SortPredictions(std::vector<VideoPrediction>& predictions) {
  std::stable_sort(predictions.begin(), predictions.end(),
                   [](const VideoPrediction& a, const VideoPrediction& b) {
                     if (a.video_id != b.video_id) return a.video_id < b.video_id;
                     return a.prediction.score > b.prediction.score;
                   });
}

void SavePredictions(const std::string& path,
                     std::vector<VideoPrediction> predictions) {
  SortPredictions(predictions);
  json root = json::array();
  for (const auto& p : predictions) {
    root.push_back({{"video_id", p.video_id},
                    {"t_s", p.prediction.t_s},
                    {"t_e", p.prediction.t_e},
                    {"class_id", p.prediction.class_id},
                    {"score", p.prediction.score}});
  }
  WriteFile(path, root.dump(1) + "\n");
}

std::vector<VideoPrediction> LoadPredictions(const std::string& path) {
  const json root = ParseJsonFile(path);
  if (!root.is_array()) SchemaError(path, "root", "expected an array");
  std::vector<VideoPrediction> out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string where = "prediction[" + std::to_string(i) + "]";
    const json& item = root[i];
    VideoPrediction p;
    p.video_id = RequireString(item, "video_id", path, where);
    p.prediction.t_s = RequireInt(item, "t_s", path, where);
    p.prediction.t_e = RequireInt(item, "t_e", path, where);
    p.prediction.class_id = RequireInt(item, "class_id", path, where);
    p.prediction.score = RequireNumber(item, "score", path, where);
    if (p.prediction.t_s > p.prediction.t_e) {
      SchemaError(path, where, "t_s > t_e");
    }
    if (!(p.prediction.score >= 0.0 && p.prediction.score <= 1.0)) {
      SchemaError(path, where, "score must lie in [0, 1]");
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pseudo labels

void SavePseudoLabels(const std::string& path,
                      const std::vector<VideoPseudoLabels>& videos) {
  json root = json::array();
  for (const auto& v : videos) {
    json item = AnnotationJson(v.annotation);
    json actions = json::array();
    for (const auto& a : v.pseudo.actions) actions.push_back(InstanceJson(a));
    json backgrounds = json::array();
    for (const auto& b : v.pseudo.backgrounds) {
      backgrounds.push_back(InstanceJson(b));
    }
    item["pseudo_actions"] = actions;
    item["backgrounds"] = backgrounds;
    item["epoch_tag"] = v.pseudo.epoch_tag;
    root.push_back(std::move(item));
  }
  WriteFile(path, root.dump(1) + "\n");
}

// ---------------------------------------------------------------------------
// Config files

std::map<std::string, std::string> LoadKeyValueFile(const std::string& path) {
  const std::string text = ReadFile(path);
  std::map<std::string, std::string> out;
  int line_no = 0;
  for (std::string_view line : Split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    auto sep = line.find('=');
    if (sep == std::string_view::npos) sep = line.find_first_of(" \t");
    if (sep == std::string_view::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 'key = value'");
    }
    const std::string key(Trim(line.substr(0, sep)));
    const std::string value(Trim(line.substr(sep + 1)));
    if (key.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": empty key");
    }
    out[key] = value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset directories

VideoAnnotation AnnotationOf(const Video& video) {
  return {video.id, video.features.T(), video.gt, video.points};
}

void SaveDataset(const std::string& dir, const Dataset& dataset) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "features");
  std::vector<VideoAnnotation> annotations;
  for (const Video& v : dataset.videos) {
    SaveFeatures((fs::path(dir) / "features" / (v.id + ".csv")).string(),
                 v.features);
    annotations.push_back(AnnotationOf(v));
  }
  SaveAnnotations((fs::path(dir) / "annotations.json").string(), annotations);
  std::string classes;
  for (const auto& name : dataset.class_names) classes += name + "\n";
  WriteFile((fs::path(dir) / "classes.txt").string(), classes);
}

Dataset LoadDataset(const std::string& dir) {
  namespace fs = std::filesystem;
  Dataset dataset;
  const fs::path classes = fs::path(dir) / "classes.txt";
  if (fs::exists(classes)) {
    const std::string text = ReadFile(classes.string());
    for (std::string_view line : Split(text, '\n')) {
      line = Trim(line);
      if (!line.empty()) dataset.class_names.emplace_back(line);
    }
  }
  for (VideoAnnotation& a :
       LoadAnnotations((fs::path(dir) / "annotations.json").string())) {
    Video v;
    v.id = a.video_id;
    v.features = LoadFeatures(
        (fs::path(dir) / "features" / (a.video_id + ".csv")).string());
    if (v.features.T() != a.T) {
      throw std::runtime_error("video " + a.video_id + ": features have T=" +
                               std::to_string(v.features.T()) +
                               " but annotations say T=" + std::to_string(a.T));
    }
    v.gt = std::move(a.gt);
    v.points = std::move(a.points);
    dataset.videos.push_back(std::move(v));
  }
  int max_class = -1;
  for (const Video& v : dataset.videos) {
    for (const auto& p : v.points) max_class = std::max(max_class, p.class_id);
    for (const auto& g : v.gt) max_class = std::max(max_class, g.class_id.value_or(-1));
  }
  if (dataset.class_names.empty()) {
    dataset.class_names = DefaultClassNames(max_class + 1);
  } else if (static_cast<int>(dataset.class_names.size()) <= max_class) {
    throw std::runtime_error(dir + ": classes.txt lists " +
                             std::to_string(dataset.class_names.size()) +
                             " classes but class_id " +
                             std::to_string(max_class) + " is used");
  }
  return dataset;
}

}  // namespace pointloc
