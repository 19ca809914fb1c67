// Copyright 2026 The SmoothCLAP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Zero-shot classification by cosine similarity to class-label queries,
// confusion matrices and unweighted average recall.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smoothclap/error.hpp"
#include "smoothclap/io.hpp"
#include "smoothclap/numeric.hpp"

namespace smoothclap {

struct Prediction {
  std::string id;
  std::size_t trueLabel = 0;
  std::size_t predictedLabel = 0;
  std::vector<double> scores;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct EvalReport {
  std::vector<std::string> classNames;
  std::vector<std::vector<std::size_t>> confusion;  // true × predicted
  std::vector<double> perClassRecall;               // 0 for unsupported classes
  std::vector<std::size_t> support;
  double uar = 0.0;
  std::vector<Prediction> predictions;
  std::vector<std::string> warnings;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct ZeroShotResult {
  std::vector<std::size_t> predicted;
  Matrix scores;  // cosine similarity, audio × query
};

/// Argmax of cosine similarity per audio row; the lowest class index wins ties.
inline ZeroShotResult zero_shot_classify(const Matrix& audioEmb, const Matrix& queryEmb) {
  if (audioEmb.cols() != queryEmb.cols()) fail(ErrorCode::ShapeMismatch, "audio and query embeddings differ in width");
  if (queryEmb.rows() < 2) fail(ErrorCode::ShapeMismatch, "zero-shot classification needs at least 2 classes");
  const Matrix scores = gram(l2_normalize_rows(audioEmb), l2_normalize_rows(queryEmb));
  ZeroShotResult r{std::vector<std::size_t>(audioEmb.rows(), 0), scores};
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = c;
    r.predicted[i] = best;
  }
  return r;
}

inline EvalReport confusion_and_uar(const std::vector<std::size_t>& yTrue, const std::vector<std::size_t>& yPred,
                                    std::size_t numClasses, std::vector<std::string> classNames = {}) {
  if (yTrue.size() != yPred.size()) fail(ErrorCode::LengthMismatch, "label and prediction lists differ in length");
  if (yTrue.empty()) fail(ErrorCode::LengthMismatch, "nothing to evaluate");
  if (classNames.empty()) {
    for (std::size_t c = 0; c < numClasses; ++c) classNames.push_back(std::to_string(c));
  }
  if (classNames.size() != numClasses) fail(ErrorCode::LengthMismatch, "class name count differs from class count");

  EvalReport r;
  r.classNames = std::move(classNames);
  r.confusion.assign(numClasses, std::vector<std::size_t>(numClasses, 0));
  for (std::size_t i = 0; i < yTrue.size(); ++i) {
    if (yTrue[i] >= numClasses || yPred[i] >= numClasses) {
      fail(ErrorCode::LabelOutOfRange, "label index out of range at position " + std::to_string(i));
    }
    ++r.confusion[yTrue[i]][yPred[i]];
  }
  double recallSum = 0.0;
  std::size_t supported = 0;
  for (std::size_t c = 0; c < numClasses; ++c) {
    const std::size_t rowSum = std::accumulate(r.confusion[c].begin(), r.confusion[c].end(), std::size_t{0});
    r.support.push_back(rowSum);
    if (rowSum == 0) {
      r.perClassRecall.push_back(0.0);
      r.warnings.push_back("class " + r.classNames[c] + " unsupported");
      continue;
    }
    const double recall = static_cast<double>(r.confusion[c][c]) / static_cast<double>(rowSum);
    r.perClassRecall.push_back(recall);
    recallSum += recall;
    ++supported;
  }
  r.uar = recallSum / static_cast<double>(supported);
  return r;
}

/// Full zero-shot evaluation: classify, then score against the true labels.
inline EvalReport evaluate_zero_shot(const Matrix& audioEmb, const std::vector<std::string>& ids,
                                     const std::vector<std::size_t>& yTrue, const Matrix& queryEmb,
                                     const std::vector<std::string>& classNames) {
  if (ids.size() != audioEmb.rows() || yTrue.size() != audioEmb.rows()) {
    fail(ErrorCode::LengthMismatch, "ids, labels and embeddings differ in count");
  }
  if (classNames.size() != queryEmb.rows()) fail(ErrorCode::ShapeMismatch, "one query per class is required");
  const ZeroShotResult zs = zero_shot_classify(audioEmb, queryEmb);
  EvalReport r = confusion_and_uar(yTrue, zs.predicted, classNames.size(), classNames);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto s = zs.scores.row(i);
    r.predictions.push_back({ids[i], yTrue[i], zs.predicted[i], {s.begin(), s.end()}});
  }
  return r;
}

struct ExternalEmbeddings {
  std::vector<std::string> ids;
  Matrix values;  // unit-norm rows
};

/// `id,e0..eN` CSV with every row l2-normalized, ids in file order.
inline ExternalEmbeddings ingest_external_embeddings(const std::filesystem::path& path) {
  IdMatrix m = read_id_matrix_csv(path);
  return {std::move(m.ids), l2_normalize_rows(m.values)};
}

// Similarity structure -------------------------------------------------------

/// Average ranks (ties share the mean rank), 1-based.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Spearman rank correlation (Pearson on average ranks). Returns 0 when
/// either side is constant.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::LengthMismatch, "spearman needs two equal lists of >= 2");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Cosine similarity between class centroids of unit-norm embeddings.
inline Matrix class_centroid_similarity(const Matrix& emb, const std::vector<std::size_t>& labels,
                                        std::size_t numClasses) {
  Matrix centroids(numClasses, emb.cols());
  std::vector<std::size_t> counts(numClasses, 0);
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    ++counts[labels[i]];
    for (std::size_t k = 0; k < emb.cols(); ++k) centroids(labels[i], k) += emb(i, k);
  }
  for (std::size_t c = 0; c < numClasses; ++c) {
    if (counts[c] == 0) fail(ErrorCode::EmptyInput, "class " + std::to_string(c) + " has no samples");
  }
  const Matrix unit = l2_normalize_rows(centroids);
  return gram(unit, unit);
}

/// Upper-triangle entries (i < j) in row order.
inline std::vector<double> upper_triangle(const Matrix& m) {
  std::vector<double> v;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) v.push_back(m(i, j));
  return v;
}

// Rendering ----------------------------------------------------------------------

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : r.predictions) {
    preds.push_back({{"id", p.id},
                     {"true", r.classNames[p.trueLabel]},
                     {"predicted", r.classNames[p.predictedLabel]},
                     {"scores", p.scores}});
  }
  return {{"class_names", r.classNames}, {"confusion", r.confusion}, {"per_class_recall", r.perClassRecall},
          {"support", r.support}, {"uar", r.uar}, {"warnings", r.warnings}, {"predictions", preds}};
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.classNames = j.at("class_names").get<std::vector<std::string>>();
  r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  r.perClassRecall = j.at("per_class_recall").get<std::vector<double>>();
  r.support = j.at("support").get<std::vector<std::size_t>>();
  r.uar = j.at("uar").get<double>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  auto index = [&r](const std::string& name) {
    auto it = std::find(r.classNames.begin(), r.classNames.end(), name);
    if (it == r.classNames.end()) fail(ErrorCode::ParseError, "prediction names unknown class '" + name + "'");
    return static_cast<std::size_t>(it - r.classNames.begin());
  };
  for (const auto& p : j.at("predictions")) {
    r.predictions.push_back({p.at("id").get<std::string>(), index(p.at("true").get<std::string>()),
                             index(p.at("predicted").get<std::string>()), p.at("scores").get<std::vector<double>>()});
  }
  return r;
}

/// Plain-text confusion matrix with recalls and the UAR line.
inline std::string confusion_table(const EvalReport& r) {
  std::size_t w = 9;
  for (const auto& n : r.classNames) w = std::max(w, n.size() + 1);
  auto pad = [w](const std::string& s) { return s + std::string(w > s.size() ? w - s.size() : 1, ' '); };
  std::string out = pad("true\\pred");
  for (const auto& n : r.classNames) out += pad(n);
  out += "recall\n";
  for (std::size_t c = 0; c < r.classNames.size(); ++c) {
    out += pad(r.classNames[c]);
    for (std::size_t v : r.confusion[c]) out += pad(std::to_string(v));
    char buf[32];
    if (r.support[c] == 0) std::snprintf(buf, sizeof buf, "n/a");
    else std::snprintf(buf, sizeof buf, "%.3f", r.perClassRecall[c]);
    out += std::string(buf) + "\n";
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, "UAR %.3f\n", r.uar);
  out += buf;
  return out;
}

inline std::string predictions_csv(const EvalReport& r) {
  std::string out = "id,true,predicted";
  for (const auto& n : r.classNames) out += ",score_" + n;
  out += "\n";
  for (const auto& p : r.predictions) {
    out += p.id + "," + r.classNames[p.trueLabel] + "," + r.classNames[p.predictedLabel];
    for (double s : p.scores) out += "," + format_double(s);
    out += "\n";
  }
  return out;
}

}  // namespace smoothclap
