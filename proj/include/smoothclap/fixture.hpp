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

// Seeded synthetic corpus with graded class structure, and the
// train-then-zero-shot experiment run on it.
//
// Four classes form two overlapping pairs: {angry, fear} share "high
// arousal" and sit close together in feature space, {sad, calm} share "low
// arousal" and sit close together on the opposite side.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smoothclap/evaluation.hpp"
#include "smoothclap/numeric.hpp"
#include "smoothclap/random.hpp"
#include "smoothclap/trainer.hpp"

namespace smoothclap {

struct LabeledCorpus {
  std::vector<std::string> ids;
  Matrix features;
  std::vector<std::vector<std::string>> tags;
  std::vector<std::size_t> labels;
};

struct FuzzyFixtureParams {
  std::size_t trainPerClass = 64;
  std::size_t testPerClass = 64;
  std::size_t dim = 8;
  double groupOffset = 2.5;  // ± along axis 0 separates the pairs
  double pairOffset = 1.0;   // ± along axis 1 (first pair) or 2 (second) splits a pair
  double noise = 1.0;
};

struct FuzzyFixture {
  std::vector<std::string> classNames;
  Matrix centers;
  LabeledCorpus train;
  LabeledCorpus test;

  /// Ground-truth class proximity: negative center distance, upper triangle.
  std::vector<double> proximity() const {
    Matrix d(centers.rows(), centers.rows());
    for (std::size_t i = 0; i < centers.rows(); ++i)
      for (std::size_t j = 0; j < centers.rows(); ++j) {
        double ss = 0.0;
        for (std::size_t k = 0; k < centers.cols(); ++k) ss += (centers(i, k) - centers(j, k)) * (centers(i, k) - centers(j, k));
        d(i, j) = -std::sqrt(ss);
      }
    return upper_triangle(d);
  }
};

inline FuzzyFixture make_fuzzy_fixture(std::uint64_t seed, const FuzzyFixtureParams& p = {}) {
  if (p.dim < 3) fail(ErrorCode::InvalidConfig, "fixture needs at least 3 feature dimensions");
  FuzzyFixture fx;
  fx.classNames = {"angry", "fear", "sad", "calm"};
  const std::vector<std::string> arousal = {"high arousal", "high arousal", "low arousal", "low arousal"};
  fx.centers = Matrix(4, p.dim);
  fx.centers(0, 0) = p.groupOffset;
  fx.centers(0, 1) = p.pairOffset;
  fx.centers(1, 0) = p.groupOffset;
  fx.centers(1, 1) = -p.pairOffset;
  fx.centers(2, 0) = -p.groupOffset;
  fx.centers(2, 2) = p.pairOffset;
  fx.centers(3, 0) = -p.groupOffset;
  fx.centers(3, 2) = -p.pairOffset;

  auto draw = [&](std::size_t perClass, std::uint64_t stream, const std::string& prefix) {
    Rng rng(derive_seed(seed, stream));
    LabeledCorpus c;
    c.features = Matrix(4 * perClass, p.dim);
    for (std::size_t i = 0; i < 4 * perClass; ++i) {
      const std::size_t label = i % 4;
      c.labels.push_back(label);
      c.ids.push_back(prefix + std::to_string(i));
      c.tags.push_back({fx.classNames[label], arousal[label]});
      for (std::size_t k = 0; k < p.dim; ++k) c.features(i, k) = fx.centers(label, k) + p.noise * rng.normal();
    }
    return c;
  };
  fx.train = draw(p.trainPerClass, 1, "train");
  fx.test = draw(p.testPerClass, 2, "test");
  return fx;
}

struct FixtureRunResult {
  EvalReport report;
  double finalLoss = 0.0;
  double structureCorrelation = 0.0;  // Spearman(learned class similarity, proximity)
  TrainedModel model;
};

/// Trains on the fixture's training split, then evaluates zero-shot on the
/// test split with the bare class names as text queries.
inline FixtureRunResult run_fixture(const FuzzyFixture& fx, const TrainConfig& cfg) {
  FixtureRunResult out;
  out.model = train(fx.train.features, fx.train.tags, cfg);
  out.finalLoss = out.model.history.back();

  std::vector<std::vector<std::string>> queries;
  for (const auto& n : fx.classNames) queries.push_back({n});
  const Matrix audio = out.model.embed_audio(fx.test.features);
  out.report = evaluate_zero_shot(audio, fx.test.ids, fx.test.labels, out.model.embed_text(queries), fx.classNames);
  out.structureCorrelation =
      spearman(upper_triangle(class_centroid_similarity(audio, fx.test.labels, fx.classNames.size())), fx.proximity());
  return out;
}

}  // namespace smoothclap
