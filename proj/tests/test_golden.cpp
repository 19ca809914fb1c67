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

// Every value in oracle/golden_values.json, reproduced by the library.
// The oracle is an mpmath script; see oracle/golden.py.

#include <cmath>
#include <fstream>
#include <set>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "smoothclap/evaluation.hpp"
#include "smoothclap/objective.hpp"
#include "smoothclap/paralinguistics.hpp"
#include "smoothclap/synth.hpp"
#include "smoothclap/trainer.hpp"

namespace smoothclap {
namespace {

constexpr double kTol = 1e-9;

const nlohmann::json& golden() {
  static const nlohmann::json j = [] {
    std::ifstream in(SMOOTHCLAP_GOLDEN_JSON);
    if (!in) throw std::runtime_error("cannot open " SMOOTHCLAP_GOLDEN_JSON);
    return nlohmann::json::parse(in);
  }();
  return j;
}

const nlohmann::json& g(const std::string& key) { return golden().at(key); }

// Keys the tests below read; a key added to the oracle must be added here too.
const std::set<std::string> kCovered{
    "l2_normalize_3_4",     "softmax_ln2_0",           "softmax_1000_999",
    "kl_onehot_vs_uniform", "kl_09_01_vs_01_09",       "gram_1_2_by_3_4",
    "percentile_30_of_1_to_10", "percentile_70_of_1_to_10", "log2",
    "score_06_08_vs_08_06", "intra_orthogonal_tau1",   "mix_gamma05",
    "smooth_beta05",        "predicted_2_0_0_2",       "soft_loss_b2_uniform_pred",
    "infonce_zero_scores",  "infonce_identity_scores", "full_batch",
    "uar_8_2_4_6",          "recalls_8_2_4_6",         "rms_db_sine_05",
    "jitter_45_55",         "shimmer_04_06",           "multihot_two_tags",
    "adam_first_step_lr1e-3"};

void expect_vec(std::span<const double> actual, const nlohmann::json& expected) {
  const auto e = expected.get<std::vector<double>>();
  ASSERT_EQ(actual.size(), e.size());
  for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(actual[i], e[i], kTol) << "index " << i;
}

void expect_mat(const Matrix& actual, const nlohmann::json& expected) {
  ASSERT_EQ(actual.rows(), expected.size());
  for (std::size_t i = 0; i < actual.rows(); ++i) expect_vec(actual.row(i), expected[i]);
}

Matrix from_json_rows(const nlohmann::json& j) {
  return Matrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

TEST(Golden, NumericPrimitives) {
  expect_vec(l2_normalize_rows(Matrix::from_rows({{3, 4}})).row(0), g("l2_normalize_3_4"));
  expect_vec(row_softmax(Matrix::from_rows({{std::log(2.0), 0}}), 1.0).row(0), g("softmax_ln2_0"));
  expect_vec(row_softmax(Matrix::from_rows({{1000, 999}}), 1.0).row(0), g("softmax_1000_999"));
  const std::vector<double> one{1, 0}, half{0.5, 0.5}, a{0.9, 0.1}, b{0.1, 0.9};
  EXPECT_NEAR(kl_row(one, half, 1e-12), g("kl_onehot_vs_uniform").get<double>(), kTol);
  EXPECT_NEAR(kl_row(a, b, 1e-12), g("kl_09_01_vs_01_09").get<double>(), kTol);
  EXPECT_NEAR(gram(Matrix::from_rows({{1, 2}}), Matrix::from_rows({{3, 4}}))(0, 0), g("gram_1_2_by_3_4").get<double>(),
              kTol);
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  EXPECT_EQ(percentile_nearest_rank(v, 30), g("percentile_30_of_1_to_10").get<double>());
  EXPECT_EQ(percentile_nearest_rank(v, 70), g("percentile_70_of_1_to_10").get<double>());
  EXPECT_NEAR(kl_row(one, half, 1e-12), g("log2").get<double>(), kTol);
}

TEST(Golden, TargetsAndPredictions) {
  EXPECT_NEAR(gram(Matrix::from_rows({{0.6, 0.8}}), Matrix::from_rows({{0.8, 0.6}}))(0, 0),
              g("score_06_08_vs_08_06").get<double>(), kTol);
  expect_mat(intra_modal_targets(Matrix::identity(2), 1.0).matrix(), g("intra_orthogonal_tau1"));
  const RowStochasticMatrix qa(Matrix::from_rows({{0.6, 0.4}}));
  const RowStochasticMatrix qt(Matrix::from_rows({{0.2, 0.8}}));
  expect_vec(mix_targets(qa, qt, 0.5).row(0), g("mix_gamma05"));
  const RowStochasticMatrix q(Matrix::from_rows({{0.6, 0.4}, {0.4, 0.6}}));
  expect_mat(smooth_targets(q, 0.5).matrix(), g("smooth_beta05"));
  expect_mat(predicted_distributions(Matrix::from_rows({{2, 0}, {0, 2}}), 1.0).audioToText.matrix(),
             g("predicted_2_0_0_2"));
}

TEST(Golden, Losses) {
  const RowStochasticMatrix y(Matrix::from_rows({{0.9, 0.1}, {0.1, 0.9}}));
  const RowStochasticMatrix u(Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
  SmoothingConfig cfg;
  EXPECT_NEAR(soft_loss(y, u, u, cfg), g("soft_loss_b2_uniform_pred").get<double>(), kTol);
  EXPECT_NEAR(clap_infonce(Matrix(2, 2), 1.0), g("infonce_zero_scores").get<double>(), kTol);
  EXPECT_NEAR(clap_infonce(Matrix::identity(2), 1.0), g("infonce_identity_scores").get<double>(), kTol);
}

TEST(Golden, FullBatchForwardPass) {
  const auto& fb = g("full_batch");
  SmoothingConfig cfg;
  cfg.gamma = fb.at("gamma").get<double>();
  cfg.beta = fb.at("beta").get<double>();
  cfg.tauA2A = fb.at("tau_a2a").get<double>();
  cfg.tauT2T = fb.at("tau_t2t").get<double>();
  cfg.tauPred = fb.at("tau_pred").get<double>();
  cfg.floor = fb.at("floor").get<double>();
  const EmbeddingBatch batch(from_json_rows(fb.at("audio")), from_json_rows(fb.at("text")),
                             from_json_rows(fb.at("local")));
  EXPECT_NEAR(loss_and_grad(batch, cfg, Objective::Smooth).value, fb.at("loss").get<double>(), kTol);
}

TEST(Golden, Evaluation) {
  std::vector<std::size_t> yTrue, yPred;
  auto add = [&](std::size_t t, std::size_t p, int n) {
    for (int k = 0; k < n; ++k) {
      yTrue.push_back(t);
      yPred.push_back(p);
    }
  };
  add(0, 0, 8);
  add(0, 1, 2);
  add(1, 0, 4);
  add(1, 1, 6);
  const EvalReport r = confusion_and_uar(yTrue, yPred, 2);
  EXPECT_NEAR(r.uar, g("uar_8_2_4_6").get<double>(), kTol);
  expect_vec(r.perClassRecall, g("recalls_8_2_4_6"));
}

TEST(Golden, SignalMeasures) {
  EXPECT_NEAR(rms_intensity(frame_signal(sine_wave(200.0, 0.5, 0.025)))[0], g("rms_db_sine_05").get<double>(), kTol);
  F0Track t;
  t.framesHz = {1.0 / 0.0045, 1.0 / 0.0055};
  t.voicedFlags = {true, true};
  EXPECT_NEAR(jitter_local(t).ratio, g("jitter_45_55").get<double>(), kTol);
  EXPECT_NEAR(detail::relative_perturbation({{0.4, 0.6}}).ratio, g("shimmer_04_06").get<double>(), kTol);
}

TEST(Golden, TrainerPieces) {
  const auto f = featurize_text({"a", "b"}, {"a", "b", "c"});
  EXPECT_NEAR(f.values[0], g("multihot_two_tags").get<double>(), kTol);
  EXPECT_NEAR(f.values[1], g("multihot_two_tags").get<double>(), kTol);
  std::vector<double> p{0.0};
  const std::vector<double> grad{1.0};
  AdamState s(1);
  adam_step(p, grad, s, 1e-3);
  EXPECT_NEAR(p[0], g("adam_first_step_lr1e-3").get<double>(), 1e-15);
}

TEST(Golden, EveryKeyIsCovered) {
  for (const auto& [k, v] : golden().items()) {
    if (k.front() == '_') continue;
    EXPECT_TRUE(kCovered.contains(k)) << "golden key '" << k << "' has no check";
  }
}

}  // namespace
}  // namespace smoothclap
