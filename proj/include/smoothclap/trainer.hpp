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

// Desk-scale training of the audio and text projection layers plus the
// prediction temperature. The frozen audio encoder and local-feature
// extractor are the identity over precomputed (standardized) feature rows;
// the text encoder is a multi-hot bag of tags.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smoothclap/error.hpp"
#include "smoothclap/io.hpp"
#include "smoothclap/numeric.hpp"
#include "smoothclap/objective.hpp"
#include "smoothclap/random.hpp"

namespace smoothclap {

struct ProjectionParams {
  Matrix weights;  // inDim × outDim
  std::vector<double> bias;

  static ProjectionParams initialize(std::size_t inDim, std::size_t outDim, Rng& rng) {
    ProjectionParams p{Matrix(inDim, outDim), std::vector<double>(outDim)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(inDim));
    for (double& w : p.weights.data()) w = rng.uniform(-bound, bound);
    for (double& b : p.bias) b = rng.uniform(-bound, bound);
    return p;
  }

  /// x · W + b, row by row.
  Matrix apply(const Matrix& x) const {
    Matrix out = matmul(x, weights);
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bias[j];
    return out;
  }

  friend bool operator==(const ProjectionParams&, const ProjectionParams&) = default;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update of `params` in place.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
    fail(ErrorCode::ShapeMismatch, "adam_step: parameter, gradient and moment sizes differ");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mHat = state.m[i] / c1;
    const double vHat = state.v[i] / c2;
    params[i] -= lr * mHat / (std::sqrt(vHat) + state.eps);
  }
}

struct TrainConfig {
  std::size_t batchSize = 32;
  std::size_t epochs = 10;
  double lrProjection = 1e-3;
  // Applies to trainable text-encoder weights; the multi-hot featurizer has none.
  double lrText = 1e-5;
  std::size_t embedDim = 16;
  std::uint64_t seed = 0;
  SmoothingConfig smoothing;
  Objective objective = Objective::Smooth;

  void validate() const {
    if (batchSize < 2) fail(ErrorCode::InvalidConfig, "batch size must be >= 2");
    if (epochs < 1) fail(ErrorCode::InvalidConfig, "epochs must be >= 1");
    if (embedDim < 1) fail(ErrorCode::InvalidConfig, "embedding dimension must be >= 1");
    if (!(lrProjection >= 0.0) || !(lrText >= 0.0)) fail(ErrorCode::InvalidConfig, "learning rates must be >= 0");
    if (objective == Objective::Smooth) {
      smoothing.validate();
    } else if (!(smoothing.tauPred > 0.0)) {
      fail(ErrorCode::NonPositiveTemperature, "tauPred must be > 0");
    }
  }
};

inline nlohmann::json to_json(const SmoothingConfig& s) {
  return {{"gamma", s.gamma}, {"beta", s.beta}, {"tau_a2a", s.tauA2A}, {"tau_t2t", s.tauT2T},
          {"tau_pred", s.tauPred}, {"kl_mode", std::string(to_string(s.klMode))}, {"floor", s.floor},
          {"clap_weight", s.clapWeight}};
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batchSize}, {"epochs", c.epochs}, {"lr_projection", c.lrProjection},
          {"lr_text", c.lrText}, {"embed_dim", c.embedDim}, {"seed", c.seed},
          {"objective", std::string(to_string(c.objective))}, {"smoothing", to_json(c.smoothing)}};
}

inline SmoothingConfig smoothing_from_json(const nlohmann::json& j) {
  SmoothingConfig s;
  s.gamma = j.at("gamma").get<double>();
  s.beta = j.at("beta").get<double>();
  s.tauA2A = j.at("tau_a2a").get<double>();
  s.tauT2T = j.at("tau_t2t").get<double>();
  s.tauPred = j.at("tau_pred").get<double>();
  s.klMode = j.at("kl_mode").get<std::string>() == "forward" ? KlMode::ForwardOnly : KlMode::Symmetric;
  s.floor = j.at("floor").get<double>();
  s.clapWeight = j.at("clap_weight").get<double>();
  return s;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batchSize = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.lrProjection = j.at("lr_projection").get<double>();
  c.lrText = j.at("lr_text").get<double>();
  c.embedDim = j.at("embed_dim").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.objective = j.at("objective").get<std::string>() == "clap" ? Objective::Clap : Objective::Smooth;
  c.smoothing = smoothing_from_json(j.at("smoothing"));
  return c;
}

struct TextFeatures {
  std::vector<double> values;
  std::size_t unknownTags = 0;
};

/// Multi-hot over a sorted vocabulary, l2-normalized. An empty or fully
/// unknown tag list gives the zero vector, which normalization rejects
/// further down.
inline TextFeatures featurize_text(const std::vector<std::string>& tags, const std::vector<std::string>& vocabulary) {
  if (vocabulary.empty()) fail(ErrorCode::EmptyVocabulary, "text featurizer needs a non-empty vocabulary");
  TextFeatures out{std::vector<double>(vocabulary.size(), 0.0), 0};
  for (const auto& t : tags) {
    auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), t);
    if (it == vocabulary.end() || *it != t) {
      ++out.unknownTags;
      continue;
    }
    out.values[static_cast<std::size_t>(it - vocabulary.begin())] = 1.0;
  }
  const double n = norm2(out.values);
  if (n > 0.0)
    for (double& v : out.values) v /= n;
  return out;
}

inline std::vector<std::string> build_vocabulary(const std::vector<std::vector<std::string>>& tagLists) {
  std::set<std::string> s;
  for (const auto& tags : tagLists) s.insert(tags.begin(), tags.end());
  return {s.begin(), s.end()};
}

inline Matrix featurize_text_rows(const std::vector<std::vector<std::string>>& tagLists,
                                  const std::vector<std::string>& vocabulary, std::size_t* unknown = nullptr) {
  Matrix m(tagLists.size(), vocabulary.size());
  std::size_t unk = 0;
  for (std::size_t i = 0; i < tagLists.size(); ++i) {
    const auto f = featurize_text(tagLists[i], vocabulary);
    unk += f.unknownTags;
    std::copy(f.values.begin(), f.values.end(), m.row(i).begin());
  }
  if (unknown) *unknown = unk;
  return m;
}

/// Per-column standardization fitted on training features.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static FeatureScaler fit(const Matrix& x) {
    FeatureScaler s{std::vector<double>(x.cols(), 0.0), std::vector<double>(x.cols(), 1.0)};
    const double n = static_cast<double>(x.rows());
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i) sum += x(i, j);
      s.mean[j] = sum / n;
      double ss = 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i) ss += (x(i, j) - s.mean[j]) * (x(i, j) - s.mean[j]);
      const double sd = std::sqrt(ss / n);
      s.scale[j] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  Matrix transform(const Matrix& x) const {
    if (x.cols() != mean.size()) fail(ErrorCode::ShapeMismatch, "feature width differs from the fitted scaler");
    Matrix out = x;
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
    return out;
  }
};

struct TrainedModel {
  std::vector<std::string> vocabulary;
  FeatureScaler scaler;
  ProjectionParams audioProjection;
  ProjectionParams textProjection;
  double logTauPred = 0.0;
  std::vector<double> history;  // mean loss per epoch
  TrainConfig config;

  /// Unit-norm audio embeddings for raw (unstandardized) feature rows.
  Matrix embed_audio(const Matrix& features) const {
    return l2_normalize_rows(audioProjection.apply(scaler.transform(features)));
  }

  /// Unit-norm text embeddings for tag lists.
  Matrix embed_text(const std::vector<std::vector<std::string>>& tagLists) const {
    return l2_normalize_rows(textProjection.apply(featurize_text_rows(tagLists, vocabulary)));
  }
};

/// Epoch permutation from a counter-based stream keyed by (seed, epoch).
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x65706f6368ULL + epoch));
  rng.shuffle(order);
  return order;
}

namespace detail {

inline Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) std::copy(m.row(idx[r]).begin(), m.row(idx[r]).end(), out.row(r).begin());
  return out;
}

// Gradients of x·W + b given dL/d(output).
inline void projection_grads(const Matrix& x, const Matrix& dOut, Matrix& dW, std::vector<double>& db) {
  dW = matmul(x.transpose(), dOut);
  db.assign(dOut.cols(), 0.0);
  for (std::size_t i = 0; i < dOut.rows(); ++i)
    for (std::size_t j = 0; j < dOut.cols(); ++j) db[j] += dOut(i, j);
}

}  // namespace detail

/// Optimizer state for one model, so single steps can be driven externally.
class Trainer {
 public:
  Trainer(const Matrix& audioFeatures, const std::vector<std::vector<std::string>>& tagLists, TrainConfig config)
      : config_(std::move(config)) {
    config_.validate();
    if (audioFeatures.rows() != tagLists.size()) {
      fail(ErrorCode::InsufficientData, "feature rows and tag lists differ in count");
    }
    if (audioFeatures.rows() < config_.batchSize) {
      fail(ErrorCode::InsufficientData, std::to_string(audioFeatures.rows()) + " samples < batch size " +
                                            std::to_string(config_.batchSize));
    }
    model_.config = config_;
    model_.vocabulary = build_vocabulary(tagLists);
    model_.scaler = FeatureScaler::fit(audioFeatures);
    features_ = model_.scaler.transform(audioFeatures);
    text_ = featurize_text_rows(tagLists, model_.vocabulary);

    Rng rng(derive_seed(config_.seed, 0x696e6974ULL));
    model_.audioProjection = ProjectionParams::initialize(features_.cols(), config_.embedDim, rng);
    model_.textProjection = ProjectionParams::initialize(text_.cols(), config_.embedDim, rng);
    model_.logTauPred = std::log(config_.smoothing.tauPred);

    adamAudioW_ = AdamState(model_.audioProjection.weights.data().size());
    adamAudioB_ = AdamState(config_.embedDim);
    adamTextW_ = AdamState(model_.textProjection.weights.data().size());
    adamTextB_ = AdamState(config_.embedDim);
    adamTau_ = AdamState(1);
  }

  /// Loss of the current parameters on the given sample indices.
  LossOutput evaluate(std::span<const std::size_t> idx) const {
    const Matrix x = detail::gather_rows(features_, idx);
    const Matrix t = detail::gather_rows(text_, idx);
    EmbeddingBatch batch(model_.audioProjection.apply(x), model_.textProjection.apply(t), x);
    SmoothingConfig cfg = config_.smoothing;
    cfg.tauPred = std::exp(model_.logTauPred);
    return loss_and_grad(batch, cfg, config_.objective);
  }

  /// One Adam step on the given batch; returns the pre-step loss.
  double step(std::span<const std::size_t> idx) {
    const LossOutput out = evaluate(idx);
    if (!std::isfinite(out.value)) {
      fail(ErrorCode::NonFiniteLoss, "loss became non-finite at Adam step " + std::to_string(adamTau_.step + 1) +
                                         " (log tau_pred = " + std::to_string(model_.logTauPred) + ")");
    }
    const Matrix x = detail::gather_rows(features_, idx);
    const Matrix t = detail::gather_rows(text_, idx);
    Matrix dW;
    std::vector<double> db;
    const double lr = config_.lrProjection;

    detail::projection_grads(x, out.gradAudio, dW, db);
    adam_step(model_.audioProjection.weights.data(), dW.data(), adamAudioW_, lr);
    adam_step(model_.audioProjection.bias, db, adamAudioB_, lr);
    detail::projection_grads(t, out.gradText, dW, db);
    adam_step(model_.textProjection.weights.data(), dW.data(), adamTextW_, lr);
    adam_step(model_.textProjection.bias, db, adamTextB_, lr);
    const double gTau = out.gradLogTauPred;
    adam_step(std::span<double>(&model_.logTauPred, 1), std::span<const double>(&gTau, 1), adamTau_, lr);
    return out.value;
  }

  /// Mean batch loss over one shuffled pass; the incomplete tail batch is dropped.
  double run_epoch(std::size_t epoch) {
    const auto order = epoch_order(features_.rows(), config_.seed, epoch);
    const std::size_t batches = order.size() / config_.batchSize;
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      total += step(std::span<const std::size_t>(order).subspan(b * config_.batchSize, config_.batchSize));
    }
    const double mean = total / static_cast<double>(batches);
    model_.history.push_back(mean);
    return mean;
  }

  const TrainedModel& model() const noexcept { return model_; }
  std::size_t size() const noexcept { return features_.rows(); }

 private:
  TrainConfig config_;
  TrainedModel model_;
  Matrix features_;
  Matrix text_;
  AdamState adamAudioW_, adamAudioB_, adamTextW_, adamTextB_, adamTau_;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

inline TrainedModel train(const Matrix& audioFeatures, const std::vector<std::vector<std::string>>& tagLists,
                          const TrainConfig& config, const EpochCallback& onEpoch = {}) {
  Trainer trainer(audioFeatures, tagLists, config);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    const double loss = trainer.run_epoch(e);
    if (onEpoch) onEpoch(e, loss);
  }
  return trainer.model();
}

// Serialization ---------------------------------------------------------------

inline nlohmann::json to_json(const ProjectionParams& p) {
  return {{"weights", matrix_to_json(p.weights)}, {"bias", encode_doubles(p.bias)}};
}

inline ProjectionParams projection_from_json(const nlohmann::json& j) {
  return {matrix_from_json(j.at("weights")), decode_doubles(j.at("bias").get<std::string>())};
}

inline nlohmann::json to_json(const TrainedModel& m) {
  return {{"format", "smoothclap-model/1"},
          {"config", to_json(m.config)},
          {"vocabulary", m.vocabulary},
          {"feature_mean", encode_doubles(m.scaler.mean)},
          {"feature_scale", encode_doubles(m.scaler.scale)},
          {"audio_projection", to_json(m.audioProjection)},
          {"text_projection", to_json(m.textProjection)},
          {"log_tau_pred", encode_doubles(std::span<const double>(&m.logTauPred, 1))},
          {"history", m.history}};
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "smoothclap-model/1") fail(ErrorCode::ParseError, "not a smoothclap model file");
  TrainedModel m;
  m.config = train_config_from_json(j.at("config"));
  m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  m.scaler.mean = decode_doubles(j.at("feature_mean").get<std::string>());
  m.scaler.scale = decode_doubles(j.at("feature_scale").get<std::string>());
  m.audioProjection = projection_from_json(j.at("audio_projection"));
  m.textProjection = projection_from_json(j.at("text_projection"));
  const auto tau = decode_doubles(j.at("log_tau_pred").get<std::string>());
  if (tau.size() != 1) fail(ErrorCode::ParseError, "log_tau_pred must hold one value");
  m.logTauPred = tau[0];
  m.history = j.at("history").get<std::vector<double>>();
  return m;
}

}  // namespace smoothclap
