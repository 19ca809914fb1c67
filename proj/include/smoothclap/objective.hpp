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

// Contrastive objectives over a minibatch of paired audio/text embeddings:
// the symmetric InfoNCE baseline and the soft-target loss whose targets
// blend the identity with intra-modal similarity distributions.
//
// Score convention: every function taking a score matrix `scores` expects
// the raw cosine gram (audio rows · text rows) and divides by the
// prediction temperature itself, so the temperature is applied once.

#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "smoothclap/error.hpp"
#include "smoothclap/numeric.hpp"

namespace smoothclap {

enum class KlMode { Symmetric, ForwardOnly };
enum class Objective { Clap, Smooth };

inline constexpr std::string_view to_string(KlMode m) {
  return m == KlMode::Symmetric ? "symmetric" : "forward";
}
inline constexpr std::string_view to_string(Objective o) {
  return o == Objective::Clap ? "clap" : "smooth";
}

struct SmoothingConfig {
  double gamma = 0.5;     // audio-side vs text-side mix
  double beta = 0.1;      // identity vs soft target fusion
  double tauA2A = 1.0;
  double tauT2T = 1.0;
  double tauPred = 0.1;   // initial value; learnable through log(tauPred)
  KlMode klMode = KlMode::Symmetric;
  double floor = 1e-8;
  double clapWeight = 0.0;  // λ in λ·L_clap + (1−λ)·L_soft

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) fail(ErrorCode::GammaOutOfRange, "gamma must lie in [0, 1]");
    if (!(beta >= 0.0 && beta <= 1.0)) fail(ErrorCode::BetaOutOfRange, "beta must lie in [0, 1]");
    if (!(tauA2A > 0.0 && tauT2T > 0.0 && tauPred > 0.0)) {
      fail(ErrorCode::NonPositiveTemperature, "all temperatures must be > 0");
    }
    if (!(floor > 0.0 && floor <= 1e-4)) fail(ErrorCode::InvalidConfig, "floor must lie in (0, 1e-4]");
    if (!(clapWeight >= 0.0 && clapWeight <= 1.0)) fail(ErrorCode::InvalidConfig, "clap weight must lie in [0, 1]");
    if (klMode == KlMode::Symmetric && beta == 0.0) {
      fail(ErrorCode::InvalidConfig, "symmetric KL needs beta > 0 (reverse KL against one-hot targets is undefined)");
    }
  }
};

/// Paired audio/text embeddings for one minibatch. Keeps the raw
/// (pre-normalization) rows so gradients can be taken with respect to them.
class EmbeddingBatch {
 public:
  EmbeddingBatch(Matrix audio, Matrix text, Matrix localAudio)
      : rawAudio_(std::move(audio)), rawText_(std::move(text)) {
    if (rawAudio_.rows() != rawText_.rows() || rawAudio_.rows() != localAudio.rows()) {
      fail(ErrorCode::ShapeMismatch, "audio, text and local features must have the same row count");
    }
    if (rawAudio_.cols() != rawText_.cols()) {
      fail(ErrorCode::ShapeMismatch, "audio and text embeddings must share a dimension");
    }
    if (rawAudio_.rows() < 2) fail(ErrorCode::ShapeMismatch, "a contrastive batch needs at least 2 pairs");
    audio_ = l2_normalize_rows(rawAudio_);
    text_ = l2_normalize_rows(rawText_);
    local_ = l2_normalize_rows(localAudio);
  }

  std::size_t size() const noexcept { return audio_.rows(); }
  const Matrix& audio() const noexcept { return audio_; }
  const Matrix& text() const noexcept { return text_; }
  const Matrix& localAudio() const noexcept { return local_; }
  const Matrix& rawAudio() const noexcept { return rawAudio_; }
  const Matrix& rawText() const noexcept { return rawText_; }

 private:
  Matrix rawAudio_, rawText_;
  Matrix audio_, text_, local_;
};

struct LossOutput {
  double value = 0.0;
  Matrix gradAudio;
  Matrix gradText;
  double gradLogTauPred = 0.0;
};

/// S(i, j) = <e^a_i, e^t_j> / tauPred.
inline Matrix cross_modal_scores(const EmbeddingBatch& batch, double tauPred) {
  if (!(tauPred > 0.0)) fail(ErrorCode::NonPositiveTemperature, "tauPred must be > 0");
  Matrix s = gram(batch.audio(), batch.text());
  for (double& v : s.data()) v /= tauPred;
  return s;
}

/// Softmax over j of <f_i, f_j> / tau. Used for both the audio-to-audio
/// distribution (on pooled local features) and text-to-text (on text rows).
inline RowStochasticMatrix intra_modal_targets(const Matrix& features, double tau) {
  if (!(tau > 0.0)) fail(ErrorCode::NonPositiveTemperature, "intra-modal temperature must be > 0");
  return row_softmax(gram(features, features), tau);
}

inline RowStochasticMatrix mix_targets(const RowStochasticMatrix& qA2A, const RowStochasticMatrix& qT2T,
                                       double gamma) {
  if (!qA2A.matrix().same_shape(qT2T.matrix())) fail(ErrorCode::ShapeMismatch, "target shapes differ");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail(ErrorCode::GammaOutOfRange, "gamma must lie in [0, 1]");
  Matrix q(qA2A.rows(), qA2A.cols());
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < q.cols(); ++j) q(i, j) = (1.0 - gamma) * qA2A(i, j) + gamma * qT2T(i, j);
  return RowStochasticMatrix(std::move(q));
}

/// y = (1 − beta)·I + beta·q.
inline RowStochasticMatrix smooth_targets(const RowStochasticMatrix& q, double beta) {
  if (q.rows() != q.cols()) fail(ErrorCode::NotSquare, "soft targets must be square");
  if (!(beta >= 0.0 && beta <= 1.0)) fail(ErrorCode::BetaOutOfRange, "beta must lie in [0, 1]");
  Matrix y(q.rows(), q.cols());
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) = (i == j ? 1.0 - beta : 0.0) + beta * q(i, j);
  return RowStochasticMatrix(std::move(y));
}

/// Full target construction for a batch: mix the two intra-modal
/// distributions, then fuse with the identity.
inline RowStochasticMatrix build_targets(const EmbeddingBatch& batch, const SmoothingConfig& cfg) {
  const auto qA2A = intra_modal_targets(batch.localAudio(), cfg.tauA2A);
  const auto qT2T = intra_modal_targets(batch.text(), cfg.tauT2T);
  return smooth_targets(mix_targets(qA2A, qT2T, cfg.gamma), cfg.beta);
}

struct PredictedDistributions {
  RowStochasticMatrix audioToText;
  RowStochasticMatrix textToAudio;
};

inline PredictedDistributions predicted_distributions(const Matrix& scores, double tauPred) {
  if (scores.rows() != scores.cols()) fail(ErrorCode::NotSquare, "score matrix must be square");
  return {row_softmax(scores, tauPred), row_softmax(scores.transpose(), tauPred)};
}

/// Symmetric (or forward-only) KL between targets and both predicted
/// directions, per-row KLs summed and divided by 2B.
inline double soft_loss(const RowStochasticMatrix& y, const RowStochasticMatrix& pA2T,
                        const RowStochasticMatrix& pT2A, const SmoothingConfig& cfg) {
  if (!y.matrix().same_shape(pA2T.matrix()) || !y.matrix().same_shape(pT2A.matrix()) || y.rows() != y.cols()) {
    fail(ErrorCode::ShapeMismatch, "soft_loss operands must all be BxB");
  }
  const bool symmetric = cfg.klMode == KlMode::Symmetric;
  if (symmetric) {
    for (double v : y.matrix().data()) {
      if (v < cfg.floor) fail(ErrorCode::ZeroMassTarget, "symmetric KL needs every target entry >= floor");
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    total += kl_row(y.row(i), pA2T.row(i), cfg.floor);
    total += kl_row(y.row(i), pT2A.row(i), cfg.floor);
    if (symmetric) {
      total += kl_row(pA2T.row(i), y.row(i), cfg.floor);
      total += kl_row(pT2A.row(i), y.row(i), cfg.floor);
    }
  }
  return total / (2.0 * static_cast<double>(y.rows()));
}

/// Symmetric InfoNCE: mean negative log-likelihood of the diagonal in both
/// softmax directions, averaged.
inline double clap_infonce(const Matrix& scores, double tauPred) {
  if (scores.rows() != scores.cols()) fail(ErrorCode::NotSquare, "score matrix must be square");
  if (scores.rows() < 2) fail(ErrorCode::ShapeMismatch, "InfoNCE needs B >= 2");
  const auto p = predicted_distributions(scores, tauPred);
  const double n = static_cast<double>(scores.rows());
  double a2t = 0.0, t2a = 0.0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    a2t -= std::log(p.audioToText(i, i));
    t2a -= std::log(p.textToAudio(i, i));
  }
  return 0.5 * (a2t / n + t2a / n);
}

/// Loss for fixed targets `y` as a function of the raw embeddings and the
/// log prediction temperature. This is the forward path the gradient is
/// taken of; targets are held constant (stop-gradient).
inline double loss_with_targets(const Matrix& rawAudio, const Matrix& rawText, double logTauPred,
                                const RowStochasticMatrix& y, const SmoothingConfig& cfg, Objective objective) {
  const double tau = std::exp(logTauPred);
  const Matrix g = gram(l2_normalize_rows(rawAudio), l2_normalize_rows(rawText));
  if (objective == Objective::Clap) return clap_infonce(g, tau);
  const auto p = predicted_distributions(g, tau);
  const double soft = soft_loss(y, p.audioToText, p.textToAudio, cfg);
  if (cfg.clapWeight == 0.0) return soft;
  return cfg.clapWeight * clap_infonce(g, tau) + (1.0 - cfg.clapWeight) * soft;
}

namespace detail {

// Backprop through one softmax row: given dL/dp, accumulate dL/dz into dz.
inline void softmax_row_backward(std::span<const double> p, std::span<const double> dp, Matrix& dz,
                                 std::size_t i, bool transposed) {
  double inner = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) inner += p[j] * dp[j];
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = p[k] * (dp[k] - inner);
    if (transposed) dz(k, i) += d;
    else dz(i, k) += d;
  }
}

// dL/dp for KL(y || p) + [symmetric] KL(p || y), both with the log floor.
inline void kl_pair_grad(std::span<const double> y, std::span<const double> p, double floor, bool symmetric,
                         double scale, std::vector<double>& dp) {
  for (std::size_t j = 0; j < p.size(); ++j) {
    double g = 0.0;
    if (y[j] != 0.0 && p[j] >= floor) g -= y[j] / p[j];
    if (symmetric) {
      const double yc = std::max(y[j], floor);
      if (p[j] != 0.0 && p[j] >= floor) g += std::log(p[j] / yc) + 1.0;
      else g += std::log(floor / yc);
    }
    dp[j] = scale * g;
  }
}

}  // namespace detail

/// Loss value plus exact gradients with respect to the raw audio and text
/// embeddings (through l2 normalization) and log(tauPred). Targets are
/// constants: no gradient flows through the intra-modal distributions.
inline LossOutput loss_and_grad(const EmbeddingBatch& batch, const SmoothingConfig& cfg, Objective objective) {
  cfg.validate();
  const std::size_t n = batch.size();
  const double nd = static_cast<double>(n);
  const double logTau = std::log(cfg.tauPred);

  const Matrix g = gram(batch.audio(), batch.text());
  const auto y = build_targets(batch, cfg);

  LossOutput out;
  out.value = loss_with_targets(batch.rawAudio(), batch.rawText(), logTau, y, cfg, objective);

  // dL/dz where z = g / tau; tau is rebuilt from logTau exactly as the forward path does.
  const double tau = std::exp(logTau);
  const auto p = predicted_distributions(g, tau);
  Matrix dz(n, n);
  const double clapW = objective == Objective::Clap ? 1.0 : cfg.clapWeight;
  const double softW = objective == Objective::Clap ? 0.0 : 1.0 - cfg.clapWeight;

  if (softW != 0.0) {
    const bool symmetric = cfg.klMode == KlMode::Symmetric;
    const double scale = softW / (2.0 * nd);
    std::vector<double> dp(n);
    for (std::size_t i = 0; i < n; ++i) {
      detail::kl_pair_grad(y.row(i), p.audioToText.row(i), cfg.floor, symmetric, scale, dp);
      detail::softmax_row_backward(p.audioToText.row(i), dp, dz, i, false);
      detail::kl_pair_grad(y.row(i), p.textToAudio.row(i), cfg.floor, symmetric, scale, dp);
      detail::softmax_row_backward(p.textToAudio.row(i), dp, dz, i, true);
    }
  }
  if (clapW != 0.0) {
    const double scale = clapW / (2.0 * nd);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double delta = i == j ? 1.0 : 0.0;
        dz(i, j) += scale * (p.audioToText(i, j) - delta);
        dz(j, i) += scale * (p.textToAudio(i, j) - delta);
      }
    }
  }

  // z = g·exp(−logTau)  ⇒  dz/dlogTau = −z.
  Matrix dg(n, n);
  double dLogTau = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      dg(i, j) = dz(i, j) / tau;
      dLogTau -= dz(i, j) * g(i, j) / tau;
    }
  }
  out.gradLogTauPred = dLogTau;

  const Matrix dEa = matmul(dg, batch.text());
  const Matrix dEt = matmul(dg.transpose(), batch.audio());

  auto through_normalize = [](const Matrix& raw, const Matrix& unit, const Matrix& dUnit) {
    Matrix d(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < raw.rows(); ++i) {
      const double r = norm2(raw.row(i));
      const double proj = dot(unit.row(i), dUnit.row(i));
      for (std::size_t k = 0; k < raw.cols(); ++k) d(i, k) = (dUnit(i, k) - unit(i, k) * proj) / r;
    }
    return d;
  };
  out.gradAudio = through_normalize(batch.rawAudio(), batch.audio(), dEa);
  out.gradText = through_normalize(batch.rawText(), batch.text(), dEt);
  return out;
}

}  // namespace smoothclap
