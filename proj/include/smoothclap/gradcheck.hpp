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

// Central finite-difference verification of loss_and_grad. The numerical
// side only ever calls loss_with_targets (the forward path), never the
// analytic backward code it is checking.

#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "smoothclap/objective.hpp"
#include "smoothclap/random.hpp"

namespace smoothclap {

struct GradCheckCase {
  std::size_t batch = 4;
  std::size_t dim = 3;
  std::size_t localDim = 5;
  SmoothingConfig cfg;
  Objective objective = Objective::Smooth;
  std::uint64_t seed = 0;

  std::string describe() const {
    std::ostringstream os;
    os << "B=" << batch << " d=" << dim << " objective=" << to_string(objective) << " gamma=" << cfg.gamma
       << " beta=" << cfg.beta << " kl=" << to_string(cfg.klMode) << " tau_pred=" << cfg.tauPred
       << " seed=" << seed;
    return os.str();
  }
};

struct GradCheckResult {
  double maxRelError = 0.0;
  std::string worstParameter;
  std::size_t parametersChecked = 0;
};

/// Relative error with a small absolute floor so components that are
/// analytically ~0 are judged on absolute agreement.
inline double relative_error(double analytic, double numeric, double absFloor = 1e-6) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), absFloor});
  return std::abs(analytic - numeric) / denom;
}

inline EmbeddingBatch random_batch(std::size_t batch, std::size_t dim, std::size_t localDim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x67726164));
  auto fill = [&rng](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.normal();
    return m;
  };
  Matrix a = fill(batch, dim);
  Matrix t = fill(batch, dim);
  Matrix l = fill(batch, localDim);
  return EmbeddingBatch(std::move(a), std::move(t), std::move(l));
}

/// Compares every analytic gradient component against central differences
/// with step h. `corruptGradient` perturbs one analytic component and exists
/// only to self-test the harness.
inline GradCheckResult check_gradients(const EmbeddingBatch& batch, const SmoothingConfig& cfg, Objective objective,
                                       double h = 1e-5, bool corruptGradient = false) {
  LossOutput analytic = loss_and_grad(batch, cfg, objective);
  if (corruptGradient) analytic.gradAudio(0, 0) += 1e-3;

  const RowStochasticMatrix y = build_targets(batch, cfg);
  const double logTau = std::log(cfg.tauPred);
  GradCheckResult res;

  auto record = [&res](double a, double n, const std::string& name) {
    const double e = relative_error(a, n);
    ++res.parametersChecked;
    if (e > res.maxRelError || res.worstParameter.empty()) {
      res.maxRelError = e;
      res.worstParameter = name;
    }
  };

  auto sweep = [&](bool audioSide) {
    Matrix a = batch.rawAudio();
    Matrix t = batch.rawText();
    Matrix& target = audioSide ? a : t;
    const Matrix& grad = audioSide ? analytic.gradAudio : analytic.gradText;
    for (std::size_t i = 0; i < target.rows(); ++i) {
      for (std::size_t k = 0; k < target.cols(); ++k) {
        const double saved = target(i, k);
        target(i, k) = saved + h;
        const double up = loss_with_targets(a, t, logTau, y, cfg, objective);
        target(i, k) = saved - h;
        const double down = loss_with_targets(a, t, logTau, y, cfg, objective);
        target(i, k) = saved;
        record(grad(i, k), (up - down) / (2.0 * h),
               std::string(audioSide ? "audio" : "text") + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
      }
    }
  };
  sweep(true);
  sweep(false);

  const double up = loss_with_targets(batch.rawAudio(), batch.rawText(), logTau + h, y, cfg, objective);
  const double down = loss_with_targets(batch.rawAudio(), batch.rawText(), logTau - h, y, cfg, objective);
  record(analytic.gradLogTauPred, (up - down) / (2.0 * h), "log_tau_pred");
  return res;
}

inline GradCheckResult check_gradients(const GradCheckCase& c, double h = 1e-5, bool corruptGradient = false) {
  const EmbeddingBatch batch = random_batch(c.batch, c.dim, c.localDim, c.seed);
  return check_gradients(batch, c.cfg, c.objective, h, corruptGradient);
}

/// The default verification grid: every (gamma, beta, KL mode) combination
/// under the soft objective plus the InfoNCE baseline, cycling batch sizes
/// {2, 4, 8} and dimensions {3, 16}.
inline std::vector<GradCheckCase> default_gradcheck_suite(std::uint64_t seed) {
  const std::size_t batches[] = {2, 4, 8};
  const std::size_t dims[] = {3, 16};
  const double gammas[] = {0.0, 0.5, 1.0};
  const double betas[] = {0.1, 0.5, 1.0};
  const KlMode modes[] = {KlMode::Symmetric, KlMode::ForwardOnly};

  Rng rng(derive_seed(seed, 0x7375697465));
  std::vector<GradCheckCase> cases;
  std::size_t idx = 0;
  for (double g : gammas) {
    for (double b : betas) {
      for (KlMode m : modes) {
        GradCheckCase c;
        c.batch = batches[idx % 3];
        c.dim = dims[(idx / 3) % 2];
        c.cfg.gamma = g;
        c.cfg.beta = b;
        c.cfg.klMode = m;
        c.cfg.tauPred = rng.uniform(0.1, 1.0);
        c.objective = Objective::Smooth;
        c.seed = rng.next();
        cases.push_back(c);
        ++idx;
      }
    }
  }
  for (std::size_t b : batches) {
    for (std::size_t d : dims) {
      GradCheckCase c;
      c.batch = b;
      c.dim = d;
      c.cfg.klMode = KlMode::ForwardOnly;
      c.cfg.tauPred = rng.uniform(0.1, 1.0);
      c.objective = Objective::Clap;
      c.seed = rng.next();
      cases.push_back(c);
    }
  }
  // Composite objective with a nonzero InfoNCE weight.
  GradCheckCase c;
  c.batch = 8;
  c.dim = 16;
  c.cfg.clapWeight = 0.3;
  c.cfg.tauPred = rng.uniform(0.1, 1.0);
  c.seed = rng.next();
  cases.push_back(c);
  return cases;
}

}  // namespace smoothclap
