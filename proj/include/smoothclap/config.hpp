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

// Run configuration: dotted keys from an optional JSON file, overridden by
// command-line values. Unknown keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "smoothclap/error.hpp"
#include "smoothclap/io.hpp"
#include "smoothclap/trainer.hpp"

namespace smoothclap {

class RunConfig {
 public:
  using Value = nlohmann::json;

  /// Every key a config file or flag may set.
  static const std::map<std::string, std::string>& known_keys() {
    static const std::map<std::string, std::string> keys{
        {"seed", "integer seed for every random stream"},
        {"smoothing.gamma", "audio/text target mix in [0,1]"},
        {"smoothing.beta", "identity/soft target fusion in [0,1]"},
        {"smoothing.tau_a2a", "audio-to-audio target temperature"},
        {"smoothing.tau_t2t", "text-to-text target temperature"},
        {"smoothing.tau_pred", "initial prediction temperature"},
        {"smoothing.kl_mode", "symmetric | forward"},
        {"smoothing.floor", "probability floor inside KL logs"},
        {"smoothing.clap_weight", "weight of the InfoNCE term in the soft objective"},
        {"train.batch_size", "minibatch size"},
        {"train.epochs", "training epochs"},
        {"train.lr_projection", "Adam learning rate for projections and temperature"},
        {"train.lr_text", "Adam learning rate for text-encoder weights (none in the bag-of-tags featurizer)"},
        {"train.embed_dim", "shared embedding dimension"},
        {"train.objective", "clap | smooth"},
    };
    return keys;
  }

  /// Flattens nested objects into dotted keys.
  static RunConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorCode::InvalidConfig, "config file must hold a JSON object");
    RunConfig c;
    c.merge_json(j, "");
    return c;
  }

  static RunConfig from_file(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
    return from_json(j);
  }

  void set(const std::string& key, Value v) {
    if (!known_keys().contains(key)) fail(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    values_[key] = std::move(v);
  }

  bool has(const std::string& key) const { return values_.contains(key); }
  const std::map<std::string, Value>& values() const noexcept { return values_; }

  std::uint64_t seed() const { return get<std::uint64_t>("seed", 0); }

  TrainConfig train_config() const {
    TrainConfig t;
    t.seed = seed();
    t.batchSize = get<std::size_t>("train.batch_size", t.batchSize);
    t.epochs = get<std::size_t>("train.epochs", t.epochs);
    t.lrProjection = get<double>("train.lr_projection", t.lrProjection);
    t.lrText = get<double>("train.lr_text", t.lrText);
    t.embedDim = get<std::size_t>("train.embed_dim", t.embedDim);
    t.objective = parse_objective(get<std::string>("train.objective", "smooth"));
    SmoothingConfig& s = t.smoothing;
    s.gamma = get<double>("smoothing.gamma", s.gamma);
    s.beta = get<double>("smoothing.beta", s.beta);
    s.tauA2A = get<double>("smoothing.tau_a2a", s.tauA2A);
    s.tauT2T = get<double>("smoothing.tau_t2t", s.tauT2T);
    s.tauPred = get<double>("smoothing.tau_pred", s.tauPred);
    s.klMode = parse_kl_mode(get<std::string>("smoothing.kl_mode", "symmetric"));
    s.floor = get<double>("smoothing.floor", s.floor);
    s.clapWeight = get<double>("smoothing.clap_weight", s.clapWeight);
    return t;
  }

  /// The fully resolved configuration (defaults filled in).
  nlohmann::json effective() const { return to_json(train_config()); }

  static Objective parse_objective(const std::string& s) {
    if (s == "clap") return Objective::Clap;
    if (s == "smooth") return Objective::Smooth;
    fail(ErrorCode::InvalidConfig, "objective must be clap or smooth, got '" + s + "'");
  }

  static KlMode parse_kl_mode(const std::string& s) {
    if (s == "symmetric") return KlMode::Symmetric;
    if (s == "forward") return KlMode::ForwardOnly;
    fail(ErrorCode::InvalidConfig, "kl mode must be symmetric or forward, got '" + s + "'");
  }

 private:
  void merge_json(const nlohmann::json& j, const std::string& prefix) {
    for (const auto& [k, v] : j.items()) {
      const std::string key = prefix.empty() ? k : prefix + "." + k;
      if (v.is_object()) merge_json(v, key);
      else set(key, v);
    }
  }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return it->second.get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::InvalidConfig, "config key '" + key + "' has the wrong type");
    }
  }

  std::map<std::string, Value> values_;
};

}  // namespace smoothclap
