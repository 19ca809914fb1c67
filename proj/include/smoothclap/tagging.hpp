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

// Textual tags from dataset labels and acoustic profiles. Continuous
// attributes are cut at the corpus 30th/70th nearest-rank percentiles and
// rendered through a closed set of template phrases.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smoothclap/error.hpp"
#include "smoothclap/numeric.hpp"
#include "smoothclap/paralinguistics.hpp"

namespace smoothclap {

enum class Bin { Low = 0, Mid = 1, High = 2 };

inline constexpr std::string_view to_string(Bin b) {
  switch (b) {
    case Bin::Low: return "low";
    case Bin::Mid: return "mid";
    case Bin::High: return "high";
  }
  return "mid";
}

inline Bin bin_from_string(std::string_view s) {
  if (s == "low") return Bin::Low;
  if (s == "mid") return Bin::Mid;
  if (s == "high") return Bin::High;
  fail(ErrorCode::ParseError, "unknown bin '" + std::string(s) + "'");
}

struct BinThresholds {
  std::string featureName;
  double low = 0.0;
  double high = 0.0;

  friend bool operator==(const BinThresholds&, const BinThresholds&) = default;
};

using ThresholdSet = std::map<std::string, BinThresholds>;

inline BinThresholds fit_bins(std::vector<double> values, const std::string& featureName) {
  if (values.size() < 3) {
    fail(ErrorCode::TooFewValues, featureName + ": binning needs at least 3 values, got " + std::to_string(values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, featureName + ": non-finite value");
  }
  std::sort(values.begin(), values.end());
  return {featureName, percentile_nearest_rank(values, 30.0), percentile_nearest_rank(values, 70.0)};
}

/// Low for v <= low, High for v > high, Mid otherwise. With low == high
/// there is no Mid: the threshold value itself is Low, anything above High.
inline Bin assign_bin(double value, const BinThresholds& t) {
  if (!std::isfinite(value)) fail(ErrorCode::NonFiniteValue, t.featureName + ": non-finite value");
  if (value <= t.low) return Bin::Low;
  if (value > t.high) return Bin::High;
  return Bin::Mid;
}

inline const std::array<std::string, 3>& dimensional_features() {
  static const std::array<std::string, 3> f{"arousal", "valence", "dominance"};
  return f;
}

inline const std::array<std::string, 5>& acoustic_features() {
  static const std::array<std::string, 5> f{"pitch", "intensity", "jitter", "shimmer", "duration"};
  return f;
}

/// The closed vocabulary tags are drawn from.
struct TemplateSet {
  std::vector<std::string> emotions{"angry", "calm",  "contempt", "disgust", "excited", "fear",
                                    "frustrated", "happy", "neutral", "other", "sad", "surprise"};
  std::vector<std::string> genders{"female", "male"};

  std::string phrase(const std::string& feature, Bin b) const {
    if (feature == "duration") {
      static const char* words[] = {"short", "medium", "long"};
      return std::string(words[static_cast<int>(b)]) + " duration";
    }
    const bool dimensional = std::find(dimensional_features().begin(), dimensional_features().end(), feature) !=
                             dimensional_features().end();
    static const char* dimWords[] = {"low", "mid", "high"};
    static const char* acoWords[] = {"low", "normal", "high"};
    return std::string((dimensional ? dimWords : acoWords)[static_cast<int>(b)]) + " " + feature;
  }

  std::set<std::string> vocabulary() const {
    std::set<std::string> v(emotions.begin(), emotions.end());
    v.insert(genders.begin(), genders.end());
    for (const auto& f : dimensional_features())
      for (Bin b : {Bin::Low, Bin::Mid, Bin::High}) v.insert(phrase(f, b));
    for (const auto& f : acoustic_features())
      for (Bin b : {Bin::Low, Bin::Mid, Bin::High}) v.insert(phrase(f, b));
    return v;
  }
};

/// Whatever is known about one utterance; every field is optional.
struct TagSources {
  std::optional<std::string> emotion;
  std::optional<std::string> gender;
  std::map<std::string, double> dims;  // arousal / valence / dominance
  std::optional<AcousticProfile> profile;
};

/// Acoustic values that take part in binning. Pitch is only defined for
/// voiced audio, jitter and shimmer only when enough voicing was found.
inline std::map<std::string, double> acoustic_values(const AcousticProfile& p) {
  std::map<std::string, double> v;
  if (p.voiced()) v["pitch"] = p.pitchMeanHz;
  v["intensity"] = p.intensityMeanDb;
  if (!p.has_flag("jitter_insufficient_voicing")) v["jitter"] = p.jitter;
  if (!p.has_flag("shimmer_insufficient_voicing")) v["shimmer"] = p.shimmer;
  v["duration"] = p.durationSeconds;
  return v;
}

struct TagRecord {
  std::string utteranceId;
  std::vector<std::string> tags;
  std::map<std::string, Bin> bins;
  std::map<std::string, std::string> sourceLabels;
  std::map<std::string, double> sourceDims;
  std::optional<AcousticProfile> sourceFeatures;
};

/// Fits thresholds for every feature that has values in the corpus.
inline ThresholdSet fit_thresholds(const std::vector<TagSources>& corpus) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& s : corpus) {
    for (const auto& [k, v] : s.dims) values[k].push_back(v);
    if (s.profile) {
      for (const auto& [k, v] : acoustic_values(*s.profile)) values[k].push_back(v);
    }
  }
  ThresholdSet out;
  for (auto& [k, v] : values) out.emplace(k, fit_bins(std::move(v), k));
  return out;
}

/// Tags in fixed order: emotion, gender, dimensional ratings, acoustics.
inline TagRecord render_tags(const std::string& id, const TagSources& src, const ThresholdSet& thresholds,
                             const TemplateSet& templates = {}) {
  TagRecord rec;
  rec.utteranceId = id;
  auto binned = [&](const std::string& feature, double value) {
    auto it = thresholds.find(feature);
    if (it == thresholds.end()) fail(ErrorCode::MissingThresholds, "no thresholds fitted for '" + feature + "'");
    const Bin b = assign_bin(value, it->second);
    rec.bins[feature] = b;
    rec.tags.push_back(templates.phrase(feature, b));
  };

  if (src.emotion) {
    if (std::find(templates.emotions.begin(), templates.emotions.end(), *src.emotion) == templates.emotions.end()) {
      fail(ErrorCode::UnknownLabel, "emotion '" + *src.emotion + "' is not in the template vocabulary");
    }
    rec.tags.push_back(*src.emotion);
    rec.sourceLabels["emotion"] = *src.emotion;
  }
  if (src.gender) {
    if (std::find(templates.genders.begin(), templates.genders.end(), *src.gender) == templates.genders.end()) {
      fail(ErrorCode::UnknownLabel, "gender '" + *src.gender + "' is not in the template vocabulary");
    }
    rec.tags.push_back(*src.gender);
    rec.sourceLabels["gender"] = *src.gender;
  }
  for (const auto& f : dimensional_features()) {
    auto it = src.dims.find(f);
    if (it == src.dims.end()) continue;
    binned(f, it->second);
    rec.sourceDims[f] = it->second;
  }
  if (src.profile) {
    const auto values = acoustic_values(*src.profile);
    for (const auto& f : acoustic_features()) {
      auto it = values.find(f);
      if (it != values.end()) binned(f, it->second);
    }
    rec.sourceFeatures = src.profile;
  }
  // Emotion and gender vocabularies are disjoint from the template phrases,
  // but a custom template set might not be.
  std::vector<std::string> unique;
  for (auto& t : rec.tags)
    if (std::find(unique.begin(), unique.end(), t) == unique.end()) unique.push_back(std::move(t));
  rec.tags = std::move(unique);
  return rec;
}

// JSON forms ---------------------------------------------------------------

inline nlohmann::json to_json(const ThresholdSet& t) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : t) j[k] = {{"low", v.low}, {"high", v.high}};
  return j;
}

/// Keys starting with '_' (metadata) are skipped.
inline ThresholdSet thresholds_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "threshold file must hold a JSON object");
  ThresholdSet t;
  for (const auto& [k, v] : j.items()) {
    if (!k.empty() && k.front() == '_') continue;
    if (!v.is_object() || !v.contains("low") || !v.contains("high")) {
      fail(ErrorCode::ParseError, "threshold entry '" + k + "' needs low and high");
    }
    BinThresholds b{k, v.at("low").get<double>(), v.at("high").get<double>()};
    if (b.low > b.high) fail(ErrorCode::ParseError, "threshold entry '" + k + "' has low > high");
    t.emplace(k, b);
  }
  return t;
}

inline nlohmann::json to_json(const TagRecord& r) {
  nlohmann::json bins = nlohmann::json::object();
  for (const auto& [k, b] : r.bins) bins[k] = std::string(to_string(b));
  return {{"id", r.utteranceId}, {"tags", r.tags}, {"bins", bins}};
}

inline TagRecord tag_record_from_json(const nlohmann::json& j) {
  TagRecord r;
  r.utteranceId = j.at("id").get<std::string>();
  r.tags = j.at("tags").get<std::vector<std::string>>();
  if (j.contains("bins")) {
    for (const auto& [k, v] : j.at("bins").items()) r.bins[k] = bin_from_string(v.get<std::string>());
  }
  return r;
}

inline nlohmann::json to_json(const AcousticProfile& p) {
  return {{"pitch_mean_hz", p.pitchMeanHz}, {"pitch_std_hz", p.pitchStdHz},
          {"intensity_mean_db", p.intensityMeanDb}, {"intensity_std_db", p.intensityStdDb},
          {"jitter", p.jitter}, {"shimmer", p.shimmer}, {"duration_s", p.durationSeconds},
          {"voiced_fraction", p.voicedFraction}, {"flags", p.flags}};
}

inline AcousticProfile profile_from_json(const nlohmann::json& j) {
  AcousticProfile p;
  p.pitchMeanHz = j.at("pitch_mean_hz").get<double>();
  p.pitchStdHz = j.at("pitch_std_hz").get<double>();
  p.intensityMeanDb = j.at("intensity_mean_db").get<double>();
  p.intensityStdDb = j.at("intensity_std_db").get<double>();
  p.jitter = j.at("jitter").get<double>();
  p.shimmer = j.at("shimmer").get<double>();
  p.durationSeconds = j.at("duration_s").get<double>();
  p.voicedFraction = j.value("voiced_fraction", p.pitchMeanHz > 0.0 ? 1.0 : 0.0);
  p.flags = j.value("flags", std::vector<std::string>{});
  return p;
}

}  // namespace smoothclap
