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

// Synthetic voiced signals and a small labeled speech-like corpus for
// pipeline tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smoothclap/io.hpp"
#include "smoothclap/random.hpp"
#include "smoothclap/wav.hpp"

namespace smoothclap {

inline Waveform sine_wave(double freqHz, double amplitude, double seconds, double rate = kAnalysisRate) {
  Waveform w;
  w.sampleRate = rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * freqHz * static_cast<double>(i) / rate);
  return w;
}

struct VoiceParams {
  double f0Hz = 150.0;
  double amplitude = 0.3;
  double seconds = 1.5;
  double jitter = 0.0;   // relative period perturbation (uniform ±)
  double shimmer = 0.0;  // relative amplitude perturbation (uniform ±)
  int harmonics = 5;
};

/// Period-by-period harmonic source with optional cycle perturbations.
inline Waveform synth_voice(const VoiceParams& p, std::uint64_t seed, double rate = kAnalysisRate) {
  Rng rng(derive_seed(seed, 0x766f696365ULL));
  Waveform w;
  w.sampleRate = rate;
  const auto total = static_cast<std::size_t>(std::llround(p.seconds * rate));
  w.samples.reserve(total);
  double t0 = 0.0;  // start of the current period in samples
  while (w.samples.size() < total) {
    const double period = rate / p.f0Hz * (1.0 + p.jitter * rng.uniform(-1.0, 1.0));
    const double amp = p.amplitude * (1.0 + p.shimmer * rng.uniform(-1.0, 1.0));
    const double end = t0 + period;
    while (static_cast<double>(w.samples.size()) < end && w.samples.size() < total) {
      const double phase = (static_cast<double>(w.samples.size()) - t0) / period;
      double s = 0.0;
      for (int h = 1; h <= p.harmonics; ++h) s += std::sin(2.0 * std::numbers::pi * h * phase) / h;
      w.samples.push_back(amp * s / 1.6);
    }
    t0 = end;
  }
  return w;
}

struct SynthCorpusEntry {
  std::string id;
  std::string wav;  // file name relative to the corpus directory
  std::string emotion;
  std::string gender;
  double arousal = 0.0;
  double valence = 0.0;
  double dominance = 0.0;
};

/// Writes `count` WAV files plus labels.jsonl (tagging input / extraction
/// manifest) and labels.csv (id,label) into `dir`.
inline std::vector<SynthCorpusEntry> write_synth_corpus(const std::filesystem::path& dir, std::size_t count,
                                                        std::uint64_t seed) {
  struct Style {
    const char* emotion;
    double f0, amp, jitter, arousal, valence, dominance;
  };
  static const Style styles[] = {{"angry", 230.0, 0.55, 0.010, 0.85, 0.20, 0.80},
                                 {"fear", 260.0, 0.35, 0.020, 0.75, 0.25, 0.30},
                                 {"sad", 140.0, 0.15, 0.008, 0.20, 0.20, 0.30},
                                 {"calm", 120.0, 0.25, 0.002, 0.25, 0.70, 0.55}};
  std::filesystem::create_directories(dir);
  Rng rng(derive_seed(seed, 0x636f72707573ULL));
  std::vector<SynthCorpusEntry> entries;
  std::string jsonl, csv = "id,label\n";
  for (std::size_t i = 0; i < count; ++i) {
    const Style& st = styles[i % 4];
    SynthCorpusEntry e;
    e.id = "utt" + std::to_string(1000 + i).substr(1);
    e.wav = e.id + ".wav";
    e.emotion = st.emotion;
    e.gender = rng.uniform() < 0.5 ? "female" : "male";
    auto jitterDim = [&rng](double v) { return std::clamp(v + 0.1 * rng.normal(), 0.0, 1.0); };
    e.arousal = jitterDim(st.arousal);
    e.valence = jitterDim(st.valence);
    e.dominance = jitterDim(st.dominance);

    VoiceParams vp;
    vp.f0Hz = st.f0 * (e.gender == "male" ? 0.75 : 1.0) * (1.0 + 0.05 * rng.normal());
    vp.amplitude = st.amp * (1.0 + 0.1 * rng.normal());
    vp.seconds = rng.uniform(0.8, 2.0);
    vp.jitter = st.jitter;
    vp.shimmer = 2.0 * st.jitter;
    const Waveform w = synth_voice(vp, rng.next());
    // A few files exercise float32, stereo and non-16 kHz decoding.
    if (i % 7 == 3) {
      write_wav(dir / e.wav, w.samples, 1, 16000, WavEncoding::Float32);
    } else if (i % 11 == 5) {
      std::vector<double> stereo;
      for (double s : w.samples) {
        stereo.push_back(s);
        stereo.push_back(s);
      }
      write_wav(dir / e.wav, stereo, 2, 16000);
    } else if (i % 13 == 6) {
      write_wav(dir / e.wav, resample(w.samples, 16000.0, 22050.0), 1, 22050);
    } else {
      write_wav(dir / e.wav, w.samples, 1, 16000);
    }
    jsonl += nlohmann::json{{"id", e.id}, {"wav", e.wav}, {"emotion", e.emotion}, {"gender", e.gender},
                            {"arousal", e.arousal}, {"valence", e.valence}, {"dominance", e.dominance}}
                 .dump() +
             "\n";
    csv += e.id + "," + e.emotion + "\n";
    entries.push_back(std::move(e));
  }
  write_text_file(dir / "labels.jsonl", jsonl);
  write_text_file(dir / "labels.csv", csv);
  return entries;
}

}  // namespace smoothclap
