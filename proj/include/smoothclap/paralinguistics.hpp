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

// Interpretable voice descriptors: pitch, intensity, local jitter, local
// shimmer and duration, computed on 25 ms / 10 ms frames at 16 kHz.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "smoothclap/error.hpp"
#include "smoothclap/wav.hpp"

namespace smoothclap {

struct Frames {
  std::vector<std::vector<double>> frames;
  std::vector<std::size_t> validLength;  // samples before zero padding
  double sampleRate = kAnalysisRate;
  std::size_t frameLength = 0;
  std::size_t hop = 0;

  std::size_t size() const noexcept { return frames.size(); }
};

struct F0Track {
  std::vector<double> framesHz;  // 0 when unvoiced
  std::vector<bool> voicedFlags;
  double hopSeconds = 0.01;
  double frameSeconds = 0.025;

  std::size_t voicedCount() const {
    return static_cast<std::size_t>(std::count(voicedFlags.begin(), voicedFlags.end(), true));
  }
};

/// A ratio that may have been computed from too little voiced material.
struct VoiceQuality {
  double ratio = 0.0;
  bool degraded = false;
};

struct PitchParams {
  double fminHz = 50.0;
  double fmaxHz = 600.0;
  double voicingThreshold = 0.3;
};

struct AcousticProfile {
  double pitchMeanHz = 0.0;
  double pitchStdHz = 0.0;
  double intensityMeanDb = 0.0;
  double intensityStdDb = 0.0;
  double jitter = 0.0;
  double shimmer = 0.0;
  double durationSeconds = 0.0;
  double voicedFraction = 0.0;
  std::vector<std::string> flags;

  bool voiced() const { return voicedFraction > 0.0; }
  bool has_flag(const std::string& f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
};

inline Frames frame_signal(const Waveform& w, double frameMs = 25.0, double hopMs = 10.0) {
  Frames out;
  out.sampleRate = w.sampleRate;
  out.frameLength = static_cast<std::size_t>(std::llround(frameMs * 1e-3 * w.sampleRate));
  out.hop = static_cast<std::size_t>(std::llround(hopMs * 1e-3 * w.sampleRate));
  if (out.frameLength == 0 || out.hop == 0) fail(ErrorCode::InvalidConfig, "frame and hop must be >= 1 sample");
  const std::size_t n = w.samples.size();
  if (n < out.frameLength) {
    fail(ErrorCode::SignalTooShort,
         std::to_string(n) + " samples is shorter than one " + std::to_string(out.frameLength) + "-sample frame");
  }
  // ceil((n - frame + hop) / hop)
  const std::size_t count = (n - out.frameLength + out.hop + out.hop - 1) / out.hop;
  out.frames.reserve(count);
  for (std::size_t f = 0; f < count; ++f) {
    const std::size_t start = f * out.hop;
    const std::size_t valid = std::min(out.frameLength, n - start);
    std::vector<double> frame(out.frameLength, 0.0);
    std::copy_n(w.samples.begin() + static_cast<std::ptrdiff_t>(start), valid, frame.begin());
    out.frames.push_back(std::move(frame));
    out.validLength.push_back(valid);
  }
  return out;
}

namespace detail {

// Normalized autocorrelation of x at `lag` over the overlapping region.
inline double normalized_autocorr(const std::vector<double>& x, std::size_t lag) {
  const std::size_t n = x.size() - lag;
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xy += x[i] * x[i + lag];
    xx += x[i] * x[i];
    yy += x[i + lag] * x[i + lag];
  }
  const double denom = std::sqrt(xx * yy);
  return denom > 1e-300 ? xy / denom : 0.0;
}

}  // namespace detail

/// Per-frame F0 from the normalized autocorrelation peak in the lag range
/// [rate/fmax, rate/fmin], refined by parabolic interpolation. Among the
/// local maxima the earliest one within 90% of the best is taken, which
/// avoids picking a period multiple on strongly periodic frames.
inline F0Track estimate_f0(const Frames& frames, const PitchParams& params = {}) {
  F0Track track;
  track.hopSeconds = static_cast<double>(frames.hop) / frames.sampleRate;
  track.frameSeconds = static_cast<double>(frames.frameLength) / frames.sampleRate;
  track.framesHz.assign(frames.size(), 0.0);
  track.voicedFlags.assign(frames.size(), false);

  const double rate = frames.sampleRate;
  const auto minLag = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(rate / params.fmaxHz)));
  auto maxLag = static_cast<std::size_t>(std::ceil(rate / params.fminHz));
  if (frames.frameLength < 4) return track;
  maxLag = std::min(maxLag, frames.frameLength - 3);
  if (minLag >= maxLag) return track;

  std::vector<double> x(frames.frameLength);
  std::vector<double> r(maxLag + 2, 0.0);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& frame = frames.frames[f];
    const double mean = std::accumulate(frame.begin(), frame.end(), 0.0) / static_cast<double>(frame.size());
    for (std::size_t i = 0; i < frame.size(); ++i) x[i] = frame[i] - mean;

    for (std::size_t k = minLag - 1; k <= maxLag + 1; ++k) r[k] = detail::normalized_autocorr(x, k);

    double best = -1.0;
    for (std::size_t k = minLag; k <= maxLag; ++k) {
      if (r[k] >= r[k - 1] && r[k] > r[k + 1]) best = std::max(best, r[k]);
    }
    if (best < params.voicingThreshold) continue;

    std::size_t peak = 0;
    for (std::size_t k = minLag; k <= maxLag; ++k) {
      if (r[k] >= r[k - 1] && r[k] > r[k + 1] && r[k] >= 0.9 * best) {
        peak = k;
        break;
      }
    }
    const double a = r[peak - 1], b = r[peak], c = r[peak + 1];
    const double curvature = a - 2.0 * b + c;
    const double shift = curvature < 0.0 ? std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5) : 0.0;
    const double f0 = rate / (static_cast<double>(peak) + shift);
    if (f0 < params.fminHz || f0 > params.fmaxHz) continue;
    track.framesHz[f] = f0;
    track.voicedFlags[f] = true;
  }
  return track;
}

/// Frame level in dB re full scale, with RMS floored at 1e-10 (−200 dB).
/// Zero padding of the final frame is excluded from its RMS.
inline std::vector<double> rms_intensity(const Frames& frames) {
  std::vector<double> db;
  db.reserve(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& fr = frames.frames[f];
    const std::size_t n = frames.validLength.empty() ? fr.size() : frames.validLength[f];
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += fr[i] * fr[i];
    const double rms = std::sqrt(ss / static_cast<double>(std::max<std::size_t>(n, 1)));
    db.push_back(20.0 * std::log10(std::max(rms, 1e-10)));
  }
  return db;
}

namespace detail {

struct VoicedRun {
  std::size_t first;
  std::size_t last;  // inclusive
};

inline std::vector<VoicedRun> voiced_runs(const F0Track& track) {
  std::vector<VoicedRun> runs;
  for (std::size_t i = 0; i < track.voicedFlags.size();) {
    if (!track.voicedFlags[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < track.voicedFlags.size() && track.voicedFlags[j + 1]) ++j;
    runs.push_back({i, j});
    i = j + 1;
  }
  return runs;
}

// mean |a_{i+1} - a_i| / mean(a) over consecutive pairs inside each sequence.
inline VoiceQuality relative_perturbation(const std::vector<std::vector<double>>& sequences) {
  double diffSum = 0.0, valueSum = 0.0;
  std::size_t diffs = 0, values = 0;
  for (const auto& s : sequences) {
    if (s.size() < 2) continue;
    for (std::size_t i = 0; i < s.size(); ++i) {
      valueSum += s[i];
      ++values;
      if (i + 1 < s.size()) {
        diffSum += std::abs(s[i + 1] - s[i]);
        ++diffs;
      }
    }
  }
  if (diffs == 0 || valueSum <= 0.0) return {0.0, true};
  return {(diffSum / static_cast<double>(diffs)) / (valueSum / static_cast<double>(values)), false};
}

}  // namespace detail

/// Local jitter from frame periods T = 1/F0, pooled over voiced runs.
inline VoiceQuality jitter_local(const F0Track& track) {
  std::vector<std::vector<double>> periods;
  for (const auto& run : detail::voiced_runs(track)) {
    std::vector<double> p;
    for (std::size_t i = run.first; i <= run.last; ++i) p.push_back(1.0 / track.framesHz[i]);
    periods.push_back(std::move(p));
  }
  return detail::relative_perturbation(periods);
}

/// Local shimmer from per-period peak amplitudes. The first peak of a run
/// is the largest |x| in its first period; it fixes the polarity, and each
/// later peak is the extremum of that polarity one period (±half) further.
inline VoiceQuality shimmer_local(const Waveform& w, const F0Track& track) {
  const double rate = w.sampleRate;
  const auto hop = static_cast<std::size_t>(std::llround(track.hopSeconds * rate));
  const auto frameLen = static_cast<std::size_t>(std::llround(track.frameSeconds * rate));
  const std::size_t n = w.samples.size();
  std::vector<std::vector<double>> amplitudes;

  for (const auto& run : detail::voiced_runs(track)) {
    const std::size_t start = run.first * hop;
    const std::size_t end = std::min(n, run.last * hop + frameLen);
    if (start >= end) continue;
    auto periodAt = [&](std::size_t sample) {
      const std::size_t centered = sample > frameLen / 2 ? (sample - frameLen / 2) / std::max<std::size_t>(hop, 1) : 0;
      const std::size_t f = std::clamp(centered, run.first, run.last);
      return rate / track.framesHz[f];
    };

    std::vector<double> amps;
    double period = periodAt(start);
    auto firstEnd = std::min(end, start + static_cast<std::size_t>(std::ceil(period)));
    std::size_t peak = start;
    for (std::size_t i = start; i < firstEnd; ++i)
      if (std::abs(w.samples[i]) > std::abs(w.samples[peak])) peak = i;
    const double polarity = w.samples[peak] < 0.0 ? -1.0 : 1.0;
    amps.push_back(std::abs(w.samples[peak]));

    while (true) {
      period = periodAt(peak);
      const double lo = static_cast<double>(peak) + 0.5 * period;
      const double hi = static_cast<double>(peak) + 1.5 * period;
      if (hi > static_cast<double>(end)) break;
      const auto a = static_cast<std::size_t>(std::ceil(lo));
      const auto b = static_cast<std::size_t>(std::ceil(hi));
      std::size_t next = a;
      for (std::size_t i = a; i < b; ++i)
        if (polarity * w.samples[i] > polarity * w.samples[next]) next = i;
      peak = next;
      amps.push_back(std::abs(w.samples[peak]));
    }
    amplitudes.push_back(std::move(amps));
  }
  return detail::relative_perturbation(amplitudes);
}

namespace detail {

inline void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (v.empty()) return;
  mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace detail

inline AcousticProfile acoustic_profile(const Waveform& input, const PitchParams& params = {}) {
  if (input.samples.empty()) fail(ErrorCode::EmptyAudio, "waveform has no samples");
  AcousticProfile p;
  p.durationSeconds = input.duration();
  if (p.durationSeconds < 0.05) fail(ErrorCode::TooShort, "profiles need at least 50 ms of audio");

  Waveform w = input;
  if (w.sampleRate != kAnalysisRate) {
    w.samples = resample(w.samples, w.sampleRate, kAnalysisRate);
    w.sampleRate = kAnalysisRate;
  }
  const Frames frames = frame_signal(w);
  const F0Track track = estimate_f0(frames, params);

  std::vector<double> voiced;
  for (std::size_t i = 0; i < track.framesHz.size(); ++i)
    if (track.voicedFlags[i]) voiced.push_back(track.framesHz[i]);
  detail::mean_std(voiced, p.pitchMeanHz, p.pitchStdHz);
  p.voicedFraction = static_cast<double>(voiced.size()) / static_cast<double>(frames.size());
  detail::mean_std(rms_intensity(frames), p.intensityMeanDb, p.intensityStdDb);

  const VoiceQuality jitter = jitter_local(track);
  const VoiceQuality shimmer = shimmer_local(w, track);
  p.jitter = jitter.ratio;
  p.shimmer = shimmer.ratio;
  if (voiced.empty()) p.flags.emplace_back("unvoiced");
  if (jitter.degraded) p.flags.emplace_back("jitter_insufficient_voicing");
  if (shimmer.degraded) p.flags.emplace_back("shimmer_insufficient_voicing");
  return p;
}

}  // namespace smoothclap
