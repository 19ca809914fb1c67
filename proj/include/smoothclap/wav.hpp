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

// RIFF/WAVE reading (PCM-16 and IEEE float32), mono downmix and
// windowed-sinc resampling to the 16 kHz analysis rate.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "smoothclap/error.hpp"

namespace smoothclap {

inline constexpr double kAnalysisRate = 16000.0;

struct Waveform {
  std::vector<double> samples;
  double sampleRate = kAnalysisRate;

  double duration() const { return static_cast<double>(samples.size()) / sampleRate; }
};

namespace detail {

inline std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
inline std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Blackman window over t in [-1, 1].
inline double blackman(double t) {
  if (std::abs(t) >= 1.0) return 0.0;
  const double u = std::numbers::pi * t;
  return 0.42 + 0.5 * std::cos(u) + 0.08 * std::cos(2.0 * u);
}

}  // namespace detail

/// Band-limited resampling by windowed-sinc interpolation. When
/// downsampling the kernel is widened so the cutoff follows the new
/// Nyquist frequency.
inline std::vector<double> resample(std::span<const double> in, double fromRate, double toRate,
                                    int halfTaps = 32) {
  if (fromRate == toRate || in.empty()) return {in.begin(), in.end()};
  const double ratio = toRate / fromRate;
  const double cutoff = std::min(1.0, ratio);
  const double halfWidth = halfTaps / cutoff;
  const auto outLen = static_cast<std::size_t>(std::llround(static_cast<double>(in.size()) * ratio));
  std::vector<double> out(outLen);
  const auto n = static_cast<long long>(in.size());
  for (std::size_t i = 0; i < outLen; ++i) {
    const double center = static_cast<double>(i) / ratio;
    const auto lo = std::max(0LL, static_cast<long long>(std::ceil(center - halfWidth)));
    const auto hi = std::min(n - 1, static_cast<long long>(std::floor(center + halfWidth)));
    double acc = 0.0;
    for (long long k = lo; k <= hi; ++k) {
      const double d = center - static_cast<double>(k);
      acc += in[static_cast<std::size_t>(k)] * cutoff * detail::sinc(cutoff * d) * detail::blackman(d / halfWidth);
    }
    out[i] = acc;
  }
  return out;
}

/// Decodes an in-memory RIFF/WAVE image. Channels are averaged; the result
/// keeps the file's sample rate.
inline Waveform decode_wav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12) fail(ErrorCode::CorruptHeader, "file shorter than a RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(ErrorCode::UnsupportedFormat, "not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool haveFmt = false;
  const unsigned char* data = nullptr;
  std::size_t dataSize = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = detail::le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) fail(ErrorCode::CorruptHeader, "truncated fmt chunk");
      format = detail::le16(bytes.data() + body);
      channels = detail::le16(bytes.data() + body + 2);
      rate = detail::le32(bytes.data() + body + 4);
      bits = detail::le16(bytes.data() + body + 14);
      if (format == 0xFFFE) {
        if (size < 26) fail(ErrorCode::CorruptHeader, "truncated WAVE_FORMAT_EXTENSIBLE fmt chunk");
        format = detail::le16(bytes.data() + body + 24);  // first two bytes of the subformat GUID
      }
      haveFmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Streams written without a final size carry 0 or 0xFFFFFFFF here.
      dataSize = std::min<std::size_t>(size, bytes.size() - body);
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!haveFmt) fail(ErrorCode::CorruptHeader, "missing fmt chunk");
  if (data == nullptr) fail(ErrorCode::CorruptHeader, "missing data chunk");
  if (channels == 0 || rate == 0) fail(ErrorCode::CorruptHeader, "zero channels or sample rate");

  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32) {
    fail(ErrorCode::UnsupportedFormat,
         "only PCM-16 and float32 are supported (format " + std::to_string(format) + ", " +
             std::to_string(bits) + " bits)");
  }
  const std::size_t frameBytes = static_cast<std::size_t>(channels) * (bits / 8);
  const std::size_t frames = dataSize / frameBytes;
  if (frames == 0) fail(ErrorCode::EmptyAudio, "data chunk holds no samples");

  Waveform w;
  w.sampleRate = rate;
  w.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* s = data + f * frameBytes + c * (bits / 8);
      if (pcm16) {
        acc += static_cast<std::int16_t>(detail::le16(s)) / 32768.0;
      } else {
        const std::uint32_t u = detail::le32(s);
        float v;
        std::memcpy(&v, &u, sizeof v);
        acc += std::isfinite(v) ? std::clamp(static_cast<double>(v), -1.0, 1.0) : 0.0;
      }
    }
    w.samples[f] = acc / channels;
  }
  return w;
}

/// Reads a WAV file and returns mono samples at the 16 kHz analysis rate.
inline Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Waveform w = decode_wav(bytes);
  if (w.sampleRate != kAnalysisRate) {
    w.samples = resample(w.samples, w.sampleRate, kAnalysisRate);
    w.sampleRate = kAnalysisRate;
    if (w.samples.empty()) fail(ErrorCode::EmptyAudio, "no samples after resampling");
  }
  return w;
}

enum class WavEncoding { Pcm16, Float32 };

/// Interleaved samples (frames × channels) to a RIFF/WAVE image.
inline std::vector<unsigned char> encode_wav(std::span<const double> interleaved, unsigned channels,
                                             unsigned sampleRate, WavEncoding enc = WavEncoding::Pcm16) {
  const unsigned bits = enc == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint32_t dataBytes = static_cast<std::uint32_t>(interleaved.size() * (bits / 8));
  std::vector<unsigned char> out;
  out.reserve(44 + dataBytes);
  auto put = [&out](std::uint32_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  };
  auto tag = [&out](const char* t) { out.insert(out.end(), t, t + 4); };
  tag("RIFF");
  put(36 + dataBytes, 4);
  tag("WAVE");
  tag("fmt ");
  put(16, 4);
  put(enc == WavEncoding::Pcm16 ? 1 : 3, 2);
  put(channels, 2);
  put(sampleRate, 4);
  put(sampleRate * channels * (bits / 8), 4);
  put(channels * (bits / 8), 2);
  put(bits, 2);
  tag("data");
  put(dataBytes, 4);
  for (double s : interleaved) {
    const double c = std::clamp(s, -1.0, 1.0);
    if (enc == WavEncoding::Pcm16) {
      const auto v = static_cast<std::int16_t>(std::lround(c * 32767.0));
      put(static_cast<std::uint16_t>(v), 2);
    } else {
      const float f = static_cast<float>(c);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      put(u, 4);
    }
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, std::span<const double> interleaved, unsigned channels,
                      unsigned sampleRate, WavEncoding enc = WavEncoding::Pcm16) {
  const auto bytes = encode_wav(interleaved, channels, sampleRate, enc);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace smoothclap
