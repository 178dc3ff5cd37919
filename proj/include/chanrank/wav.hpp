// include/chanrank/wav.hpp

// Copyright 2026 The chanrank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Minimal RIFF/WAVE reader and writer: mono, 16 kHz, 16-bit PCM or 32-bit
// IEEE float, little-endian.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "chanrank/common.hpp"

namespace chanrank {

enum class WavEncoding { kPcm16, kFloat32 };

namespace wav_detail {

inline void PutU32(std::string &s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void PutU16(std::string &s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}
inline std::uint32_t GetU32(const unsigned char *p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t GetU16(const unsigned char *p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace wav_detail

/// Serializes samples to WAV bytes. PCM16 clips to [-1, 1).
inline std::string EncodeWav(const std::vector<double> &samples, int sample_rate,
                             WavEncoding enc) {
  using namespace wav_detail;
  const std::uint16_t bits = enc == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t format = enc == WavEncoding::kPcm16 ? 1 : 3;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(samples.size() * (bits / 8));
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, format);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(sample_rate));
  PutU32(out, static_cast<std::uint32_t>(sample_rate) * (bits / 8));
  PutU16(out, bits / 8);
  PutU16(out, bits);
  out += "data";
  PutU32(out, data_bytes);
  for (double x : samples) {
    if (enc == WavEncoding::kPcm16) {
      double v = std::round(x * 32768.0);
      if (v > 32767.0) v = 32767.0;
      if (v < -32768.0) v = -32768.0;
      PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    } else {
      float f = static_cast<float>(x);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      PutU32(out, u);
    }
  }
  return out;
}

struct DecodedWav {
  std::vector<double> samples;
  int sample_rate = 0;
};

inline DecodedWav DecodeWav(const std::string &bytes) {
  using namespace wav_detail;
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  const std::size_t n = bytes.size();
  CHANRANK_CHECK(n >= 12 && std::memcmp(p, "RIFF", 4) == 0 &&
                     std::memcmp(p + 8, "WAVE", 4) == 0,
                 Errc::kFormat, "not a RIFF/WAVE stream");
  std::size_t pos = 12;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (pos + 8 <= n) {
    std::uint32_t size = GetU32(p + pos + 4);
    const unsigned char *body = p + pos + 8;
    CHANRANK_CHECK(pos + 8 + size <= n, Errc::kFormat, "truncated chunk");
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      CHANRANK_CHECK(size >= 16, Errc::kFormat, "short fmt chunk");
      format = GetU16(body);
      channels = GetU16(body + 2);
      rate = GetU32(body + 4);
      bits = GetU16(body + 14);
      // WAVE_FORMAT_EXTENSIBLE carries the real tag in the sub-format GUID.
      if (format == 0xfffe && size >= 26) format = GetU16(body + 24);
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      CHANRANK_CHECK(have_fmt, Errc::kFormat, "data chunk before fmt chunk");
      CHANRANK_CHECK(channels == 1, Errc::kFormat,
                     "expected mono WAV, got ", channels, " channels");
      DecodedWav out;
      out.sample_rate = static_cast<int>(rate);
      if (format == 1 && bits == 16) {
        out.samples.resize(size / 2);
        for (std::size_t i = 0; i < out.samples.size(); ++i)
          out.samples[i] =
              static_cast<std::int16_t>(GetU16(body + 2 * i)) / 32768.0;
      } else if (format == 3 && bits == 32) {
        out.samples.resize(size / 4);
        for (std::size_t i = 0; i < out.samples.size(); ++i) {
          std::uint32_t u = GetU32(body + 4 * i);
          float f;
          std::memcpy(&f, &u, 4);
          out.samples[i] = f;
        }
      } else {
        Fail(Errc::kFormat, "unsupported WAV encoding (format ", format,
             ", ", bits, " bits)");
      }
      return out;
    }
    pos += 8 + size + (size & 1);
  }
  Fail(Errc::kFormat, "no data chunk");
}

inline void WriteWav(const std::string &path, const std::vector<double> &samples,
                     int sample_rate = kSampleRate,
                     WavEncoding enc = WavEncoding::kFloat32) {
  std::ofstream os(path, std::ios::binary);
  CHANRANK_CHECK(os.good(), Errc::kIo, "cannot open ", path, " for writing");
  std::string bytes = EncodeWav(samples, sample_rate, enc);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  CHANRANK_CHECK(os.good(), Errc::kIo, "write failed: ", path);
}

inline DecodedWav ReadWav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  CHANRANK_CHECK(is.good(), Errc::kIo, "cannot open ", path);
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  try {
    return DecodeWav(bytes);
  } catch (const Error &e) {
    Fail(e.code(), path, ": ", e.what());
  }
}

}  // namespace chanrank
