// include/chanrank/scene_sim.hpp

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

// Synthetic ad-hoc microphone scenes: a shoebox room with uniform Sabine
// absorption, one speaker, one point noise source and M cardioid microphones
// at random positions and orientations. Rooms are rendered with the
// image-source method and every channel gets a proxy relevance label
// logistic(SDR / 10) against the dry source.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chanrank/common.hpp"
#include "chanrank/dsp.hpp"
#include "chanrank/fft.hpp"
#include "chanrank/selectors.hpp"
#include "json.hpp"

namespace chanrank {

inline constexpr double kSpeedOfSound = 343.0;

struct SceneConfig {
  int num_mics = 8;
  double min_area = 10.0, max_area = 60.0;  // m^2
  double min_aspect = 1.0, max_aspect = 2.0;  // length / width
  double height = 2.7;
  double min_t60 = 0.2, max_t60 = 0.6;
  double min_distance = 0.5;  // speaker to mics and walls, mic to mic, noise to mics
  double wall_margin = 0.1;   // mics and noise source to walls
  int max_tries = 10000;
  int max_order = 20;
  double min_snr_db = 5.0, max_snr_db = 20.0;
  bool noise = true;
  bool anechoic = false;  // direct path only
  double duration_s = 2.0;  // built-in source length

  void Validate() const {
    CHANRANK_CHECK(num_mics >= 1, Errc::kInvalidArgument, "num_mics must be >= 1");
    CHANRANK_CHECK(0 < min_area && min_area <= max_area, Errc::kInvalidArgument,
                   "bad room area range");
    CHANRANK_CHECK(1.0 <= min_aspect && min_aspect <= max_aspect, Errc::kInvalidArgument,
                   "bad aspect ratio range");
    CHANRANK_CHECK(height > 0, Errc::kInvalidArgument, "room height must be > 0");
    CHANRANK_CHECK(0 < min_t60 && min_t60 <= max_t60, Errc::kInvalidArgument, "bad T60 range");
    CHANRANK_CHECK(min_distance >= 0 && wall_margin >= 0, Errc::kInvalidArgument,
                   "distances must be >= 0");
    CHANRANK_CHECK(max_tries >= 1 && max_order >= 0, Errc::kInvalidArgument,
                   "max_tries must be >= 1 and max_order >= 0");
    CHANRANK_CHECK(min_snr_db <= max_snr_db, Errc::kInvalidArgument, "bad SNR range");
    CHANRANK_CHECK(duration_s * kSampleRate >= 400, Errc::kInvalidArgument,
                   "duration_s too short for one analysis window");
  }
};

inline void to_json(nlohmann::json &j, const SceneConfig &c) {
  j = nlohmann::json{{"num_mics", c.num_mics},       {"min_area", c.min_area},
                     {"max_area", c.max_area},       {"min_aspect", c.min_aspect},
                     {"max_aspect", c.max_aspect},   {"height", c.height},
                     {"min_t60", c.min_t60},         {"max_t60", c.max_t60},
                     {"min_distance", c.min_distance}, {"wall_margin", c.wall_margin},
                     {"max_tries", c.max_tries},     {"max_order", c.max_order},
                     {"min_snr_db", c.min_snr_db},   {"max_snr_db", c.max_snr_db},
                     {"noise", c.noise},             {"anechoic", c.anechoic},
                     {"duration_s", c.duration_s}};
}

inline void from_json(const nlohmann::json &j, SceneConfig &c) {
  SceneConfig d;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string &k = it.key();
    const auto &v = it.value();
    if (k == "num_mics") d.num_mics = v.get<int>();
    else if (k == "min_area") d.min_area = v.get<double>();
    else if (k == "max_area") d.max_area = v.get<double>();
    else if (k == "min_aspect") d.min_aspect = v.get<double>();
    else if (k == "max_aspect") d.max_aspect = v.get<double>();
    else if (k == "height") d.height = v.get<double>();
    else if (k == "min_t60") d.min_t60 = v.get<double>();
    else if (k == "max_t60") d.max_t60 = v.get<double>();
    else if (k == "min_distance") d.min_distance = v.get<double>();
    else if (k == "wall_margin") d.wall_margin = v.get<double>();
    else if (k == "max_tries") d.max_tries = v.get<int>();
    else if (k == "max_order") d.max_order = v.get<int>();
    else if (k == "min_snr_db") d.min_snr_db = v.get<double>();
    else if (k == "max_snr_db") d.max_snr_db = v.get<double>();
    else if (k == "noise") d.noise = v.get<bool>();
    else if (k == "anechoic") d.anechoic = v.get<bool>();
    else if (k == "duration_s") d.duration_s = v.get<double>();
    else Fail(Errc::kInvalidArgument, "unknown scene config key '", k, "'");
  }
  c = d;
}

struct RoomSpec {
  double length = 0, width = 0, height = 0;  // m
  double t60 = 0;                            // s

  double Area() const { return length * width; }
  double Volume() const { return length * width * height; }
  double Surface() const { return 2.0 * (length * width + length * height + width * height); }
  /// Sabine: T60 = 0.161 V / (S alpha), clamped to [0, 1].
  double SabineAbsorption() const {
    return std::clamp(0.161 * Volume() / (Surface() * t60), 0.0, 1.0);
  }
  bool Contains(const Eigen::Vector3d &p) const {
    return p.x() > 0 && p.x() < length && p.y() > 0 && p.y() < width && p.z() > 0 &&
           p.z() < height;
  }
  double WallDistance(const Eigen::Vector3d &p) const {
    return std::min({p.x(), length - p.x(), p.y(), width - p.y(), p.z(), height - p.z()});
  }
};

struct ScenePlacement {
  Eigen::Vector3d speaker = Eigen::Vector3d::Zero();
  Eigen::Vector3d noise = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> mics;
  std::vector<Eigen::Vector3d> orientations;  // unit vectors
};

struct Scene {
  RoomSpec room;
  ScenePlacement placement;
};

namespace scene_detail {

inline nlohmann::json Vec3Json(const Eigen::Vector3d &v) { return {v.x(), v.y(), v.z()}; }
inline Eigen::Vector3d Vec3FromJson(const nlohmann::json &j) {
  CHANRANK_CHECK(j.is_array() && j.size() == 3, Errc::kFormat, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Eigen::Vector3d UniformInBox(std::mt19937_64 &rng, const RoomSpec &r, double margin) {
  return {UniformDouble(rng, margin, r.length - margin), UniformDouble(rng, margin, r.width - margin),
          UniformDouble(rng, margin, r.height - margin)};
}

inline Eigen::Vector3d UniformOnSphere(std::mt19937_64 &rng) {
  for (;;) {
    Eigen::Vector3d v(StandardNormal(rng), StandardNormal(rng), StandardNormal(rng));
    const double n = v.norm();
    if (n > 1e-9) return v / n;
  }
}

}  // namespace scene_detail

inline nlohmann::json RoomJson(const RoomSpec &r) {
  return {{"length", r.length}, {"width", r.width}, {"height", r.height}, {"t60", r.t60}};
}

inline nlohmann::json PositionsJson(const ScenePlacement &p) {
  nlohmann::json mics = nlohmann::json::array(), orient = nlohmann::json::array();
  for (const auto &m : p.mics) mics.push_back(scene_detail::Vec3Json(m));
  for (const auto &o : p.orientations) orient.push_back(scene_detail::Vec3Json(o));
  return {{"speaker", scene_detail::Vec3Json(p.speaker)},
          {"noise", scene_detail::Vec3Json(p.noise)},
          {"mics", mics},
          {"orientations", orient}};
}

inline RoomSpec RoomFromJson(const nlohmann::json &j) {
  return {j.at("length").get<double>(), j.at("width").get<double>(),
          j.at("height").get<double>(), j.at("t60").get<double>()};
}

inline ScenePlacement PositionsFromJson(const nlohmann::json &j) {
  ScenePlacement p;
  p.speaker = scene_detail::Vec3FromJson(j.at("speaker"));
  p.noise = scene_detail::Vec3FromJson(j.at("noise"));
  for (const auto &m : j.at("mics")) p.mics.push_back(scene_detail::Vec3FromJson(m));
  for (const auto &o : j.at("orientations"))
    p.orientations.push_back(scene_detail::Vec3FromJson(o));
  return p;
}

/// True when `p` satisfies every distance constraint of `cfg` inside `room`.
inline bool PlacementValid(const RoomSpec &room, const ScenePlacement &p, const SceneConfig &cfg) {
  const double d = cfg.min_distance;
  if (!room.Contains(p.speaker) || room.WallDistance(p.speaker) < d) return false;
  if (!room.Contains(p.noise) || room.WallDistance(p.noise) < cfg.wall_margin) return false;
  for (std::size_t i = 0; i < p.mics.size(); ++i) {
    const auto &m = p.mics[i];
    if (!room.Contains(m) || room.WallDistance(m) < cfg.wall_margin) return false;
    if ((m - p.speaker).norm() < d || (m - p.noise).norm() < d) return false;
    for (std::size_t j = 0; j < i; ++j)
      if ((m - p.mics[j]).norm() < d) return false;
  }
  return (p.noise - p.speaker).norm() >= d;
}

/// Samples a room and a placement satisfying the distance constraints by
/// rejection. Deterministic per seed.
inline Scene SampleScene(std::uint64_t seed, const SceneConfig &cfg = {}) {
  cfg.Validate();
  auto rng = DerivedRng(seed, 0x5343454e);
  Scene s;
  const double area = UniformDouble(rng, cfg.min_area, cfg.max_area);
  const double aspect = UniformDouble(rng, cfg.min_aspect, cfg.max_aspect);
  s.room.length = std::sqrt(area * aspect);
  s.room.width = std::sqrt(area / aspect);
  s.room.height = cfg.height;
  s.room.t60 = UniformDouble(rng, cfg.min_t60, cfg.max_t60);

  const double margin_speaker = cfg.min_distance;
  CHANRANK_CHECK(2 * margin_speaker < std::min({s.room.width, s.room.height}) &&
                     2 * cfg.wall_margin < std::min({s.room.width, s.room.height}),
                 Errc::kConstraintFailure, "room too small for the wall distance constraints");
  using namespace scene_detail;
  for (int attempt = 0; attempt < cfg.max_tries; ++attempt) {
    ScenePlacement p;
    p.speaker = UniformInBox(rng, s.room, margin_speaker);
    p.noise = UniformInBox(rng, s.room, cfg.wall_margin);
    for (int i = 0; i < cfg.num_mics; ++i) {
      p.mics.push_back(UniformInBox(rng, s.room, cfg.wall_margin));
      p.orientations.push_back(UniformOnSphere(rng));
    }
    if (PlacementValid(s.room, p, cfg)) {
      s.placement = std::move(p);
      return s;
    }
  }
  Fail(Errc::kConstraintFailure, "no valid placement after ", cfg.max_tries, " attempts (seed ",
       seed, ")");
}

// ---------------------------------------------------------------------------
// Image-source room impulse responses.

struct Rir {
  std::vector<double> taps;
  int sample_rate = kSampleRate;
};

struct RirOptions {
  int max_order = 20;
  std::optional<double> absorption;  // overrides the Sabine value
};

/// 0.5 (1 + cos theta), theta between the mic axis and the arrival direction
/// (pointing from the mic towards the source).
inline double CardioidGain(const Eigen::Vector3d &orientation, const Eigen::Vector3d &to_source) {
  const double n = to_source.norm();
  if (n == 0) return 1.0;
  return 0.5 * (1.0 + orientation.dot(to_source) / (n * orientation.norm()));
}

/// Shoebox image-source RIR: amplitude beta^order * g(theta) / distance at
/// delay round(distance / c * fs), beta = sqrt(1 - alpha).
inline Rir ImageSourceRir(const RoomSpec &room, const Eigen::Vector3d &src,
                          const Eigen::Vector3d &mic, const Eigen::Vector3d &orientation,
                          const RirOptions &opts = {}) {
  CHANRANK_CHECK(room.Contains(src), Errc::kOutsideRoom, "source (", src.x(), ", ", src.y(),
                 ", ", src.z(), ") is outside the room");
  CHANRANK_CHECK(room.Contains(mic), Errc::kOutsideRoom, "microphone (", mic.x(), ", ",
                 mic.y(), ", ", mic.z(), ") is outside the room");
  CHANRANK_CHECK(opts.max_order >= 0, Errc::kInvalidArgument, "max_order must be >= 0");
  CHANRANK_CHECK(orientation.norm() > 0, Errc::kInvalidArgument, "zero mic orientation");
  const double alpha = opts.absorption ? *opts.absorption : room.SabineAbsorption();
  CHANRANK_CHECK(alpha >= 0 && alpha <= 1, Errc::kInvalidArgument,
                 "absorption must lie in [0, 1]");
  const double beta = std::sqrt(1.0 - alpha);
  const int n = opts.max_order;
  const int reach = (n + 1) / 2;
  const Eigen::Vector3d dims(room.length, room.width, room.height);

  struct Arrival {
    long delay;
    double amp;
  };
  std::vector<Arrival> arrivals;
  long max_delay = 0;
  std::vector<double> beta_pow(static_cast<std::size_t>(n + 1), 1.0);
  for (int k = 1; k <= n; ++k) beta_pow[static_cast<std::size_t>(k)] = beta_pow[static_cast<std::size_t>(k - 1)] * beta;

  for (int px = 0; px <= 1; ++px)
    for (int mx = -reach; mx <= reach; ++mx) {
      const int ox = std::abs(mx - px) + std::abs(mx);
      if (ox > n) continue;
      for (int py = 0; py <= 1; ++py)
        for (int my = -reach; my <= reach; ++my) {
          const int oy = std::abs(my - py) + std::abs(my);
          if (ox + oy > n) continue;
          for (int pz = 0; pz <= 1; ++pz)
            for (int mz = -reach; mz <= reach; ++mz) {
              const int order = ox + oy + std::abs(mz - pz) + std::abs(mz);
              if (order > n) continue;
              const double amp_r = beta_pow[static_cast<std::size_t>(order)];
              if (amp_r == 0) continue;
              const Eigen::Vector3d image((1 - 2 * px) * src.x() + 2 * mx * dims.x(),
                                          (1 - 2 * py) * src.y() + 2 * my * dims.y(),
                                          (1 - 2 * pz) * src.z() + 2 * mz * dims.z());
              const Eigen::Vector3d to_src = image - mic;
              const double dist = to_src.norm();
              CHANRANK_CHECK(dist > 1e-9, Errc::kInvalidArgument,
                             "source and microphone coincide");
              const double amp = amp_r * CardioidGain(orientation, to_src) / dist;
              const long delay = std::lround(dist / kSpeedOfSound * kSampleRate);
              arrivals.push_back({delay, amp});
              max_delay = std::max(max_delay, delay);
            }
        }
    }
  Rir rir;
  rir.taps.assign(static_cast<std::size_t>(max_delay + 1), 0.0);
  for (const auto &a : arrivals) rir.taps[static_cast<std::size_t>(a.delay)] += a.amp;
  return rir;
}

/// Schroeder backward-integrated energy decay curve in dB (0 at t = 0).
inline std::vector<double> SchroederDecayDb(const std::vector<double> &rir) {
  std::vector<double> edc(rir.size());
  double acc = 0;
  for (std::size_t i = rir.size(); i-- > 0;) {
    acc += rir[i] * rir[i];
    edc[i] = acc;
  }
  const double total = edc.empty() ? 0.0 : edc[0];
  for (double &e : edc) e = total > 0 && e > 0 ? 10.0 * std::log10(e / total) : -300.0;
  return edc;
}

/// T60 from a straight-line fit of the decay curve between -5 and -25 dB,
/// extrapolated to -60 dB.
inline double EstimateT60(const std::vector<double> &rir, int sample_rate = kSampleRate) {
  const auto edc = SchroederDecayDb(rir);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t i = 0; i < edc.size(); ++i) {
    if (edc[i] > -5.0 || edc[i] < -25.0) continue;
    const double x = static_cast<double>(i) / sample_rate;
    sx += x;
    sy += edc[i];
    sxx += x * x;
    sxy += x * edc[i];
    ++cnt;
  }
  CHANRANK_CHECK(cnt >= 2, Errc::kUndefined, "decay curve never reaches -25 dB");
  const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);  // dB per second
  CHANRANK_CHECK(slope < 0, Errc::kUndefined, "decay curve is not decreasing");
  return -60.0 / slope;
}

// ---------------------------------------------------------------------------
// Built-in source material.

namespace scene_detail {

// Two-pole resonator with unit peak gain at `freq`.
struct Resonator {
  double a1 = 0, a2 = 0, g = 1, y1 = 0, y2 = 0;
  void Tune(double freq, double bandwidth) {
    const double r = std::exp(-M_PI * bandwidth / kSampleRate);
    const double theta = 2.0 * M_PI * freq / kSampleRate;
    a1 = 2.0 * r * std::cos(theta);
    a2 = -r * r;
    g = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * theta) + r * r);
  }
  double Step(double x) {
    const double y = g * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

inline void NormalizeRms(std::vector<double> &x, double rms) {
  double e = 0;
  for (double v : x) e += v * v;
  if (e == 0) return;
  const double s = rms / std::sqrt(e / static_cast<double>(x.size()));
  for (double &v : x) v *= s;
}

}  // namespace scene_detail

/// Speech-shaped test signal: a mix of a glottal-like pulse train and noise,
/// shaped by three formant resonators retuned every syllable, under a 4 Hz
/// syllabic envelope with occasional pauses. RMS 0.05.
inline Waveform SpeechLikeSource(std::uint64_t seed, std::size_t num_samples) {
  using scene_detail::Resonator;
  auto rng = DerivedRng(seed, 0x53504348);
  std::vector<double> out(num_samples, 0.0);
  Resonator f1, f2, f3;
  const int syllable = kSampleRate / 4;
  double f0 = UniformDouble(rng, 100.0, 220.0);
  double phase = 0;
  double gain = 0;
  bool voiced = true;
  for (std::size_t n = 0; n < num_samples; ++n) {
    const auto pos = static_cast<int>(n % static_cast<std::size_t>(syllable));
    if (pos == 0) {
      f1.Tune(UniformDouble(rng, 300, 850), 90);
      f2.Tune(UniformDouble(rng, 900, 2400), 120);
      f3.Tune(UniformDouble(rng, 2400, 3400), 180);
      f0 = std::clamp(f0 * UniformDouble(rng, 0.9, 1.1), 90.0, 250.0);
      const bool pause = UniformDouble(rng, 0.0, 1.0) < 0.15 && n > 0;  // never silent overall
      gain = pause ? 0.0 : UniformDouble(rng, 0.5, 1.0);
      voiced = UniformDouble(rng, 0.0, 1.0) < 0.8;
    }
    const double env = gain * std::pow(std::sin(M_PI * pos / syllable), 2.0);
    phase += f0 / kSampleRate;
    double pulse = 0;
    if (phase >= 1.0) {
      phase -= 1.0;
      pulse = 1.0;
    }
    const double excitation = (voiced ? 4.0 * pulse : 0.0) + 0.3 * StandardNormal(rng);
    const double x = env * excitation;
    out[n] = f1.Step(x) + 0.6 * f2.Step(x) + 0.3 * f3.Step(x);
  }
  scene_detail::NormalizeRms(out, 0.05);
  return {out, kSampleRate};
}

/// Low-pass coloured Gaussian noise, RMS 0.05.
inline Waveform ColoredNoiseSource(std::uint64_t seed, std::size_t num_samples) {
  auto rng = DerivedRng(seed, 0x4e4f4953);
  const double a = UniformDouble(rng, 0.5, 0.95);
  std::vector<double> out(num_samples);
  double y = 0;
  for (auto &v : out) {
    const double x = StandardNormal(rng);
    y = a * y + (1.0 - a) * x;
    v = y + 0.05 * x;
  }
  scene_detail::NormalizeRms(out, 0.05);
  return {out, kSampleRate};
}

// ---------------------------------------------------------------------------
// Rendering and labels.

struct SimulatedUtterance {
  std::vector<Waveform> channels;
  Waveform clean_ref;
  std::vector<double> relevance;
  std::vector<double> sdr_db;
  Scene scene;
  std::uint64_t seed = 0;
  std::optional<double> snr_db;  // unset when no noise was added
  double noise_gain = 0;
};

/// relevance_i = logistic(SDR_i / 10); a silent channel gets 0.
inline std::vector<double> ProxyRelevance(const std::vector<Waveform> &channels,
                                          const Waveform &clean_ref,
                                          std::vector<double> *sdr_out = nullptr) {
  std::vector<double> rel;
  if (sdr_out) sdr_out->clear();
  for (const auto &c : channels) {
    const double s = Sdr(c, clean_ref);
    if (sdr_out) sdr_out->push_back(s);
    rel.push_back(std::isfinite(s) ? Logistic(s / 10.0) : 0.0);
  }
  return rel;
}

/// Renders `clean` (and optionally `noise`) through the scene. Channels are
/// truncated to the clean length. The noise gain puts the speech-to-noise
/// ratio at the microphone closest to the speaker at a value drawn uniformly
/// from [min_snr_db, max_snr_db].
inline SimulatedUtterance RenderScene(const Waveform &clean, const Waveform &noise,
                                      const Scene &scene, const SceneConfig &cfg,
                                      std::uint64_t seed) {
  cfg.Validate();
  clean.Validate();
  CHANRANK_CHECK(!clean.samples.empty(), Errc::kInvalidArgument, "clean source is empty");
  double clean_energy = 0;
  for (double v : clean.samples) clean_energy += v * v;
  CHANRANK_CHECK(clean_energy > 0, Errc::kSilentInput,
                 "clean source is silent; relevance would be undefined");
  const auto &pl = scene.placement;
  CHANRANK_CHECK(pl.mics.size() == pl.orientations.size() && !pl.mics.empty(),
                 Errc::kInvalidArgument, "scene needs matching mic positions and orientations");

  RirOptions ro;
  ro.max_order = cfg.anechoic ? 0 : cfg.max_order;
  if (cfg.anechoic) ro.absorption = 1.0;
  const std::size_t len = clean.size();
  auto render = [&](const Waveform &src, const Eigen::Vector3d &pos, std::size_t mic) {
    Rir rir = ImageSourceRir(scene.room, pos, pl.mics[mic], pl.orientations[mic], ro);
    std::vector<double> y = FftConvolve(src.samples, rir.taps);
    y.resize(len, 0.0);
    return y;
  };

  SimulatedUtterance u;
  u.scene = scene;
  u.seed = seed;
  u.clean_ref = clean;
  const std::size_t m = pl.mics.size();
  std::vector<std::vector<double>> speech(m), noise_img(m);
  for (std::size_t i = 0; i < m; ++i) speech[i] = render(clean, pl.speaker, i);

  double noise_energy_src = 0;
  for (double v : noise.samples) noise_energy_src += v * v;
  if (cfg.noise && noise_energy_src > 0) {
    noise.Validate();
    Waveform nz = noise;
    nz.samples.resize(len, 0.0);
    for (std::size_t i = 0; i < m; ++i) noise_img[i] = render(nz, pl.noise, i);
    const std::size_t closest =
        ArgMax(ClosestSelect(pl.speaker, pl.mics).scores);
    double es = 0, en = 0;
    for (std::size_t t = 0; t < len; ++t) {
      es += speech[closest][t] * speech[closest][t];
      en += noise_img[closest][t] * noise_img[closest][t];
    }
    auto rng = DerivedRng(seed, 0x534e52);
    const double snr = UniformDouble(rng, cfg.min_snr_db, cfg.max_snr_db);
    if (en > 0 && es > 0) {
      u.noise_gain = std::sqrt(es / (en * std::pow(10.0, snr / 10.0)));
      u.snr_db = snr;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    Waveform w{std::move(speech[i]), kSampleRate};
    if (u.noise_gain > 0)
      for (std::size_t t = 0; t < len; ++t) w.samples[t] += u.noise_gain * noise_img[i][t];
    u.channels.push_back(std::move(w));
  }
  u.relevance = ProxyRelevance(u.channels, u.clean_ref, &u.sdr_db);
  return u;
}

/// Complete utterance from a seed with built-in source material.
inline SimulatedUtterance SimulateUtterance(std::uint64_t seed, const SceneConfig &cfg = {}) {
  cfg.Validate();
  const auto n = static_cast<std::size_t>(std::lround(cfg.duration_s * kSampleRate));
  const Scene scene = SampleScene(seed, cfg);
  const Waveform clean = SpeechLikeSource(seed, n);
  const Waveform noise = cfg.noise ? ColoredNoiseSource(seed, n) : Waveform{};
  return RenderScene(clean, noise, scene, cfg, seed);
}

}  // namespace chanrank
