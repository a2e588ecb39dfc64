#pragma once
// Synthetic FMCW range-azimuth scenes. Targets are complex Gaussian blobs on
// the RA grid whose phase rotates across chirps with radial velocity:
//   phase(frame f, chirp i) = phase0 + 2 pi * 2 v (f * kFramePeriod + i * kChirpInterval) / kWavelength
// Blob widths are kBlobSigmaRange x kBlobSigmaAzimuth bins; noise is complex
// Gaussian with per-component standard deviation sigma_n.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "radarformer/confmap.hpp"
#include "radarformer/tensor.hpp"

namespace radar {

inline constexpr double kRangeResolution = 0.23;  // m per range bin
inline constexpr double kAzimuthMin = -45.0, kAzimuthMax = 45.0;
inline constexpr double kWavelength = 3.9e-3;  // 77 GHz
inline constexpr double kFramePeriod = 1.0 / 30.0;
// Chirps 0, 64, 128, 192 of 256 per frame.
inline constexpr double kChirpInterval = kFramePeriod * 64.0 / 256.0;
inline constexpr double kBlobSigmaRange = 2.0, kBlobSigmaAzimuth = 3.0;

enum class Scenario { PL, CR, CS, HW };
Scenario parse_scenario(const std::string& tag);
std::string scenario_name(Scenario s);

// Scenario profile table.
//        objects  pedestrian/cyclist/car  speed m/s   sigma_n
//   PL   6        0.45 / 0.15 / 0.40      0.0 - 1.5   0.10 - 0.15
//   CR   5        0.50 / 0.35 / 0.15      0.5 - 3.0   0.10 - 0.20
//   CS   5        0.35 / 0.25 / 0.40      1.0 - 4.0   0.10 - 0.20
//   HW   4        0.00 / 0.10 / 0.90      3.0 - 6.0   0.15 - 0.20
// Amplitudes: pedestrian 0.8 - 1.2, cyclist 1.6 - 2.4, car 3.2 - 4.8.
struct ScenarioProfile {
  double mean_objects;
  std::array<double, kNumClasses> class_mix;
  double speed_lo, speed_hi;
  double noise_lo, noise_hi;
};
const ScenarioProfile& scenario_profile(Scenario s);
std::pair<double, double> amplitude_range(int cls);

struct SynthConfig {
  Index frames = 32;
  Index chirps = 4;
  Index height = 128;  // range bins
  Index width = 128;   // azimuth bins
  double mean_objects = -1.0;  // < 0 uses the scenario profile
  Index max_objects = 12;
  double min_separation = 6.0;  // bins, enforced in every frame
};

struct TargetSpec {
  int cls = 0;
  double range = 1.0;    // m at frame 0
  double azimuth = 0.0;  // deg at frame 0
  double velocity = 0.0;      // radial, m/s
  double azimuth_rate = 0.0;  // deg/s
  double amplitude = 1.0;
  double phase0 = 0.0;

  double range_at(Index frame) const { return range + velocity * double(frame) * kFramePeriod; }
  double azimuth_at(Index frame) const { return azimuth + azimuth_rate * double(frame) * kFramePeriod; }
  double phase(Index frame, Index chirp) const;
};

struct Scene {
  std::uint64_t seed = 0;
  Scenario scenario = Scenario::PL;
  SynthConfig config;
  double noise_sigma = 0.1;
  std::vector<TargetSpec> targets;
};

Index range_bin(double range_m, Index height);
Index azimuth_bin(double azimuth_deg, Index width);

Scene generate_scene(std::uint64_t seed, Scenario scenario, const SynthConfig& config = {});

template <typename T>
struct RenderedSceneT {
  Tensor<T> cube;  // [2, T, C, H, W], channel 0 real, 1 imaginary
  std::vector<Annotation> annotations;
};
using RenderedScene = RenderedSceneT<float>;

// Samples are accumulated in double and stored as T.
template <typename T>
RenderedSceneT<T> render_ramap_as(const Scene& scene);
inline RenderedScene render_ramap(const Scene& scene) { return render_ramap_as<float>(scene); }

}  // namespace radar
