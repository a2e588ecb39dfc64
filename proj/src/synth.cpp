#include "radarformer/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "radarformer/error.hpp"
#include "radarformer/rng.hpp"

namespace radar {

Scenario parse_scenario(const std::string& tag) {
  if (tag == "PL") return Scenario::PL;
  if (tag == "CR") return Scenario::CR;
  if (tag == "CS") return Scenario::CS;
  if (tag == "HW") return Scenario::HW;
  throw ConfigError("unknown scenario '" + tag + "' (expected PL, CR, CS or HW)");
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::PL: return "PL";
    case Scenario::CR: return "CR";
    case Scenario::CS: return "CS";
    case Scenario::HW: return "HW";
  }
  return "PL";
}

const ScenarioProfile& scenario_profile(Scenario s) {
  static const ScenarioProfile table[] = {
      {6.0, {0.45, 0.15, 0.40}, 0.0, 1.5, 0.10, 0.15},
      {5.0, {0.50, 0.35, 0.15}, 0.5, 3.0, 0.10, 0.20},
      {5.0, {0.35, 0.25, 0.40}, 1.0, 4.0, 0.10, 0.20},
      {4.0, {0.00, 0.10, 0.90}, 3.0, 6.0, 0.15, 0.20},
  };
  return table[static_cast<int>(s)];
}

std::pair<double, double> amplitude_range(int cls) {
  static const std::pair<double, double> table[] = {{0.8, 1.2}, {1.6, 2.4}, {3.2, 4.8}};
  return table[cls];
}

double TargetSpec::phase(Index frame, Index chirp) const {
  const double t = double(frame) * kFramePeriod + double(chirp) * kChirpInterval;
  return phase0 + 2.0 * std::numbers::pi * 2.0 * velocity * t / kWavelength;
}

Index range_bin(double range_m, Index height) {
  return std::clamp(static_cast<Index>(std::floor(range_m / kRangeResolution)), Index{0}, height - 1);
}

Index azimuth_bin(double azimuth_deg, Index width) {
  const double u = (azimuth_deg - kAzimuthMin) / (kAzimuthMax - kAzimuthMin);
  return std::clamp(static_cast<Index>(std::lround(u * double(width - 1))), Index{0}, width - 1);
}

namespace {

int sample_class(Rng& rng, const ScenarioProfile& p) {
  double u = rng.uniform(), acc = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    acc += p.class_mix[std::size_t(c)];
    if (u < acc) return c;
  }
  return kNumClasses - 1;
}

// Interval of start values keeping x0 + dx inside [lo, hi] for the whole
// clip; shrinks the displacement when it does not fit.
double place(Rng& rng, double lo, double hi, double& dx) {
  const double span = hi - lo;
  if (std::abs(dx) > 0.9 * span) dx = std::copysign(0.9 * span, dx);
  const double a = lo + std::max(0.0, -dx), b = hi - std::max(0.0, dx);
  return rng.uniform(a, b);
}

}  // namespace

Scene generate_scene(std::uint64_t seed, Scenario scenario, const SynthConfig& config) {
  if (config.frames < 1 || config.chirps < 1 || config.height < 8 || config.width < 2) {
    throw ConfigError("synthetic scenes need frames, chirps >= 1, height >= 8 and width >= 2");
  }
  const auto& prof = scenario_profile(scenario);
  Rng rng(mix_seed(seed, 0x5ce9e));
  Scene scene;
  scene.seed = seed;
  scene.scenario = scenario;
  scene.config = config;
  scene.noise_sigma = rng.uniform(prof.noise_lo, prof.noise_hi);

  const double mean = config.mean_objects >= 0.0 ? config.mean_objects : prof.mean_objects;
  const Index wanted = std::min<Index>(config.max_objects, rng.poisson(mean));
  const double duration = double(config.frames - 1) * kFramePeriod;
  // Keep the last range bin strictly inside the grid.
  const double range_lo = 1.0, range_hi = kRangeResolution * double(config.height) - 1e-6;

  for (Index attempt = 0; attempt < 50 * (wanted + 1) && Index(scene.targets.size()) < wanted; ++attempt) {
    TargetSpec t;
    t.cls = sample_class(rng, prof);
    const double speed = rng.uniform(prof.speed_lo, prof.speed_hi);
    // Radial share of the motion; the rest is lateral and sweeps azimuth.
    const double radial = rng.uniform(-1.0, 1.0);
    double dr = speed * radial * duration;
    t.range = place(rng, range_lo, range_hi, dr);
    t.velocity = duration > 0.0 ? dr / duration : speed * radial;
    const double lateral = speed * std::sqrt(1.0 - radial * radial) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    double da = lateral / std::max(t.range, 1.0) * 180.0 / std::numbers::pi * duration;
    t.azimuth = place(rng, kAzimuthMin, kAzimuthMax, da);
    t.azimuth_rate = duration > 0.0 ? da / duration : 0.0;
    const auto [alo, ahi] = amplitude_range(t.cls);
    t.amplitude = rng.uniform(alo, ahi);
    t.phase0 = rng.uniform(0.0, 2.0 * std::numbers::pi);

    bool ok = true;
    for (Index f = 0; f < config.frames && ok; ++f) {
      const double r = double(range_bin(t.range_at(f), config.height));
      const double a = double(azimuth_bin(t.azimuth_at(f), config.width));
      for (const auto& o : scene.targets) {
        const double ro = double(range_bin(o.range_at(f), config.height));
        const double ao = double(azimuth_bin(o.azimuth_at(f), config.width));
        if (std::hypot(r - ro, a - ao) < config.min_separation) {
          ok = false;
          break;
        }
      }
    }
    if (ok) scene.targets.push_back(t);
  }
  return scene;
}

template <typename S>
RenderedSceneT<S> render_ramap_as(const Scene& scene) {
  const auto& c = scene.config;
  const Index T = c.frames, C = c.chirps, H = c.height, W = c.width;
  RenderedSceneT<S> out;
  out.cube = Tensor<S>::zeros({2, T, C, H, W});
  auto data = out.cube.mutable_data();
  const Index plane = H * W;
  auto index = [&](Index part, Index f, Index ch) { return ((part * T + f) * C + ch) * plane; };

  Rng noise(mix_seed(scene.seed, 0x4015e));
  std::vector<double> re(static_cast<std::size_t>(plane)), im(static_cast<std::size_t>(plane));
  const Index rr = Index(std::ceil(4 * kBlobSigmaRange)), ra = Index(std::ceil(4 * kBlobSigmaAzimuth));

  for (Index f = 0; f < T; ++f) {
    for (const auto& t : scene.targets) {
      const Index r0 = range_bin(t.range_at(f), H), a0 = azimuth_bin(t.azimuth_at(f), W);
      out.annotations.push_back({f, t.cls, r0, a0});
    }
    for (Index ch = 0; ch < C; ++ch) {
      std::fill(re.begin(), re.end(), 0.0);
      std::fill(im.begin(), im.end(), 0.0);
      for (const auto& t : scene.targets) {
        const Index r0 = range_bin(t.range_at(f), H), a0 = azimuth_bin(t.azimuth_at(f), W);
        const double ph = t.phase(f, ch);
        const double cr = t.amplitude * std::cos(ph), ci = t.amplitude * std::sin(ph);
        for (Index r = std::max<Index>(0, r0 - rr); r <= std::min(H - 1, r0 + rr); ++r) {
          const double dr = double(r - r0) / kBlobSigmaRange;
          for (Index a = std::max<Index>(0, a0 - ra); a <= std::min(W - 1, a0 + ra); ++a) {
            const double da = double(a - a0) / kBlobSigmaAzimuth;
            const double g = std::exp(-0.5 * (dr * dr + da * da));
            re[std::size_t(r * W + a)] += cr * g;
            im[std::size_t(r * W + a)] += ci * g;
          }
        }
      }
      const Index b0 = index(0, f, ch), b1 = index(1, f, ch);
      for (Index i = 0; i < plane; ++i) {
        const double nr = scene.noise_sigma > 0.0 ? noise.normal(0.0, scene.noise_sigma) : 0.0;
        const double ni = scene.noise_sigma > 0.0 ? noise.normal(0.0, scene.noise_sigma) : 0.0;
        data[std::size_t(b0 + i)] = static_cast<S>(re[std::size_t(i)] + nr);
        data[std::size_t(b1 + i)] = static_cast<S>(im[std::size_t(i)] + ni);
      }
    }
  }
  return out;
}

template RenderedSceneT<float> render_ramap_as<float>(const Scene&);
template RenderedSceneT<double> render_ramap_as<double>(const Scene&);

}  // namespace radar
