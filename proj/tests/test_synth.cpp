#include <cmath>
#include <cstring>
#include <numbers>

#include "doctest.h"
#include "radarformer/error.hpp"
#include "radarformer/synth.hpp"

using namespace radar;

namespace {

SynthConfig small(Index frames = 8) {
  SynthConfig c;
  c.frames = frames;
  c.height = 64;
  c.width = 64;
  return c;
}

Scene single(const TargetSpec& t, double noise, const SynthConfig& c) {
  Scene s;
  s.seed = 11;
  s.config = c;
  s.noise_sigma = noise;
  s.targets = {t};
  return s;
}

template <typename T>
double mag(const Tensor<T>& cube, Index f, Index ch, Index r, Index a) {
  const Index T_ = cube.dim(1), C = cube.dim(2), H = cube.dim(3), W = cube.dim(4);
  const auto d = cube.data();
  const auto at = [&](Index part) { return double(d[std::size_t((((part * T_ + f) * C + ch) * H + r) * W + a)]); };
  return std::hypot(at(0), at(1));
}

template <typename T>
double angle(const Tensor<T>& cube, Index f, Index ch, Index r, Index a) {
  const Index T_ = cube.dim(1), C = cube.dim(2), H = cube.dim(3), W = cube.dim(4);
  const auto d = cube.data();
  const auto at = [&](Index part) { return double(d[std::size_t((((part * T_ + f) * C + ch) * H + r) * W + a)]); };
  return std::atan2(at(1), at(0));
}

double wrap(double x) { return std::remainder(x, 2.0 * std::numbers::pi); }

}  // namespace

TEST_CASE("scenes are deterministic per seed and scenario") {
  for (Scenario sc : {Scenario::PL, Scenario::CR, Scenario::CS, Scenario::HW}) {
    const auto a = render_ramap(generate_scene(5, sc, small()));
    const auto b = render_ramap(generate_scene(5, sc, small()));
    CHECK(std::memcmp(a.cube.data().data(), b.cube.data().data(), a.cube.data().size_bytes()) == 0);
    CHECK(a.annotations == b.annotations);
    const auto c = render_ramap(generate_scene(6, sc, small()));
    CHECK(std::memcmp(a.cube.data().data(), c.cube.data().data(), a.cube.data().size_bytes()) != 0);
  }
  CHECK(parse_scenario("CS") == Scenario::CS);
  CHECK_THROWS_AS(parse_scenario("XX"), ConfigError);
}

TEST_CASE("highway targets move faster than parking-lot targets") {
  auto mean_speed = [](Scenario sc) {
    double sum = 0.0;
    Index n = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      for (const auto& t : generate_scene(seed, sc).targets) {
        const double lateral = t.azimuth_rate * std::numbers::pi / 180.0 * t.range;
        sum += std::hypot(t.velocity, lateral);
        ++n;
      }
    }
    return sum / double(n);
  };
  const double pl = mean_speed(Scenario::PL), hw = mean_speed(Scenario::HW);
  MESSAGE("mean speed PL " << pl << " m/s, HW " << hw << " m/s");
  CHECK(hw > pl);
}

TEST_CASE("targets stay in the grid and apart for 1000 seeds") {
  const SynthConfig c;
  double objects = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto scene = generate_scene(seed, static_cast<Scenario>(seed % 4), c);
    objects += double(scene.targets.size());
    for (const auto& t : scene.targets) {
      CHECK(t.amplitude > 0.0);
      for (Index f = 0; f < c.frames; ++f) {
        const double r = t.range_at(f), a = t.azimuth_at(f);
        CHECK((r >= 1.0 && r < kRangeResolution * double(c.height)));
        CHECK((a >= kAzimuthMin && a <= kAzimuthMax));
      }
    }
    for (Index f = 0; f < c.frames; ++f) {
      for (std::size_t i = 0; i < scene.targets.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          const auto &p = scene.targets[i], &q = scene.targets[j];
          const double dr = double(range_bin(p.range_at(f), c.height) - range_bin(q.range_at(f), c.height));
          const double da = double(azimuth_bin(p.azimuth_at(f), c.width) - azimuth_bin(q.azimuth_at(f), c.width));
          CHECK(std::hypot(dr, da) >= c.min_separation);
        }
      }
    }
  }
  MESSAGE("mean objects per scene " << objects / 1000.0);
  CHECK(std::abs(objects / 1000.0 - 5.0) < 1.0);
}

TEST_CASE("a static noise-free target peaks exactly at its bin") {
  const auto c = small(4);
  TargetSpec t;
  t.cls = 2;
  t.range = 7.0;
  t.azimuth = 12.0;
  t.amplitude = 3.5;
  t.phase0 = 0.7;
  const auto r = render_ramap(single(t, 0.0, c));
  const Index r0 = range_bin(t.range, c.height), a0 = azimuth_bin(t.azimuth, c.width);
  REQUIRE(r.annotations.size() == 4);
  for (const auto& ann : r.annotations) CHECK((ann.cls == 2 && ann.range == r0 && ann.azimuth == a0));
  for (Index f = 0; f < c.frames; ++f) {
    for (Index ch = 0; ch < c.chirps; ++ch) {
      const double peak = mag(r.cube, f, ch, r0, a0);
      CHECK(std::abs(peak - t.amplitude) < 1e-5);
      for (Index y = 0; y < c.height; ++y)
        for (Index x = 0; x < c.width; ++x)
          if (y != r0 || x != a0) CHECK(mag(r.cube, f, ch, y, x) < peak);
    }
  }
}

TEST_CASE("annotations are the argmax of each target's noise-free blob") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = small(6);
    const auto scene = generate_scene(seed, static_cast<Scenario>(seed % 4), c);
    const auto full = render_ramap(scene);
    Index k = 0;
    for (Index f = 0; f < c.frames; ++f) {
      for (const auto& t : scene.targets) {
        const auto alone = render_ramap_as<double>(single(t, 0.0, c));
        const auto& ann = full.annotations[std::size_t(k++)];
        CHECK(ann.frame == f);
        double best = -1.0;
        Index br = -1, ba = -1;
        for (Index y = 0; y < c.height; ++y)
          for (Index x = 0; x < c.width; ++x)
            if (const double m = mag(alone.cube, f, 0, y, x); m > best) {
              best = m;
              br = y;
              ba = x;
            }
        CHECK(ann.range == br);
        CHECK(ann.azimuth == ba);
      }
    }
    CHECK(k == Index(full.annotations.size()));
  }
}

TEST_CASE("an empty scene is pure noise") {
  Scene s;
  s.seed = 3;
  s.config = small(4);
  s.noise_sigma = 0.2;
  const auto r = render_ramap_as<double>(s);
  CHECK(r.annotations.empty());
  double sum = 0.0, sq = 0.0;
  for (double v : r.cube.data()) {
    sum += v;
    sq += v * v;
  }
  const double n = double(r.cube.numel());
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(std::sqrt(sq / n) - 0.2) < 0.01);
  s.noise_sigma = 0.0;
  for (float v : render_ramap(s).cube.data()) CHECK(v == 0.0f);
}

TEST_CASE("chirp phase rotation follows the radial velocity model") {
  const auto c = small(4);
  for (double v : {-5.0, -0.3, 0.01, 1.7, 4.2}) {
    TargetSpec t;
    t.range = 6.0;
    t.azimuth = -10.0;
    t.velocity = v;
    t.amplitude = 1.0;
    t.phase0 = 0.3;
    const auto s = single(t, 0.0, c);
    const auto d = render_ramap_as<double>(s);
    const auto f32 = render_ramap(s);
    for (Index f = 0; f < c.frames; ++f) {
      const Index r0 = range_bin(t.range_at(f), c.height), a0 = azimuth_bin(t.azimuth_at(f), c.width);
      const double model = wrap(2.0 * std::numbers::pi * 2.0 * v * 3.0 * kChirpInterval / kWavelength);
      CHECK(std::abs(wrap(angle(d.cube, f, 3, r0, a0) - angle(d.cube, f, 0, r0, a0)) - model) < 1e-9);
      CHECK(std::abs(wrap(angle(f32.cube, f, 3, r0, a0) - angle(f32.cube, f, 0, r0, a0)) - model) < 1e-6);
    }
  }
}

TEST_CASE("measured peak-to-noise ratio tracks amplitude over sigma") {
  // One target per scene; the noise floor is the per-component RMS over
  // pixels outside the blob support.
  const auto c = small(16);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto scene = generate_scene(seed, static_cast<Scenario>(seed % 4), c);
    if (scene.targets.empty()) continue;
    scene.targets.resize(1);
    const auto& t = scene.targets[0];
    const auto r = render_ramap_as<double>(scene);
    double peak = 0.0, sq = 0.0;
    Index n = 0;
    for (Index f = 0; f < c.frames; ++f) {
      const Index r0 = range_bin(t.range_at(f), c.height), a0 = azimuth_bin(t.azimuth_at(f), c.width);
      for (Index ch = 0; ch < c.chirps; ++ch) {
        peak += mag(r.cube, f, ch, r0, a0);
        for (Index y = 0; y < c.height; ++y)
          for (Index x = 0; x < c.width; ++x)
            if (std::abs(y - r0) > 12 || std::abs(x - a0) > 16) {
              const double m = mag(r.cube, f, ch, y, x);
              sq += m * m;
              ++n;
            }
      }
    }
    peak /= double(c.frames * c.chirps);
    const double floor = std::sqrt(sq / double(2 * n));
    const double rel = std::abs(peak / floor / (t.amplitude / scene.noise_sigma) - 1.0);
    worst = std::max(worst, rel);
    CHECK(rel < 0.1);
  }
  MESSAGE("worst relative SNR deviation " << worst);
}
