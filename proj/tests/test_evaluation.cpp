#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "radarformer/error.hpp"
#include "radarformer/evaluation.hpp"
#include "oracles.hpp"

using namespace radar;
using radar::testing::assignment_oracle;
using radar::testing::max_matching;

namespace {

// kappa for class 0 such that two points 10 azimuth bins apart at range bin
// 20 (s = 1) have OLS exactly `target`.
CodecParams params_for_ols(double target) {
  CodecParams p;
  p.kappa[0] = 2.3 / std::sqrt(2.0 * std::log(1.0 / target));
  return p;
}

std::vector<EvalFrame> random_frames(std::uint64_t seed, int count) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> bin(10, 40), cls(0, 2), n(0, 4), jitter(-3, 3), tag(0, 3);
  std::uniform_real_distribution<double> conf(0.05, 1.0), coin(0, 1);
  std::vector<EvalFrame> frames;
  for (int f = 0; f < count; ++f) {
    EvalFrame fr{"seq" + std::to_string(f % 3), f, kScenarios[std::size_t(tag(gen))], {}, {}};
    for (int i = n(gen); i > 0; --i) {
      Annotation g{f, cls(gen), bin(gen), bin(gen)};
      fr.gts.push_back(g);
      if (coin(gen) < 0.8) fr.dets.push_back({f, g.cls, g.range + jitter(gen), g.azimuth + jitter(gen), conf(gen)});
    }
    for (int i = n(gen) / 2; i > 0; --i) fr.dets.push_back({f, cls(gen), bin(gen), bin(gen), conf(gen)});
    std::sort(fr.dets.begin(), fr.dets.end(),
              [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
    frames.push_back(fr);
  }
  return frames;
}

}  // namespace

TEST_CASE("single-pair matching against the threshold") {
  const auto p = params_for_ols(0.7);
  const Detection d{0, 0, 20, 40, 0.9};
  const Annotation g{0, 0, 20, 30};
  CHECK(std::abs(ols(d, g, p) - 0.7) < 1e-14);
  auto c = match_frame({d}, {g}, 0.5, p);
  CHECK((c.tp == 1 && c.fp == 0 && c.fn == 0));
  c = match_frame({d}, {g}, 0.75, p);
  CHECK((c.tp == 0 && c.fp == 1 && c.fn == 1));
  c = match_frame({Detection{0, 1, 20, 30, 0.9}}, {g}, 0.5, p);
  CHECK((c.tp == 0 && c.fp == 1 && c.fn == 1));
}

TEST_CASE("greedy matching equals the exhaustive assignment oracle on small instances") {
  std::mt19937 gen(3);
  std::uniform_int_distribution<int> bin(0, 12), cls(0, 1), nd(0, 3), ng(0, 3);
  std::uniform_real_distribution<double> conf(0, 1);
  int differs_from_max = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<Detection> dets;
    std::vector<Annotation> gts;
    for (int i = nd(gen); i > 0; --i) dets.push_back({0, cls(gen), bin(gen), bin(gen), conf(gen)});
    for (int i = ng(gen); i > 0; --i) gts.push_back({0, cls(gen), bin(gen), bin(gen)});
    std::sort(dets.begin(), dets.end(), [](auto& a, auto& b) { return a.confidence > b.confidence; });
    const double thr = kOlsThresholds[std::size_t(trial % 9)];
    const auto c = match_frame(dets, gts, thr);
    CHECK(c.tp == assignment_oracle(dets, gts, thr, {}));
    CHECK(c.tp + c.fp == Index(dets.size()));
    CHECK(c.tp + c.fn == Index(gts.size()));
    const Index best = max_matching(dets, gts, thr, {});
    CHECK(c.tp <= best);
    CHECK(2 * c.tp >= best);
    differs_from_max += c.tp != best;
  }
  MESSAGE("greedy below maximum matching in " << differs_from_max << " of 2000 instances");
}

TEST_CASE("threshold sweep hand cases") {
  const auto p = params_for_ols(0.7);
  EvalFrame f{"s", 0, "PL", {{0, 0, 20, 40, 0.9}}, {{0, 0, 20, 30}}};
  auto r = evaluate({f}, p);
  CHECK(r.per_threshold.size() == 9);
  CHECK(std::abs(r.ap - 5.0 / 9.0) < 1e-12);
  CHECK(std::abs(r.ar - 5.0 / 9.0) < 1e-12);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(r.per_threshold[i].threshold == kOlsThresholds[i]);
    CHECK(r.per_threshold[i].counts.tp == (i < 5 ? 1 : 0));
  }

  auto frames = random_frames(5, 30);
  for (auto& fr : frames) {
    fr.dets.clear();
    for (const auto& g : fr.gts) fr.dets.push_back({g.frame, g.cls, g.range, g.azimuth, 0.5});
  }
  r = evaluate(frames);
  CHECK(r.ap == 1.0);
  CHECK(r.ar == 1.0);
  for (const auto& [tag, s] : r.per_scenario) CHECK((s.ap == 1.0 && s.ar == 1.0));

  for (auto& fr : frames) fr.dets.clear();
  r = evaluate(frames);
  CHECK(r.ap == 0.0);
  CHECK(r.ar == 0.0);
}

TEST_CASE("101-point interpolation on a hand-ranked list") {
  // Ranked TP, FP, TP with 2 ground truths: precision 1, 1/2, 2/3 at
  // recall 1/2, 1/2, 1. Interpolated precision is 1 for r <= 0.5 and 2/3
  // above.
  EvalFrame f{"s", 0, "CR", {{0, 0, 10, 10, 0.9}, {0, 0, 100, 100, 0.8}, {0, 0, 60, 60, 0.7}},
              {{0, 0, 10, 10}, {0, 0, 60, 60}}};
  auto r = evaluate({f}, {}, {0.5});
  CHECK(std::abs(r.ap - (51.0 + 50.0 * 2.0 / 3.0) / 101.0) < 1e-12);
  CHECK(r.ar == 1.0);
}

TEST_CASE("metric properties on random data") {
  const auto frames = random_frames(9, 60);
  const auto base = evaluate(frames);
  CHECK((base.ap >= 0.0 && base.ap <= 1.0 && base.ar >= 0.0 && base.ar <= 1.0));

  // Shifting the threshold grid upward never helps.
  std::vector<double> shifted;
  for (double t : kOlsThresholds) shifted.push_back(t + 0.05);
  const auto harder = evaluate(frames, {}, shifted);
  CHECK(harder.ap <= base.ap + 1e-15);
  CHECK(harder.ar <= base.ar + 1e-15);
  for (std::size_t i = 1; i < base.per_threshold.size(); ++i) {
    CHECK(base.per_threshold[i].ar <= base.per_threshold[i - 1].ar);
  }

  // Duplicated detections keep AR and never raise AP.
  auto dup = frames;
  for (auto& f : dup) {
    auto d = f.dets;
    f.dets.clear();
    for (const auto& x : d) f.dets.insert(f.dets.end(), {x, x});
  }
  const auto doubled = evaluate(dup);
  CHECK(doubled.ar == base.ar);
  CHECK(doubled.ap <= base.ap);

  // Ordering of frames and ground truths does not matter.
  auto shuffled = frames;
  std::mt19937 gen(1);
  std::shuffle(shuffled.begin(), shuffled.end(), gen);
  for (auto& f : shuffled) std::shuffle(f.gts.begin(), f.gts.end(), gen);
  const auto again = evaluate(shuffled);
  CHECK(again.ap == base.ap);
  CHECK(again.ar == base.ar);
  for (const auto& [tag, s] : base.per_scenario) {
    CHECK(again.per_scenario.at(tag).ap == s.ap);
    CHECK(again.per_scenario.at(tag).frames == s.frames);
  }
}

TEST_CASE("single-frame evaluation aggregates match_frame per threshold") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto frame = random_frames(100 + seed, 1)[0];
    if (frame.gts.empty()) continue;
    const auto r = evaluate({frame});
    double ar = 0.0;
    for (std::size_t i = 0; i < 9; ++i) {
      const auto c = match_frame(frame.dets, frame.gts, kOlsThresholds[i]);
      CHECK(r.per_threshold[i].counts.tp == c.tp);
      CHECK(r.per_threshold[i].counts.fp == c.fp);
      CHECK(r.per_threshold[i].counts.fn == c.fn);
      ar += double(c.tp) / double(frame.gts.size());
    }
    CHECK(std::abs(r.ar - ar / 9.0) < 1e-12);
  }
}

TEST_CASE("frame alignment and reports") {
  const std::vector<Annotation> gts{{0, 0, 5, 5}, {2, 1, 7, 7}};
  const std::vector<Detection> dets{{2, 1, 7, 7, 0.9}};
  const auto frames = align_frames("seq", "HW", 3, gts, dets);
  REQUIRE(frames.size() == 3);
  CHECK(frames[2].dets.size() == 1);
  CHECK(frames[1].gts.empty());
  CHECK_THROWS_AS(align_frames("seq", "HW", 3, gts, {{3, 0, 1, 1, 0.5}}), DataError);
  CHECK_THROWS_AS(align_frames("seq", "HW", 2, gts, {}), DataError);

  const auto r = evaluate(frames);
  const auto table = results_table(r);
  for (const char* row : {"Total", "PL", "CR", "CS", "HW", "AP", "AR"}) CHECK(table.find(row) != std::string::npos);
  const auto kv = results_kv(r);
  CHECK(kv.get_double("total.ap") == r.ap);
  CHECK(kv.get_double("HW.ar") == r.per_scenario.at("HW").ar);
  CHECK(kv.has("ols0.90.tp"));
  CHECK_FALSE(kv.has("PL.ap"));
}
