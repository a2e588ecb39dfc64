#pragma once
// Brute-force reference implementations shared by the unit tests and the
// acceptance harness. They are written from the documented definitions and
// do not call the library code they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <tuple>
#include <vector>

#include "radarformer/confmap.hpp"
#include "radarformer/kernels.hpp"
#include "radarformer/tensor.hpp"

namespace radar::testing {

// OLS from the documented constants.
inline double ols_oracle(int cls, double r1, double a1, double r2, double a2) {
  const double kappa[] = {0.5, 1.0, 2.0};
  const double d2 = ((r1 - r2) * (r1 - r2) + (a1 - a2) * (a1 - a2)) * 0.23 * 0.23;
  const double s = std::max(1.0, (r1 + r2) / 2 * 0.23 / 10);
  return std::exp(-d2 / (2 * s * s * kappa[cls] * kappa[cls]));
}

// Repeatedly take the best remaining candidate and drop every remaining
// same-class candidate that overlaps it.
inline std::vector<Detection> nms_oracle(std::vector<Detection> pool, double threshold) {
  std::vector<Detection> kept;
  while (!pool.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
      const auto& a = pool[i];
      const auto& b = pool[best];
      if (a.confidence > b.confidence ||
          (a.confidence == b.confidence && std::tie(a.cls, a.range, a.azimuth) < std::tie(b.cls, b.range, b.azimuth))) {
        best = i;
      }
    }
    const Detection k = pool[best];
    kept.push_back(k);
    std::vector<Detection> rest;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (i == best) continue;
      const auto& c = pool[i];
      if (c.cls == k.cls && ols_oracle(c.cls, c.range, c.azimuth, k.range, k.azimuth) > threshold) continue;
      rest.push_back(c);
    }
    pool = std::move(rest);
  }
  return kept;
}

// Exhaustive: among all valid one-to-one assignments pick the one whose
// per-detection matched OLS sequence (confidence order, unmatched = -1) is
// lexicographically largest; returns its TP count.
inline Index assignment_oracle(const std::vector<Detection>& dets, const std::vector<Annotation>& gts, double thr,
                               const CodecParams& p) {
  std::vector<double> best_key;
  Index best_tp = -1;
  std::vector<int> assign(dets.size(), -1);
  std::function<void(std::size_t, std::vector<bool>&)> rec = [&](std::size_t i, std::vector<bool>& used) {
    if (i == dets.size()) {
      std::vector<double> key;
      Index tp = 0;
      for (std::size_t d = 0; d < dets.size(); ++d) {
        key.push_back(assign[d] < 0 ? -1.0 : ols(dets[d], gts[std::size_t(assign[d])], p));
        tp += assign[d] >= 0;
      }
      if (best_tp < 0 || key > best_key) {
        best_key = key;
        best_tp = tp;
      }
      return;
    }
    assign[i] = -1;
    rec(i + 1, used);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].cls != dets[i].cls || ols(dets[i], gts[g], p) < thr - 1e-12) continue;
      used[g] = true;
      assign[i] = int(g);
      rec(i + 1, used);
      used[g] = false;
      assign[i] = -1;
    }
  };
  std::vector<bool> used(gts.size(), false);
  rec(0, used);
  return best_tp;
}

// Size of a maximum one-to-one matching with OLS >= thr.
inline Index max_matching(const std::vector<Detection>& dets, const std::vector<Annotation>& gts, double thr,
                          const CodecParams& p) {
  Index best = 0;
  std::function<void(std::size_t, std::vector<bool>&, Index)> rec = [&](std::size_t i, std::vector<bool>& used,
                                                                        Index tp) {
    if (i == dets.size()) {
      best = std::max(best, tp);
      return;
    }
    rec(i + 1, used, tp);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].cls != dets[i].cls || ols(dets[i], gts[g], p) < thr - 1e-12) continue;
      used[g] = true;
      rec(i + 1, used, tp + 1);
      used[g] = false;
    }
  };
  std::vector<bool> used(gts.size(), false);
  rec(0, used, 0);
  return best;
}

// Multiply-accumulates literally executed by `f` (no gradient recording).
template <typename F>
std::int64_t counted_macs(F&& f) {
  NoGradGuard<double> guard;
  kernels::ScopedMacCounter counter;
  f();
  return std::int64_t(counter.count());
}

}  // namespace radar::testing
