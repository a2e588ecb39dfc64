#pragma once
// Central finite-difference verification of reverse-mode gradients.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "radarformer/tensor.hpp"

namespace radar {

struct GradCheckOptions {
  double eps = 1e-5;
  // Coordinates probed per input; <= 0 probes every coordinate. Sampled
  // coordinates are drawn with `seed`.
  Index max_coords_per_input = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  Index coords_checked = 0;
  std::string worst;  // "input[i] coord j: analytic a numeric n"
};

// f must be scalar-valued, deterministic, and read `inputs` through shared
// storage. Inputs that do not require a gradient are skipped. The error per
// coordinate is |analytic - numeric| / max(1, |numeric|).
GradCheckResult finite_diff_check(const std::function<Tensor<double>()>& f, const std::vector<Tensor<double>>& inputs,
                                  const GradCheckOptions& options = {});

}  // namespace radar
