#include "radarformer/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "radarformer/rng.hpp"

namespace radar {

GradCheckResult finite_diff_check(const std::function<Tensor<double>()>& f, const std::vector<Tensor<double>>& inputs,
                                  const GradCheckOptions& options) {
  std::vector<Tensor<double>> probed;
  for (const auto& t : inputs) {
    if (t.requires_grad()) probed.push_back(t);
  }
  for (auto& t : probed) t.zero_grad();

  std::vector<std::vector<double>> analytic;
  {
    Tape<double> tape;
    const Tensor<double> loss = f();
    if (loss.numel() != 1) throw UsageError("finite_diff_check needs a scalar-valued function");
    tape.backward(loss);
    for (const auto& t : probed) {
      analytic.emplace_back(t.has_grad() ? std::vector<double>(t.grad().begin(), t.grad().end())
                                         : std::vector<double>(static_cast<std::size_t>(t.numel()), 0.0));
    }
  }

  GradCheckResult result;
  NoGradGuard<double> no_grad;
  Rng rng(options.seed);
  for (std::size_t k = 0; k < probed.size(); ++k) {
    auto& t = probed[k];
    std::vector<Index> coords(static_cast<std::size_t>(t.numel()));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (options.max_coords_per_input > 0 && t.numel() > options.max_coords_per_input) {
      for (Index i = 0; i < options.max_coords_per_input; ++i) {
        const auto j = rng.uniform_int(i, t.numel() - 1);
        std::swap(coords[static_cast<std::size_t>(i)], coords[static_cast<std::size_t>(j)]);
      }
      coords.resize(static_cast<std::size_t>(options.max_coords_per_input));
    }
    auto data = t.mutable_data();
    for (Index c : coords) {
      const double saved = data[static_cast<std::size_t>(c)];
      data[static_cast<std::size_t>(c)] = saved + options.eps;
      const double fp = f().item();
      data[static_cast<std::size_t>(c)] = saved - options.eps;
      const double fm = f().item();
      data[static_cast<std::size_t>(c)] = saved;
      const double numeric = (fp - fm) / (2.0 * options.eps);
      const double a = analytic[k][static_cast<std::size_t>(c)];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
      ++result.coords_checked;
      if (err > result.max_rel_error || !std::isfinite(err)) {
        result.max_rel_error = std::isfinite(err) ? err : INFINITY;
        std::ostringstream w;
        w << "input[" << k << "] coord " << c << ": analytic " << a << " numeric " << numeric;
        result.worst = w.str();
      }
    }
  }
  return result;
}

}  // namespace radar
