#pragma once
// Parameter and MAC accounting, wall-clock timing and the model comparison
// report.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "radarformer/kv_config.hpp"
#include "radarformer/model.hpp"

namespace radar {

struct ProfileSummary {
  std::string model;
  Shape input;
  ProfileList layers;
  std::int64_t params = 0;
  std::int64_t macs = 0;
};

// Sums rows into params/macs totals.
ProfileSummary summarize(const std::string& model, const Shape& input, ProfileList layers);
// Rows whose name starts with `prefix`.
ProfileSummary select(const ProfileSummary& s, const std::string& prefix, const std::string& label);

// Parameters at the model's reference input with batch 1.
template <typename T>
ProfileSummary count_params(const Model<T>& model);
// Throws ShapeError when `input` does not fit the model.
template <typename T>
ProfileSummary count_macs(const Model<T>& model, const Shape& input);

// Milliseconds from an arbitrary epoch.
using Clock = std::function<double()>;
double steady_clock_ms();

struct TimingOptions {
  int warmup = 1;
  int runs = 3;
  // Frames produced per window by sliding inference; 0 means the full window
  // (non-overlapping test stride).
  Index stride = 0;
};

struct TimingResult {
  double mean_ms = 0.0, std_ms = 0.0;
  // Divided by frames per pass = batch * stride.
  double per_frame_mean_ms = 0.0, per_frame_std_ms = 0.0;
  Index frames_per_pass = 1;
  int runs = 0;
  int threads = 1;
};

// Times `fn` over opts.runs calls after opts.warmup untimed calls. Throws
// ConfigError when runs < 3.
TimingResult time_runs(const std::function<void()>& fn, Index frames_per_pass, const TimingOptions& opts,
                       const Clock& clock = steady_clock_ms);

template <typename T>
TimingResult time_inference(const Model<T>& model, const Shape& input, const TimingOptions& opts,
                            const Clock& clock = steady_clock_ms);
// Forward in training mode, BCE loss and backward pass.
template <typename T>
TimingResult time_backprop(const Model<T>& model, const Shape& input, const TimingOptions& opts,
                           const Clock& clock = steady_clock_ms);

struct CompareRow {
  std::string model;
  std::int64_t params = 0, macs = 0;
  std::optional<TimingResult> bp, infer;
};

struct CompareReport {
  Index batch = 1;
  Index stride = 0;
  int threads = 1;
  std::vector<CompareRow> rows;

  const CompareRow& row(const std::string& model) const;
};

// One row per preset plus an "M-Net" row taken from the first radarformer
// preset's merging layers. Timing is skipped when `timing` is empty.
CompareReport compare_report(const std::vector<std::string>& presets, Index batch,
                             const std::optional<TimingOptions>& timing, const Clock& clock = steady_clock_ms);

std::string report_text(const CompareReport& r);
KvConfig report_kv(const CompareReport& r);
std::string layers_text(const ProfileSummary& s);

}  // namespace radar
