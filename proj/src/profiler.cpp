#include "radarformer/profiler.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "radarformer/error.hpp"

namespace radar {

ProfileSummary summarize(const std::string& model, const Shape& input, ProfileList layers) {
  ProfileSummary s{model, input, std::move(layers), 0, 0};
  for (const auto& l : s.layers) {
    s.params += l.params;
    s.macs += l.macs;
  }
  return s;
}

ProfileSummary select(const ProfileSummary& s, const std::string& prefix, const std::string& label) {
  ProfileList rows;
  for (const auto& l : s.layers)
    if (l.name.starts_with(prefix)) rows.push_back(l);
  return summarize(label, s.input, std::move(rows));
}

template <typename T>
ProfileSummary count_params(const Model<T>& model) {
  const Shape input = model.config().input_shape(1);
  return summarize(model.config().name, input, model.profile(input));
}

template <typename T>
ProfileSummary count_macs(const Model<T>& model, const Shape& input) {
  return summarize(model.config().name, input, model.profile(input));
}

double steady_clock_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

TimingResult time_runs(const std::function<void()>& fn, Index frames_per_pass, const TimingOptions& opts,
                       const Clock& clock) {
  if (opts.runs < 3) throw ConfigError("timing needs at least 3 runs, got " + std::to_string(opts.runs));
  if (opts.warmup < 0) throw ConfigError("warmup must be non-negative");
  if (frames_per_pass < 1) throw ConfigError("frames per pass must be positive");
  for (int i = 0; i < opts.warmup; ++i) fn();
  std::vector<double> ms;
  for (int i = 0; i < opts.runs; ++i) {
    const double t0 = clock();
    fn();
    ms.push_back(clock() - t0);
  }
  TimingResult r;
  r.runs = opts.runs;
  r.frames_per_pass = frames_per_pass;
  for (double v : ms) r.mean_ms += v;
  r.mean_ms /= double(ms.size());
  double var = 0.0;
  for (double v : ms) var += (v - r.mean_ms) * (v - r.mean_ms);
  r.std_ms = std::sqrt(var / double(ms.size()));
  r.per_frame_mean_ms = r.mean_ms / double(frames_per_pass);
  r.per_frame_std_ms = r.std_ms / double(frames_per_pass);
  return r;
}

namespace {

Index frames_per_pass(const Shape& input, const TimingOptions& opts) {
  const Index window = input.size() == 6 ? input[2] : 1;
  const Index stride = opts.stride > 0 ? opts.stride : window;
  if (stride > window) throw ConfigError("test stride " + std::to_string(stride) + " exceeds the window");
  return input[0] * stride;
}

}  // namespace

template <typename T>
TimingResult time_inference(const Model<T>& model, const Shape& input, const TimingOptions& opts,
                            const Clock& clock) {
  model.profile(input);
  const auto cube = Tensor<T>::uniform(input, 1, -1, 1);
  NoGradGuard<T> guard;
  return time_runs([&] { model.forward(cube); }, frames_per_pass(input, opts), opts, clock);
}

template <typename T>
TimingResult time_backprop(const Model<T>& model, const Shape& input, const TimingOptions& opts,
                           const Clock& clock) {
  model.profile(input);
  const auto cube = Tensor<T>::uniform(input, 1, -1, 1);
  const auto target = Tensor<T>::uniform(model.config().output_shape(input[0]), 2, 0, 1);
  const Context ctx{true};
  return time_runs(
      [&] {
        Tape<T> tape;
        tape.backward(bce_with_logits(model.forward_logits(cube, ctx), target));
      },
      frames_per_pass(input, opts), opts, clock);
}

const CompareRow& CompareReport::row(const std::string& model) const {
  for (const auto& r : rows)
    if (r.model == model) return r;
  throw ConfigError("report has no row '" + model + "'");
}

CompareReport compare_report(const std::vector<std::string>& presets, Index batch,
                             const std::optional<TimingOptions>& timing, const Clock& clock) {
  CompareReport report;
  report.batch = batch;
  report.stride = timing ? timing->stride : 0;
  std::optional<CompareRow> mnet;
  for (const auto& name : presets) {
    Model<float> model(preset(name));
    const Shape input = model.config().input_shape(batch);
    const auto s = count_macs(model, input);
    CompareRow row{name, s.params, s.macs, std::nullopt, std::nullopt};
    if (timing) {
      row.bp = time_backprop(model, input, *timing, clock);
      row.infer = time_inference(model, input, *timing, clock);
      model.params().zero_grad();
    }
    if (!mnet && model.config().variant == Variant::radarformer) {
      const auto m = select(s, "mnet.", "M-Net");
      mnet = CompareRow{"M-Net", m.params, m.macs, std::nullopt, std::nullopt};
    }
    report.rows.push_back(std::move(row));
  }
  if (mnet) report.rows.push_back(*mnet);
  return report;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string timing_cell(const std::optional<TimingResult>& t) {
  return t ? fixed(t->per_frame_mean_ms, 2) + " +- " + fixed(t->per_frame_std_ms, 2) : "-";
}

}  // namespace

std::string report_text(const CompareReport& r) {
  std::ostringstream out;
  out << "batch " << r.batch << ", test stride " << (r.stride > 0 ? std::to_string(r.stride) : "window")
      << ", threads " << r.threads << "; times are ms per output frame (pass time / (batch * stride))\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %12s %12s %20s %20s\n", "Model", "GMACs", "Params (m)", "BP time (ms)",
                "Infer time (ms)");
  out << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-20s %12.3f %12.3f %20s %20s\n", row.model.c_str(), double(row.macs) / 1e9,
                  double(row.params) / 1e6, timing_cell(row.bp).c_str(), timing_cell(row.infer).c_str());
    out << line;
  }
  return out.str();
}

KvConfig report_kv(const CompareReport& r) {
  KvConfig kv;
  kv.set("report.batch", std::int64_t{r.batch});
  kv.set("report.stride", std::int64_t{r.stride});
  kv.set("report.threads", std::int64_t{r.threads});
  for (const auto& row : r.rows) {
    const std::string p = row.model + ".";
    kv.set(p + "params", std::int64_t{row.params});
    kv.set(p + "macs", std::int64_t{row.macs});
    if (row.bp) {
      kv.set(p + "bp_ms", row.bp->per_frame_mean_ms);
      kv.set(p + "bp_std_ms", row.bp->per_frame_std_ms);
    }
    if (row.infer) {
      kv.set(p + "infer_ms", row.infer->per_frame_mean_ms);
      kv.set(p + "infer_std_ms", row.infer->per_frame_std_ms);
    }
  }
  return kv;
}

std::string layers_text(const ProfileSummary& s) {
  std::ostringstream out;
  out << s.model << " at input " << to_string(s.input) << "\n";
  char line[256];
  for (const auto& l : s.layers) {
    std::snprintf(line, sizeof line, "  %-48s %12lld %16lld\n", l.name.c_str(), static_cast<long long>(l.params),
                  static_cast<long long>(l.macs));
    out << line;
  }
  std::snprintf(line, sizeof line, "  %-48s %12lld %16lld\n", "total", static_cast<long long>(s.params),
                static_cast<long long>(s.macs));
  out << line;
  return out.str();
}

template ProfileSummary count_params(const Model<float>&);
template ProfileSummary count_params(const Model<double>&);
template ProfileSummary count_macs(const Model<float>&, const Shape&);
template ProfileSummary count_macs(const Model<double>&, const Shape&);
template TimingResult time_inference(const Model<float>&, const Shape&, const TimingOptions&, const Clock&);
template TimingResult time_inference(const Model<double>&, const Shape&, const TimingOptions&, const Clock&);
template TimingResult time_backprop(const Model<float>&, const Shape&, const TimingOptions&, const Clock&);
template TimingResult time_backprop(const Model<double>&, const Shape&, const TimingOptions&, const Clock&);

}  // namespace radar
