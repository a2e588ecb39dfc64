#include "radarformer/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "radarformer/error.hpp"

namespace radar {

LrSchedule parse_schedule(const std::string& text) {
  if (text == "step") return LrSchedule::step;
  if (text == "cosine") return LrSchedule::cosine;
  throw ConfigError("unknown learning-rate schedule '" + text + "' (expected step or cosine)");
}

std::string schedule_name(LrSchedule s) { return s == LrSchedule::step ? "step" : "cosine"; }

void RunConfig::validate() const {
  model.validate();
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(epochs >= 1, "train.epochs must be positive");
  require(batch >= 1, "train.batch must be positive");
  require(train_stride >= 1 && train_stride <= window(), "train.stride must lie in [1, window]");
  require(test_stride >= 0 && test_stride <= window(), "infer.stride must lie in [0, window]");
  require(lr_end > 0.0 && lr_start > lr_end, "learning rates need lr_start > lr_end > 0");
  require(lr_steps >= 1, "train.lr_steps must be positive");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
          "Adam betas must lie in [0, 1)");
  require(adam_eps > 0.0, "train.adam_eps must be positive");
  require(codec.peak_floor > 0.0 && codec.peak_floor < 1.0, "codec.peak_floor must lie in (0, 1)");
  require(codec.nms_threshold > 0.0 && codec.nms_threshold <= 1.0, "codec.nms_threshold must lie in (0, 1]");
  require(synth_sequences >= 1, "synth.sequences must be positive");
  require(synth_frames >= window(), "synth.frames must be at least the window length");
  require(synth_chirps == model.chirps, "synth.chirps must equal model.chirps");
  require(synth_height >= 0 && synth_width >= 0, "synth grid extents must be non-negative");
  require((synth_height == 0 || synth_height == model.height) && (synth_width == 0 || synth_width == model.width),
          "synth grid must equal the model grid");
}

KvConfig RunConfig::to_kv() const {
  KvConfig kv = model.to_kv();
  kv.set("run.seed", std::to_string(seed));
  kv.set("run.deterministic", std::string(deterministic ? "true" : "false"));
  kv.set("data.dir", data_dir);
  kv.set("run.out", out_dir);
  kv.set("train.epochs", std::int64_t{epochs});
  kv.set("train.batch", std::int64_t{batch});
  kv.set("train.stride", std::int64_t{train_stride});
  kv.set("train.lr_start", lr_start);
  kv.set("train.lr_end", lr_end);
  kv.set("train.schedule", schedule_name(schedule));
  kv.set("train.lr_steps", std::int64_t{lr_steps});
  kv.set("train.adam_beta1", adam_beta1);
  kv.set("train.adam_beta2", adam_beta2);
  kv.set("train.adam_eps", adam_eps);
  kv.set("infer.stride", std::int64_t{test_stride});
  kv.set("infer.heatmaps", std::string(heatmaps ? "true" : "false"));
  kv.set("infer.checkpoint", checkpoint);
  kv.set("codec.peak_floor", codec.peak_floor);
  kv.set("codec.nms_threshold", codec.nms_threshold);
  kv.set("synth.sequences", std::int64_t{synth_sequences});
  kv.set("synth.frames", std::int64_t{synth_frames});
  kv.set("synth.chirps", std::int64_t{synth_chirps});
  kv.set("synth.height", std::int64_t{synth_height});
  kv.set("synth.width", std::int64_t{synth_width});
  return kv;
}

RunConfig RunConfig::from_kv(const KvConfig& kv) {
  std::set<std::string> known{"run.seed",         "run.deterministic", "data.dir",          "run.out",
                              "train.epochs",     "train.batch",       "train.stride",      "train.lr_start",
                              "train.lr_end",     "train.schedule",    "train.lr_steps",    "train.adam_beta1",
                              "train.adam_beta2", "train.adam_eps",    "infer.stride",      "infer.heatmaps",
                              "infer.checkpoint", "codec.peak_floor",  "codec.nms_threshold", "synth.sequences",
                              "synth.frames",     "synth.chirps",      "synth.height",      "synth.width"};
  for (const auto& [key, value] : kv.values())
    if (key.starts_with("model.")) known.insert(key);
  kv.require_known(known);

  RunConfig c;
  KvConfig model_kv;
  bool any_model = false;
  for (const auto& [key, value] : kv.values()) {
    if (key.starts_with("model.")) {
      model_kv.set(key, value);
      any_model = true;
    }
  }
  if (any_model) {
    if (!model_kv.has("model.preset") && !model_kv.has("model.name")) model_kv.set("model.preset", c.model.name);
    c.model = ModelConfig::from_kv(model_kv);
  }
  const auto seed = kv.get_string("run.seed", "0");
  try {
    std::size_t used = 0;
    c.seed = std::stoull(seed, &used);
    if (used != seed.size() || seed.starts_with('-')) throw std::invalid_argument(seed);
  } catch (const std::exception&) {
    throw ConfigError("run.seed must be a non-negative integer, got '" + seed + "'");
  }
  c.deterministic = kv.get_bool("run.deterministic", c.deterministic);
  c.data_dir = kv.get_string("data.dir", c.data_dir);
  c.out_dir = kv.get_string("run.out", c.out_dir);
  c.epochs = kv.get_int("train.epochs", c.epochs);
  c.batch = kv.get_int("train.batch", c.batch);
  c.train_stride = kv.get_int("train.stride", c.train_stride);
  c.lr_start = kv.get_double("train.lr_start", c.lr_start);
  c.lr_end = kv.get_double("train.lr_end", c.lr_end);
  c.schedule = parse_schedule(kv.get_string("train.schedule", schedule_name(c.schedule)));
  c.lr_steps = kv.get_int("train.lr_steps", c.lr_steps);
  c.adam_beta1 = kv.get_double("train.adam_beta1", c.adam_beta1);
  c.adam_beta2 = kv.get_double("train.adam_beta2", c.adam_beta2);
  c.adam_eps = kv.get_double("train.adam_eps", c.adam_eps);
  c.test_stride = kv.get_int("infer.stride", c.test_stride);
  c.heatmaps = kv.get_bool("infer.heatmaps", c.heatmaps);
  c.checkpoint = kv.get_string("infer.checkpoint", c.checkpoint);
  c.codec.peak_floor = kv.get_double("codec.peak_floor", c.codec.peak_floor);
  c.codec.nms_threshold = kv.get_double("codec.nms_threshold", c.codec.nms_threshold);
  c.synth_sequences = kv.get_int("synth.sequences", c.synth_sequences);
  c.synth_frames = kv.get_int("synth.frames", c.synth_frames);
  c.synth_chirps = kv.get_int("synth.chirps", c.model.chirps);
  c.synth_height = kv.get_int("synth.height", c.synth_height);
  c.synth_width = kv.get_int("synth.width", c.synth_width);
  c.validate();
  return c;
}

double learning_rate(const RunConfig& cfg, Index step, Index total) {
  if (total <= 1) return cfg.lr_start;
  const double progress = double(std::clamp<Index>(step, 0, total - 1)) / double(total - 1);
  if (cfg.schedule == LrSchedule::cosine) {
    return cfg.lr_end + 0.5 * (cfg.lr_start - cfg.lr_end) * (1.0 + std::cos(std::numbers::pi * progress));
  }
  if (cfg.lr_steps == 1) return cfg.lr_start;
  const Index stage = std::min<Index>(cfg.lr_steps - 1, Index(progress * double(cfg.lr_steps)));
  return cfg.lr_start * std::pow(cfg.lr_end / cfg.lr_start, double(stage) / double(cfg.lr_steps - 1));
}

}  // namespace radar
