#pragma once
// Run configuration shared by the command-line subcommands. Files use the
// flat key = value format; command-line flags override file values and the
// merged result is written next to every output as effective_config.txt.
//
//   run.seed, run.deterministic, data.dir, run.out
//   train.epochs, train.batch, train.stride, train.lr_start, train.lr_end,
//   train.schedule (step | cosine), train.lr_steps, train.adam_beta1,
//   train.adam_beta2, train.adam_eps
//   infer.stride, infer.heatmaps, infer.checkpoint
//   codec.peak_floor, codec.nms_threshold
//   synth.sequences, synth.frames, synth.chirps, synth.height, synth.width
//   model.* (see model_config.hpp)

#include <cstdint>
#include <string>

#include "radarformer/confmap.hpp"
#include "radarformer/kv_config.hpp"
#include "radarformer/model_config.hpp"

namespace radar {

enum class LrSchedule { step, cosine };
LrSchedule parse_schedule(const std::string& text);
std::string schedule_name(LrSchedule s);

struct RunConfig {
  ModelConfig model = preset("radarformer-tiny");
  std::uint64_t seed = 0;
  // Forces 64-bit arithmetic for training and inference.
  bool deterministic = false;
  std::string data_dir = "data";
  std::string out_dir = "out";

  Index epochs = 20;
  Index batch = 1;
  Index train_stride = 8;
  double lr_start = 1e-4, lr_end = 1e-6;
  LrSchedule schedule = LrSchedule::step;
  Index lr_steps = 4;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;

  // 0 means the window length.
  Index test_stride = 0;
  bool heatmaps = false;
  std::string checkpoint;

  CodecParams codec;

  Index synth_sequences = 20;
  Index synth_frames = 128;
  Index synth_chirps = 4;
  // 0 takes the model grid.
  Index synth_height = 0, synth_width = 0;

  Index window() const { return model.frames; }
  Index effective_test_stride() const { return test_stride > 0 ? test_stride : model.frames; }

  // Throws ConfigError on invalid combinations.
  void validate() const;
  KvConfig to_kv() const;
  // Unknown keys are rejected.
  static RunConfig from_kv(const KvConfig& kv);
};

// Learning rate for 0-based optimizer step `step` of `total`. Step decay is
// geometric over lr_steps equal stages ending at lr_end; cosine anneals per
// step from lr_start to lr_end.
double learning_rate(const RunConfig& cfg, Index step, Index total);

}  // namespace radar
