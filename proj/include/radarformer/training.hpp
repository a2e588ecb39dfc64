#pragma once
// Training loop: strided T-frame windows of the training split, per-pixel
// BCE between predicted logits and encoded ConfMaps, Adam updates with the
// configured schedule, validation AP/AR after every epoch and a best-AP
// checkpoint.

#include <functional>
#include <string>
#include <vector>

#include "radarformer/checkpoint.hpp"
#include "radarformer/dataset.hpp"
#include "radarformer/evaluation.hpp"
#include "radarformer/model.hpp"
#include "radarformer/run_config.hpp"

namespace radar {

template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, double beta1, double beta2, double eps);
  // Applies one update from the accumulated gradients; parameters without a
  // gradient are skipped.
  void step(double lr);
  Index steps() const { return t_; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_;
  Index t_ = 0;
};

struct EpochLog {
  Index epoch = 0;
  double loss = 0.0;
  double lr = 0.0;  // at the last step of the epoch
  double val_ap = 0.0, val_ar = 0.0;
  bool best = false;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  Index best_epoch = 0;
  double best_ap = -1.0;
  Checkpoint best;
};

// Validation frames of `sequences` decoded from the model's fused ConfMaps.
template <typename T>
std::vector<EvalFrame> predict_frames(const Model<T>& model, const std::vector<Sequence>& sequences, Index stride,
                                      const CodecParams& p);

// Trains cfg.model with init seed cfg.seed. Uses 64-bit arithmetic when
// cfg.deterministic is set. When cfg.out_dir is non-empty the effective
// config, the per-epoch log and best.ckpt are written there.
TrainResult train(const RunConfig& cfg, const std::vector<Sequence>& data,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// Evaluates a checkpoint on the validation split.
EvalResult validate_checkpoint(const Checkpoint& ck, const std::vector<Sequence>& data, Index stride,
                               const CodecParams& p);

std::vector<Sequence> split(const std::vector<Sequence>& data, const std::string& which);

}  // namespace radar
