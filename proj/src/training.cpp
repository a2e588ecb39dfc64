#include "radarformer/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "radarformer/error.hpp"
#include "radarformer/inference.hpp"
#include "radarformer/rng.hpp"

namespace radar {

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(std::size_t(p.numel()), 0.0);
    v_.emplace_back(std::size_t(p.numel()), 0.0);
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, double(t_)), c2 = 1.0 - std::pow(beta2_, double(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto w = p.mutable_data();
    auto &m = m_[i], &v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = double(g[j]);
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * gj;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
      w[j] = static_cast<T>(double(w[j]) - lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_));
    }
  }
}

std::vector<Sequence> split(const std::vector<Sequence>& data, const std::string& which) {
  std::vector<Sequence> out;
  for (const auto& s : data)
    if (s.split == which) out.push_back(s);
  return out;
}

template <typename T>
std::vector<EvalFrame> predict_frames(const Model<T>& model, const std::vector<Sequence>& sequences, Index stride,
                                      const CodecParams& p) {
  std::vector<EvalFrame> frames;
  for (const auto& seq : sequences) {
    const auto dets = decode_sequence(infer_sequence(model, seq, stride), p);
    const auto f = align_frames(seq.name, seq.scenario, seq.frames(), seq.annotations, dets);
    frames.insert(frames.end(), f.begin(), f.end());
  }
  return frames;
}

namespace {

struct Sample {
  std::size_t seq;
  Index start;
};

template <typename T>
Tensor<T> stack(const std::vector<Tensor<T>>& parts) {
  Shape shape = parts.front().shape();
  shape[0] = Index(parts.size());
  std::vector<T> data;
  data.reserve(std::size_t(numel(shape)));
  for (const auto& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
  return Tensor<T>(shape, std::move(data));
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

template <typename T>
TrainResult train_impl(const RunConfig& cfg, const std::vector<Sequence>& data,
                       const std::function<void(const EpochLog&)>& on_epoch) {
  const auto train_set = split(data, "train"), val_set = split(data, "val");
  if (train_set.empty()) throw DataError("dataset has no training sequences");
  if (val_set.empty()) throw DataError("dataset has no validation sequences");
  const Index window = cfg.window();
  for (const auto& s : data) {
    if (s.cube.dim(2) != cfg.model.chirps || s.cube.dim(3) != cfg.model.height || s.cube.dim(4) != cfg.model.width) {
      throw ConfigError("sequence '" + s.name + "' cube " + to_string(s.cube.shape()) + " does not fit model '" +
                        cfg.model.name + "'");
    }
  }

  auto model_cfg = cfg.model;
  model_cfg.init_seed = cfg.seed;
  Model<T> model(model_cfg);
  Adam<T> adam(model.params().trainable(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

  std::vector<Sample> samples;
  std::vector<Tensor<T>> targets;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    for (Index start : window_starts(train_set[i].frames(), window, cfg.train_stride, false)) {
      samples.push_back({i, start});
      targets.push_back(window_targets<T>(train_set[i], start, window, cfg.codec));
    }
  }
  const Index steps_per_epoch = (Index(samples.size()) + cfg.batch - 1) / cfg.batch;
  const Index total_steps = steps_per_epoch * cfg.epochs;

  auto run_cfg = cfg;
  run_cfg.model = model_cfg;
  const KvConfig effective = run_cfg.to_kv();
  KvConfig meta;
  for (const auto& [k, v] : effective.values())
    if (!k.starts_with("model.")) meta.set(k, v);

  std::ofstream log;
  if (!cfg.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw DataError(cfg.out_dir + ": cannot create directory: " + ec.message());
    effective.save((std::filesystem::path(cfg.out_dir) / "effective_config.txt").string());
    const auto log_path = (std::filesystem::path(cfg.out_dir) / "train_log.txt").string();
    log.open(log_path, std::ios::trunc);
    if (!log) throw DataError(log_path + ": cannot open for writing");
    log << "# epoch loss lr val_ap val_ar best seconds\n";
  }

  TrainResult result;
  std::vector<std::size_t> order(samples.size());
  const Context ctx{true};
  Index step = 0;
  for (Index epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(cfg.seed, std::uint64_t(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[std::size_t(rng.uniform_int(0, Index(i) - 1))]);

    EpochLog e;
    e.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += std::size_t(cfg.batch)) {
      std::vector<Tensor<T>> xs, ys;
      for (std::size_t j = b; j < std::min(order.size(), b + std::size_t(cfg.batch)); ++j) {
        const auto& s = samples[order[j]];
        xs.push_back(window_cube<T>(train_set[s.seq], s.start, window));
        ys.push_back(targets[order[j]]);
      }
      model.params().zero_grad();
      Tape<T> tape;
      const auto loss = bce_with_logits(model.forward_logits(stack(xs), ctx), stack(ys));
      tape.backward(loss);
      e.lr = learning_rate(cfg, step++, total_steps);
      adam.step(e.lr);
      loss_sum += double(loss.data()[0]);
    }
    model.params().zero_grad();
    e.loss = loss_sum / double(steps_per_epoch);

    const auto eval = evaluate(predict_frames(model, val_set, cfg.effective_test_stride(), cfg.codec), cfg.codec);
    e.val_ap = eval.ap;
    e.val_ar = eval.ar;
    if (e.val_ap > result.best_ap) {
      e.best = true;
      result.best_ap = e.val_ap;
      result.best_epoch = epoch;
      KvConfig m = meta;
      m.set("train.best_epoch", std::int64_t{epoch});
      m.set("train.best_val_ap", e.val_ap);
      result.best = make_checkpoint(model, m, cfg.deterministic);
      if (!cfg.out_dir.empty()) save_checkpoint((std::filesystem::path(cfg.out_dir) / "best.ckpt").string(), result.best);
    }
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (log) {
      log << epoch << " " << fmt("%.9g", e.loss) << " " << fmt("%.6g", e.lr) << " " << fmt("%.6f", e.val_ap) << " "
          << fmt("%.6f", e.val_ar) << " " << (e.best ? 1 : 0) << " " << fmt("%.1f", e.seconds) << "\n";
      log.flush();
    }
    result.epochs.push_back(e);
    if (on_epoch) on_epoch(e);
  }
  return result;
}

template <typename T>
EvalResult validate_impl(const Checkpoint& ck, const std::vector<Sequence>& data, Index stride, const CodecParams& p) {
  Model<T> model(ck.model);
  apply_checkpoint(ck, model);
  const auto val = split(data, "val");
  if (val.empty()) throw DataError("dataset has no validation sequences");
  return evaluate(predict_frames(model, val, stride, p), p);
}

}  // namespace

TrainResult train(const RunConfig& cfg, const std::vector<Sequence>& data,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  return cfg.deterministic ? train_impl<double>(cfg, data, on_epoch) : train_impl<float>(cfg, data, on_epoch);
}

EvalResult validate_checkpoint(const Checkpoint& ck, const std::vector<Sequence>& data, Index stride,
                               const CodecParams& p) {
  return ck.f64 ? validate_impl<double>(ck, data, stride, p) : validate_impl<float>(ck, data, stride, p);
}

template class Adam<float>;
template class Adam<double>;
template std::vector<EvalFrame> predict_frames(const Model<float>&, const std::vector<Sequence>&, Index,
                                               const CodecParams&);
template std::vector<EvalFrame> predict_frames(const Model<double>&, const std::vector<Sequence>&, Index,
                                               const CodecParams&);

}  // namespace radar
