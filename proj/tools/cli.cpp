#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <optional>

#include "radarformer/checkpoint.hpp"
#include "radarformer/dataset.hpp"
#include "radarformer/error.hpp"
#include "radarformer/evaluation.hpp"
#include "radarformer/inference.hpp"
#include "radarformer/profiler.hpp"
#include "radarformer/run_config.hpp"
#include "radarformer/training.hpp"

namespace radar::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::string> seed, data_dir, out;
  bool deterministic = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value config file");
  app->add_option("--seed", c.seed, "run seed");
  app->add_option("--data-dir", c.data_dir, "dataset directory");
  app->add_option("--out", c.out, "output directory");
  app->add_flag("--deterministic", c.deterministic, "64-bit single-thread execution");
}

// File values, then flags. `overrides` holds subcommand-specific flags.
KvConfig merged(const Common& c, const KvConfig& overrides, bool& model_given) {
  KvConfig kv;
  if (!c.config.empty()) {
    if (!fs::exists(c.config)) throw ConfigError(c.config + ": config file not found");
    kv = KvConfig::load(c.config);
  }
  if (overrides.has("model.preset")) {
    KvConfig rest;
    for (const auto& [k, v] : kv.values())
      if (!k.starts_with("model.")) rest.set(k, v);
    kv = rest;
  }
  kv.merge(overrides);
  if (c.seed) kv.set("run.seed", *c.seed);
  if (c.data_dir) kv.set("data.dir", *c.data_dir);
  if (c.out) kv.set("run.out", *c.out);
  if (c.deterministic) kv.set("run.deterministic", std::string("true"));
  model_given = false;
  for (const auto& [k, v] : kv.values()) model_given |= k.starts_with("model.");
  return kv;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(dir + ": cannot create directory: " + ec.message());
}

std::string path_in(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

std::vector<Sequence> pick(const std::vector<Sequence>& data, const std::string& which) {
  if (which == "all") return data;
  if (which != "train" && which != "val") throw ConfigError("--split must be all, train or val");
  return split(data, which);
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  SynthConfig sc;
  sc.frames = cfg.synth_frames;
  sc.chirps = cfg.synth_chirps;
  sc.height = cfg.synth_height > 0 ? cfg.synth_height : cfg.model.height;
  sc.width = cfg.synth_width > 0 ? cfg.synth_width : cfg.model.width;
  const auto m = write_dataset(cfg.data_dir, synthesize_dataset(cfg.seed, cfg.synth_sequences, sc));
  // Paths are left out so equal seeds give byte-identical directories.
  KvConfig kv;
  const auto full = cfg.to_kv();
  for (const auto& [k, v] : full.values())
    if (k != "data.dir" && k != "run.out") kv.set(k, v);
  kv.save(path_in(cfg.data_dir, "effective_config.txt"));
  out << "wrote " << m.sequences.size() << " sequences (" << m.total_frames << " frames) to " << cfg.data_dir << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const auto data = read_dataset(cfg.data_dir);
  const auto r = train(cfg, data, [&](const EpochLog& e) {
    char line[160];
    std::snprintf(line, sizeof line, "epoch %lld loss %.6f lr %.3g val AP %.4f AR %.4f%s (%.1f s)\n",
                  static_cast<long long>(e.epoch), e.loss, e.lr, e.val_ap, e.val_ar, e.best ? " best" : "", e.seconds);
    out << line << std::flush;
  });
  out << "best epoch " << r.best_epoch << ", checkpoint " << path_in(cfg.out_dir, "best.ckpt") << "\n";
  return 0;
}

template <typename T>
void infer_all(const Checkpoint& ck, const RunConfig& cfg, const std::vector<Sequence>& seqs, std::ostream& out) {
  Model<T> model(ck.model);
  apply_checkpoint(ck, model);
  for (const auto& seq : seqs) {
    if (seq.cube.dim(2) != ck.model.chirps || seq.cube.dim(3) != ck.model.height ||
        seq.cube.dim(4) != ck.model.width) {
      throw ConfigError("sequence '" + seq.name + "' does not fit the checkpoint model grid");
    }
    const auto maps = infer_sequence(model, seq, cfg.effective_test_stride());
    const auto dets = decode_sequence(maps, cfg.codec);
    write_detections(path_in(cfg.out_dir, seq.name + ".det"), dets);
    if (cfg.heatmaps) export_heatmaps(path_in(cfg.out_dir, "heatmaps"), seq.name, maps);
    out << seq.name << ": " << dets.size() << " detections\n";
  }
}

int cmd_infer(const RunConfig& cfg, bool model_given, const std::string& which, std::ostream& out) {
  if (cfg.checkpoint.empty()) throw ConfigError("infer needs --checkpoint (or infer.checkpoint)");
  const auto ck = load_checkpoint(cfg.checkpoint);
  if (model_given && !(cfg.model == ck.model)) {
    throw ConfigError(cfg.checkpoint + ": checkpoint model '" + ck.model.name +
                      "' does not match the configured model '" + cfg.model.name + "'");
  }
  const auto seqs = pick(read_dataset(cfg.data_dir), which);
  ensure_dir(cfg.out_dir);
  auto eff = cfg;
  eff.model = ck.model;
  eff.to_kv().save(path_in(cfg.out_dir, "effective_config.txt"));
  if (cfg.deterministic || ck.f64) {
    infer_all<double>(ck, cfg, seqs, out);
  } else {
    infer_all<float>(ck, cfg, seqs, out);
  }
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& detections, const std::string& which, std::ostream& out) {
  const auto manifest = read_manifest(cfg.data_dir);
  const std::string det_dir = detections.empty() ? cfg.out_dir : detections;
  std::vector<EvalFrame> frames;
  for (const auto& info : manifest.sequences) {
    if (which != "all" && info.split != which) continue;
    const auto seq = read_sequence(cfg.data_dir, info, manifest);
    const auto det_path = path_in(det_dir, info.name + ".det");
    if (!fs::exists(det_path)) throw DataError(det_path + ": detections file not found");
    const auto f = align_frames(seq.name, seq.scenario, seq.frames(), seq.annotations, read_detections(det_path));
    frames.insert(frames.end(), f.begin(), f.end());
  }
  if (frames.empty()) throw DataError(cfg.data_dir + ": no sequences in split '" + which + "'");
  const auto r = evaluate(frames, cfg.codec);
  out << results_table(r);
  ensure_dir(cfg.out_dir);
  results_kv(r).save(path_in(cfg.out_dir, "metrics.txt"));
  return 0;
}

struct ProfileArgs {
  std::vector<std::string> models;
  Index batch = 1;
  bool timing = false, layers = false;
  int runs = 3, warmup = 1;
};

int cmd_profile(const RunConfig& cfg, const ProfileArgs& a, bool out_given, std::ostream& out) {
  const auto models = a.models.empty()
                          ? std::vector<std::string>{"radarformer-ref", "cnn2d-ref", "transformer2d-ref",
                                                     "hourglass3d-ref"}
                          : a.models;
  if (a.batch < 1) throw ConfigError("--batch must be positive");
  std::optional<TimingOptions> timing;
  if (a.timing) timing = TimingOptions{a.warmup, a.runs, cfg.test_stride};
  const auto report = compare_report(models, a.batch, timing);
  out << report_text(report);
  const auto kv = report_kv(report);
  out << kv.to_text();
  if (a.layers) {
    for (const auto& name : models) {
      Model<float> model(preset(name));
      out << layers_text(count_macs(model, model.config().input_shape(a.batch)));
    }
  }
  if (out_given) {
    ensure_dir(cfg.out_dir);
    kv.save(path_in(cfg.out_dir, "profile.txt"));
    cfg.to_kv().save(path_in(cfg.out_dir, "effective_config.txt"));
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"RadarFormer radar object detection toolkit"};
  app.require_subcommand(1, 1);
  Common common;

  auto* synth = app.add_subcommand("synth", "write a seeded synthetic dataset to --data-dir (or --out)");
  add_common(synth, common);
  std::optional<Index> sequences, frames;
  synth->add_option("--sequences", sequences, "number of sequences");
  synth->add_option("--frames", frames, "frames per sequence");

  auto* train_cmd = app.add_subcommand("train", "train a model on --data-dir, writing to --out");
  add_common(train_cmd, common);
  std::optional<Index> epochs;
  std::optional<std::string> model_name;
  train_cmd->add_option("--epochs", epochs, "training epochs");
  train_cmd->add_option("--model", model_name, "model preset");

  auto* infer = app.add_subcommand("infer", "write detections (and heatmaps) for --data-dir to --out");
  add_common(infer, common);
  std::optional<std::string> checkpoint;
  std::optional<Index> stride;
  bool heatmaps = false;
  std::string which = "all";
  infer->add_option("--checkpoint", checkpoint, "checkpoint file");
  infer->add_option("--stride", stride, "test stride in frames");
  infer->add_flag("--heatmaps", heatmaps, "export PGM/PPM heatmaps");
  infer->add_option("--split", which, "all, train or val");

  auto* eval = app.add_subcommand("eval", "score detection files against --data-dir annotations");
  add_common(eval, common);
  std::string detections;
  eval->add_option("--detections", detections, "directory of <sequence>.det files (default --out)");
  eval->add_option("--split", which, "all, train or val");

  auto* profile = app.add_subcommand("profile", "parameter, MAC and timing report");
  add_common(profile, common);
  ProfileArgs pa;
  profile->add_option("--model", pa.models, "model presets (repeatable)");
  profile->add_option("--batch", pa.batch, "batch size");
  profile->add_flag("--timing", pa.timing, "measure BP and inference time");
  profile->add_option("--runs", pa.runs, "timed runs");
  profile->add_option("--warmup", pa.warmup, "untimed warmup runs");
  profile->add_option("--stride", stride, "test stride for time normalization");
  profile->add_flag("--layers", pa.layers, "print per-layer rows");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: config: " << e.what() << "\n";
    return 2;
  }

  try {
    KvConfig overrides;
    if (sequences) overrides.set("synth.sequences", std::int64_t{*sequences});
    if (frames) overrides.set("synth.frames", std::int64_t{*frames});
    if (epochs) overrides.set("train.epochs", std::int64_t{*epochs});
    if (model_name) overrides.set("model.preset", *model_name);
    if (checkpoint) overrides.set("infer.checkpoint", *checkpoint);
    if (stride) overrides.set("infer.stride", std::int64_t{*stride});
    if (heatmaps) overrides.set("infer.heatmaps", std::string("true"));
    if (synth->parsed() && common.out && !common.data_dir) common.data_dir = common.out;
    bool model_given = false;
    const auto cfg = RunConfig::from_kv(merged(common, overrides, model_given));
    if (synth->parsed()) return cmd_synth(cfg, out);
    if (train_cmd->parsed()) return cmd_train(cfg, out);
    if (infer->parsed()) return cmd_infer(cfg, model_given, which, out);
    if (eval->parsed()) return cmd_eval(cfg, detections, which, out);
    return cmd_profile(cfg, pa, common.out.has_value(), out);
  } catch (const Error& e) {
    err << "error: " << category_name(e.category()) << ": " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "error: runtime: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace radar::cli
