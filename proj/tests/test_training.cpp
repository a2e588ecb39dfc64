#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "radarformer/error.hpp"
#include "radarformer/inference.hpp"
#include "radarformer/training.hpp"

using namespace radar;
namespace fs = std::filesystem;

namespace {

RunConfig toy_run() {
  RunConfig c;
  auto m = preset("radarformer-tiny");
  m.frames = 4;
  m.height = 16;
  m.width = 16;
  c.model = m;
  c.epochs = 2;
  c.train_stride = 2;
  c.lr_start = 3e-3;
  c.lr_end = 3e-5;
  c.synth_sequences = 5;
  c.synth_frames = 12;
  c.out_dir = "";
  return c;
}

std::vector<Sequence> toy_data(std::uint64_t seed, Index count = 5, Index frames = 12) {
  SynthConfig sc;
  sc.frames = frames;
  sc.height = 16;
  sc.width = 16;
  return synthesize_dataset(seed, count, sc);
}

// Well-separated moving targets on a 48 x 48 grid.
Sequence separated_sequence(Index frames) {
  Sequence s;
  s.name = "sep";
  s.scenario = "CR";
  s.split = "val";
  s.cube = Tensor<float>::zeros({2, frames, 4, 48, 48});
  for (Index f = 0; f < frames; ++f) {
    s.annotations.push_back({f, 0, 6 + f / 2, 8});
    s.annotations.push_back({f, 2, 30, 10 + f});
    s.annotations.push_back({f, 1, 40 - f / 3, 40});
    s.annotations.push_back({f, 0, 20, 38 - f / 2});
  }
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("window starts cover the sequence") {
  auto s = window_starts(128, 32, 8);
  CHECK(s.size() == 13);
  CHECK(s.back() == 96);
  CHECK(window_starts(40, 32, 32) == std::vector<Index>{0, 8});
  CHECK(window_starts(40, 32, 32, false) == std::vector<Index>{0});
  CHECK(window_starts(32, 32, 32) == std::vector<Index>{0});
  CHECK_THROWS_AS(window_starts(31, 32, 8), ConfigError);
  CHECK_THROWS_AS(window_starts(64, 32, 33), ConfigError);
  CHECK_THROWS_AS(window_starts(64, 32, 0), ConfigError);
}

TEST_CASE("overlapping windows are fused by their per-pixel mean") {
  const Index frames = 11, window = 4, stride = 3;
  auto predict = [&](Index start) {
    std::vector<double> v(std::size_t(2 * window * 2 * 3));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = double(start) + 0.01 * double(i);
    return Tensor<double>({1, 2, window, 2, 3}, v);
  };
  const auto fused = fuse_windows<double>(frames, window, stride, predict);
  REQUIRE(fused.shape() == Shape{2, frames, 2, 3});
  const auto starts = window_starts(frames, window, stride);
  for (Index k = 0; k < 2; ++k)
    for (Index f = 0; f < frames; ++f)
      for (Index i = 0; i < 6; ++i) {
        double sum = 0.0;
        int n = 0;
        for (Index s : starts)
          if (f >= s && f < s + window) {
            sum += double(s) + 0.01 * double((k * window + f - s) * 6 + i);
            ++n;
          }
        CHECK(std::abs(fused.data()[std::size_t((k * frames + f) * 6 + i)] - sum / n) < 1e-12);
      }
  CHECK_THROWS_AS(fuse_windows<double>(frames, window, stride,
                                       [](Index) { return Tensor<double>::zeros({1, 2, 3, 2, 3}); }),
                  ShapeError);
}

TEST_CASE("an oracle predictor reproduces the annotations exactly") {
  const auto seq = separated_sequence(20);
  const CodecParams p;
  for (Index stride : {8, 5, 2}) {
    const auto maps = fuse_windows<double>(20, 8, stride, [&](Index start) {
      return window_targets<double>(seq, start, 8, p);
    });
    const auto dets = decode_sequence(maps, p);
    std::vector<Annotation> got;
    for (const auto& d : dets) {
      got.push_back({d.frame, d.cls, d.range, d.azimuth});
      CHECK(d.confidence == 1.0);
    }
    auto want = seq.annotations;
    auto key = [](const Annotation& a) { return std::tuple(a.frame, a.cls, a.range, a.azimuth); };
    std::sort(got.begin(), got.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
    std::sort(want.begin(), want.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
    CHECK(got == want);
  }
}

TEST_CASE("detections are ordered by frame then descending confidence") {
  const auto seq = separated_sequence(6);
  auto maps = fuse_windows<double>(6, 2, 2, [&](Index start) { return window_targets<double>(seq, start, 2, {}); });
  auto v = maps.mutable_data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= 0.5 + 0.5 * std::sin(double(i) * 0.37) * std::sin(double(i) * 0.37);
  const auto dets = decode_sequence(maps, {});
  REQUIRE(dets.size() > 6);
  for (std::size_t i = 1; i < dets.size(); ++i) {
    CHECK((dets[i - 1].frame < dets[i].frame ||
           (dets[i - 1].frame == dets[i].frame && dets[i - 1].confidence >= dets[i].confidence)));
  }
}

TEST_CASE("heatmap images store round(255 * value)") {
  const auto dir = fs::temp_directory_path() / "radarformer_test_heatmaps";
  fs::remove_all(dir);
  fs::create_directories(dir);
  ConfMap cm(3, 2, 3);
  const double vals[] = {0.0, 0.5, 1.0, 0.2, 0.999, 1.7};
  for (int i = 0; i < 6; ++i) cm.values[std::size_t(i)] = vals[i];
  cm.at(1, 0, 0) = 0.25;
  cm.at(2, 1, 2) = -0.3;
  write_pgm((dir / "a.pgm").string(), cm, 0);
  const auto pgm = slurp(dir / "a.pgm");
  const std::string header = "P5\n3 2\n255\n";
  REQUIRE(pgm.size() == header.size() + 6);
  CHECK(pgm.substr(0, header.size()) == header);
  const unsigned char want[] = {0, 128, 255, 51, 255, 255};
  for (int i = 0; i < 6; ++i) CHECK((unsigned char)pgm[header.size() + std::size_t(i)] == want[i]);

  write_ppm((dir / "a.ppm").string(), cm);
  const auto ppm = slurp(dir / "a.ppm");
  const std::string h6 = "P6\n3 2\n255\n";
  REQUIRE(ppm.size() == h6.size() + 18);
  CHECK((unsigned char)ppm[h6.size() + 0] == 0);
  CHECK((unsigned char)ppm[h6.size() + 1] == 64);
  CHECK((unsigned char)ppm[h6.size() + 3] == 128);
  CHECK((unsigned char)ppm[h6.size() + 17] == 0);

  Tensor<double> maps({3, 2, 2, 3}, std::vector<double>(36, 0.5));
  export_heatmaps((dir / "h").string(), "seq", maps);
  CHECK(fs::exists(dir / "h" / "seq_f0001_car.pgm"));
  CHECK(fs::exists(dir / "h" / "seq_f0000.ppm"));
  fs::remove_all(dir);
}

TEST_CASE("Adam update matches the closed form") {
  Tensor<double> w({3}, {1.0, -2.0, 0.5});
  w.set_requires_grad(true);
  auto g = w.mutable_grad();
  g[0] = 0.3;
  g[1] = -4.0;
  g[2] = 0.0;
  Adam<double> adam({w}, 0.9, 0.999, 1e-8);
  adam.step(0.01);
  CHECK(std::abs(w.data()[0] - (1.0 - 0.01 * 0.3 / (0.3 + 1e-8))) < 1e-15);
  CHECK(std::abs(w.data()[1] - (-2.0 + 0.01 * 4.0 / (4.0 + 1e-8))) < 1e-15);
  CHECK(w.data()[2] == 0.5);
  // Second step with the same gradient: m = 0.19 g / 0.19, v = 0.001999 g^2 / 0.001999.
  adam.step(0.01);
  CHECK(std::abs(w.data()[0] - (1.0 - 2.0 * 0.01 * 0.3 / (0.3 + 1e-8))) < 1e-12);
}

TEST_CASE("learning-rate schedules run from lr_start to lr_end") {
  RunConfig c;
  c.lr_start = 1e-4;
  c.lr_end = 1e-6;
  c.lr_steps = 3;
  CHECK(learning_rate(c, 0, 90) == 1e-4);
  CHECK(std::abs(learning_rate(c, 45, 90) - 1e-5) < 1e-18);
  CHECK(std::abs(learning_rate(c, 89, 90) - 1e-6) < 1e-18);
  c.schedule = LrSchedule::cosine;
  CHECK(learning_rate(c, 0, 101) == 1e-4);
  CHECK(std::abs(learning_rate(c, 50, 101) - (1e-6 + 0.5 * (1e-4 - 1e-6))) < 1e-18);
  CHECK(std::abs(learning_rate(c, 100, 101) - 1e-6) < 1e-18);
  for (auto s : {LrSchedule::step, LrSchedule::cosine}) {
    c.schedule = s;
    for (Index i = 1; i < 101; ++i) CHECK(learning_rate(c, i, 101) <= learning_rate(c, i - 1, 101));
  }
}

TEST_CASE("run config round trip and validation") {
  auto c = toy_run();
  c.seed = 12345678901234ULL;
  c.schedule = LrSchedule::cosine;
  c.codec.peak_floor = 0.35;
  const auto kv = c.to_kv();
  const auto back = RunConfig::from_kv(KvConfig::parse(kv.to_text(), "mem"));
  CHECK(back.to_kv().values() == kv.values());
  CHECK(back.model == c.model);

  auto bad = [](const std::string& text) {
    CAPTURE(text);
    CHECK_THROWS_AS(RunConfig::from_kv(KvConfig::parse(text, "mem")), ConfigError);
  };
  bad("train.stride = 33\n");
  bad("train.lr_end = 1e-3\n");
  bad("train.lr_end = 0\n");
  bad("train.schedule = linear\n");
  bad("train.epoch = 3\n");
  bad("run.seed = -1\n");
  bad("synth.frames = 16\n");
  bad("model.preset = radarformer-tiny\nmodel.heads = 3\n");
  const auto d = RunConfig::from_kv(KvConfig::parse("model.preset = cnn2d-tiny\ntrain.stride = 16\n", "mem"));
  CHECK(d.model.variant == Variant::cnn2d);
  CHECK(d.train_stride == 16);
}

TEST_CASE("training lowers the loss and is deterministic in 64-bit mode") {
  auto cfg = toy_run();
  cfg.deterministic = true;
  const auto data = toy_data(3);
  const auto a = train(cfg, data), b = train(cfg, data);
  REQUIRE(a.epochs.size() == 2);
  CHECK(a.epochs[1].loss < a.epochs[0].loss);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::memcmp(&a.epochs[i].loss, &b.epochs[i].loss, sizeof(double)) == 0);
    CHECK(a.epochs[i].val_ap == b.epochs[i].val_ap);
  }
  CHECK(a.best.f64);
  CHECK(a.best.blobs.size() == b.best.blobs.size());
  for (std::size_t i = 0; i < a.best.blobs.size(); ++i) CHECK(a.best.blobs[i].values == b.best.blobs[i].values);

  cfg.seed = 1;
  const auto c = train(cfg, data);
  CHECK(c.epochs[0].loss != a.epochs[0].loss);

  auto no_val = data;
  for (auto& s : no_val) s.split = "train";
  CHECK_THROWS_AS(train(cfg, no_val), DataError);
  auto wrong = cfg;
  wrong.model.height = 32;
  wrong.model.width = 32;
  CHECK_THROWS_AS(train(wrong, data), ConfigError);
}

TEST_CASE("the saved best checkpoint reproduces the validation AP") {
  const auto dir = fs::temp_directory_path() / "radarformer_test_train";
  fs::remove_all(dir);
  for (bool f64 : {false, true}) {
    auto cfg = toy_run();
    cfg.deterministic = f64;
    cfg.out_dir = dir.string();
    const auto data = toy_data(4);
    const auto r = train(cfg, data);
    const auto ck = load_checkpoint((dir / "best.ckpt").string());
    const auto eval = validate_checkpoint(ck, data, cfg.effective_test_stride(), cfg.codec);
    CHECK(std::abs(eval.ap - r.best_ap) <= 1e-9);
    CHECK(ck.meta.get_int("train.best_epoch") == r.best_epoch);

    const auto eff = RunConfig::from_kv(KvConfig::load((dir / "effective_config.txt").string()));
    CHECK(eff.seed == cfg.seed);
    CHECK(eff.model.init_seed == cfg.seed);
    CHECK(eff.to_kv().values() == RunConfig::from_kv(eff.to_kv()).to_kv().values());
    const auto log = slurp(dir / "train_log.txt");
    CHECK(std::count(log.begin(), log.end(), '\n') == 3);
  }
  fs::remove_all(dir);
}

TEST_CASE("overlapping training windows reach at least the non-overlapping AP") {
  auto cfg = toy_run();
  cfg.epochs = 3;
  const auto data = toy_data(6, 10, 16);
  cfg.train_stride = cfg.window();
  const auto none = train(cfg, data);
  cfg.train_stride = cfg.window() / 4;
  const auto overlap = train(cfg, data);
  MESSAGE("stride T: AP " << none.best_ap << ", stride T/4: AP " << overlap.best_ap);
  CHECK(overlap.best_ap >= none.best_ap);
}
