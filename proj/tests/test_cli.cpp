#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "radarformer/checkpoint.hpp"
#include "doctest.h"
#include "radarformer/dataset.hpp"
#include "radarformer/model.hpp"
#include "radarformer/profiler.hpp"

using namespace radar;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = radar::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("radarformer_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

bool single_error_line(const Result& r, const std::string& category) {
  return r.err.starts_with("error: " + category + ": ") && std::count(r.err.begin(), r.err.end(), '\n') == 1;
}

const char* kToyConfig =
    "model.preset = radarformer-tiny\n"
    "model.frames = 4\n"
    "model.height = 16\n"
    "model.width = 16\n"
    "synth.sequences = 5\n"
    "synth.frames = 12\n"
    "train.epochs = 2\n"
    "train.stride = 2\n"
    "train.lr_start = 0.003\n"
    "train.lr_end = 0.00003\n";

// Loss column of a training log.
std::vector<std::string> losses(const fs::path& log) {
  std::istringstream in(slurp(log));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (line.starts_with("#")) continue;
    std::istringstream ls(line);
    std::string epoch, loss;
    ls >> epoch >> loss;
    out.push_back(loss);
  }
  return out;
}

}  // namespace

TEST_CASE("synth with the same seed writes byte-identical directories") {
  const auto dir = scratch("synth");
  const auto a = dir / "a", b = dir / "b";
  CHECK(run_cli({"synth", "--seed", "7", "--out", a.string(), "--sequences", "3", "--frames", "32"}).code == 0);
  CHECK(run_cli({"synth", "--seed", "7", "--data-dir", b.string(), "--sequences", "3", "--frames", "32"}).code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    ++files;
  }
  CHECK(files == 3 * 2 + 2);
  CHECK(read_manifest(a.string()).total_frames == 96);
  CHECK(run_cli({"synth", "--seed", "8", "--out", (dir / "c").string(), "--sequences", "3", "--frames", "32"}).code == 0);
  CHECK(slurp(a / "00_seq.ramc") != slurp(dir / "c" / "00_seq.ramc"));
  fs::remove_all(dir);
}

TEST_CASE("eval of perfect detections prints AP 1.0000") {
  const auto dir = scratch("eval");
  const auto data = dir / "data";
  REQUIRE(run_cli({"synth", "--seed", "2", "--out", data.string(), "--sequences", "5", "--frames", "32"}).code == 0);
  const auto seqs = read_dataset(data.string());
  fs::create_directories(dir / "dets");
  for (const auto& s : seqs) {
    std::vector<Detection> dets;
    for (const auto& a : s.annotations) dets.push_back({a.frame, a.cls, a.range, a.azimuth, 1.0});
    write_detections((dir / "dets" / (s.name + ".det")).string(), dets);
  }
  const auto r = run_cli({"eval", "--data-dir", data.string(), "--detections", (dir / "dets").string(), "--out",
                      (dir / "ev").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("Total       1.0000    1.0000") != std::string::npos);
  CHECK(KvConfig::load((dir / "ev" / "metrics.txt").string()).get_double("total.ap") == 1.0);

  fs::remove(dir / "dets" / "03_seq.det");
  const auto missing = run_cli({"eval", "--data-dir", data.string(), "--detections", (dir / "dets").string()});
  CHECK(missing.code == 3);
  CHECK(single_error_line(missing, "data"));
  CHECK(missing.err.find("03_seq.det") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("profile prints the exact count_* totals") {
  const auto r = run_cli({"profile", "--model", "radarformer-ref", "--model", "hourglass3d-ref"});
  REQUIRE(r.code == 0);
  for (const char* name : {"radarformer-ref", "hourglass3d-ref"}) {
    Model<float> m(preset(name));
    const auto s = count_macs(m, m.config().input_shape(1));
    CHECK(r.out.find(std::string(name) + ".params = " + std::to_string(s.params)) != std::string::npos);
    CHECK(r.out.find(std::string(name) + ".macs = " + std::to_string(s.macs)) != std::string::npos);
    CHECK(count_params(m).params == s.params);
  }
  CHECK(r.out.find("M-Net") != std::string::npos);
}

TEST_CASE("train, infer and eval on a toy dataset") {
  const auto dir = scratch("pipeline");
  write_text(dir / "toy.cfg", kToyConfig);
  const auto cfg = (dir / "toy.cfg").string(), data = (dir / "data").string();
  REQUIRE(run_cli({"synth", "--config", cfg, "--seed", "5", "--data-dir", data}).code == 0);

  auto r = run_cli({"train", "--config", cfg, "--data-dir", data, "--out", (dir / "run").string(), "--deterministic"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("epoch 2 loss") != std::string::npos);
  const auto first = losses(dir / "run" / "train_log.txt");
  REQUIRE(first.size() == 2);
  CHECK(std::stod(first[1]) < std::stod(first[0]));

  // The effective config alone reproduces the run.
  r = run_cli({"train", "--config", (dir / "run" / "effective_config.txt").string(), "--out", (dir / "rerun").string()});
  REQUIRE(r.code == 0);
  CHECK(losses(dir / "rerun" / "train_log.txt") == first);
  const auto c1 = load_checkpoint((dir / "run" / "best.ckpt").string());
  const auto c2 = load_checkpoint((dir / "rerun" / "best.ckpt").string());
  REQUIRE(c1.blobs.size() == c2.blobs.size());
  for (std::size_t i = 0; i < c1.blobs.size(); ++i) CHECK(c1.blobs[i].values == c2.blobs[i].values);

  const auto ckpt = (dir / "run" / "best.ckpt").string();
  r = run_cli({"infer", "--config", cfg, "--data-dir", data, "--checkpoint", ckpt, "--out", (dir / "inf").string(),
           "--heatmaps", "--split", "val"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "inf" / "04_seq.det"));
  CHECK(fs::exists(dir / "inf" / "heatmaps" / "04_seq_f0011_pedestrian.pgm"));
  const auto dets = read_detections((dir / "inf" / "04_seq.det").string());
  for (std::size_t i = 1; i < dets.size(); ++i) {
    CHECK((dets[i - 1].frame < dets[i].frame ||
           (dets[i - 1].frame == dets[i].frame && dets[i - 1].confidence >= dets[i].confidence)));
  }
  r = run_cli({"eval", "--data-dir", data, "--detections", (dir / "inf").string(), "--split", "val", "--out",
           (dir / "ev").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("Total") != std::string::npos);

  // Checkpoint and configured model disagree.
  r = run_cli({"infer", "--data-dir", data, "--checkpoint", ckpt, "--out", (dir / "inf2").string(), "--config", cfg,
           "--model", "cnn2d-tiny"});
  CHECK(r.code == 2);
  CHECK(single_error_line(r, "config"));
  fs::remove_all(dir);
}

TEST_CASE("errors map to categories and exit codes") {
  const auto dir = scratch("errors");
  auto r = run_cli({});
  CHECK(r.code == 2);
  CHECK(single_error_line(r, "config"));
  r = run_cli({"frobnicate"});
  CHECK(r.code == 2);
  r = run_cli({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("synth") != std::string::npos);

  write_text(dir / "bad.cfg", "train.epochz = 3\n");
  r = run_cli({"train", "--config", (dir / "bad.cfg").string()});
  CHECK(r.code == 2);
  CHECK(single_error_line(r, "config"));
  CHECK(r.err.find("train.epochz") != std::string::npos);
  r = run_cli({"train", "--config", (dir / "nope.cfg").string()});
  CHECK(r.code == 2);
  r = run_cli({"profile", "--model", "nope"});
  CHECK(r.code == 2);
  r = run_cli({"synth", "--seed", "x", "--out", (dir / "d").string()});
  CHECK(r.code == 2);

  write_text(dir / "toy.cfg", kToyConfig);
  const auto data = dir / "data";
  REQUIRE(run_cli({"synth", "--config", (dir / "toy.cfg").string(), "--data-dir", data.string()}).code == 0);
  auto cube = slurp(data / "02_seq.ramc");
  write_text(data / "02_seq.ramc", cube.substr(0, cube.size() / 2));
  r = run_cli({"train", "--config", (dir / "toy.cfg").string(), "--data-dir", data.string(), "--out",
           (dir / "run").string()});
  CHECK(r.code == 3);
  CHECK(single_error_line(r, "data"));
  CHECK(r.err.find("02_seq.ramc") != std::string::npos);
  CHECK(r.err.find("offset") != std::string::npos);

  write_text(dir / "broken.ckpt", "RFCK\x01");
  r = run_cli({"infer", "--data-dir", data.string(), "--checkpoint", (dir / "broken.ckpt").string(), "--out",
           (dir / "inf").string()});
  CHECK(r.code == 3);
  CHECK(single_error_line(r, "data"));
  CHECK(r.err.find("broken.ckpt") != std::string::npos);

  r = run_cli({"train", "--data-dir", (dir / "missing").string(), "--out", (dir / "run").string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("manifest") != std::string::npos);
  fs::remove_all(dir);
}
