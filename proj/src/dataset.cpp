#include "radarformer/dataset.hpp"

#include <cstdio>
#include <filesystem>

#include "binary_io.hpp"
#include "radarformer/kv_config.hpp"
#include "radarformer/rng.hpp"

namespace radar {

namespace fs = std::filesystem;

void write_cube(const std::string& path, const Tensor<float>& cube) {
  if (cube.rank() != 5 || cube.dim(0) != 2) throw ShapeError("cube must be [2, T, C, H, W], got " + to_string(cube.shape()));
  detail::ByteWriter w;
  w.raw("RAMC");
  w.u16(kCubeVersion);
  for (Index e : cube.shape()) w.u32(static_cast<std::uint32_t>(e));
  for (float v : cube.data()) w.f32(v);
  w.save(path);
}

Tensor<float> read_cube(const std::string& path) {
  detail::ByteReader r(path);
  if (r.raw(4, "magic") != "RAMC") r.fail("bad magic (expected RAMC)", 0);
  if (const auto v = r.u16(); v != kCubeVersion) r.fail("unsupported cube version " + std::to_string(v), 4);
  Shape shape;
  std::uint64_t n = 1;
  for (int a = 0; a < 5; ++a) {
    const std::size_t at = r.offset();
    const std::uint32_t e = r.u32();
    if (e == 0 || (a == 0 && e != 2)) r.fail("invalid extent " + std::to_string(e) + " on axis " + std::to_string(a), at);
    shape.push_back(e);
    n *= e;
  }
  r.need(n * 4, "cube payload");
  auto cube = Tensor<float>::zeros(shape);
  for (auto& v : cube.mutable_data()) v = r.f32();
  r.expect_end();
  return cube;
}

DatasetManifest write_dataset(const std::string& dir, const std::vector<Sequence>& sequences) {
  if (sequences.empty()) throw ConfigError("refusing to write an empty dataset");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(dir + ": cannot create directory: " + ec.message());

  DatasetManifest m;
  const auto& first = sequences.front().cube;
  m.chirps = first.dim(2);
  m.height = first.dim(3);
  m.width = first.dim(4);
  KvConfig kv;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& s = sequences[i];
    if (s.cube.rank() != 5 || s.cube.dim(2) != m.chirps || s.cube.dim(3) != m.height || s.cube.dim(4) != m.width) {
      throw ShapeError("sequence '" + s.name + "' cube " + to_string(s.cube.shape()) + " does not match the dataset grid");
    }
    parse_scenario(s.scenario);
    SequenceInfo info{s.name, s.scenario, s.split, s.name + ".ramc", s.name + ".ann", s.frames()};
    write_cube((fs::path(dir) / info.cube_file).string(), s.cube);
    write_annotations((fs::path(dir) / info.annotation_file).string(), s.annotations);

    char key[32];
    std::snprintf(key, sizeof key, "seq.%03zu.", i);
    const std::string p = key;
    kv.set(p + "name", info.name);
    kv.set(p + "scenario", info.scenario);
    kv.set(p + "split", info.split);
    kv.set(p + "frames", std::int64_t{info.frames});
    kv.set(p + "cube", info.cube_file);
    kv.set(p + "annotations", info.annotation_file);
    m.total_frames += info.frames;
    m.sequences.push_back(info);
  }
  kv.set("format.version", m.version);
  kv.set("dataset.sequences", std::int64_t(sequences.size()));
  kv.set("dataset.frames", std::int64_t{m.total_frames});
  kv.set("dataset.chirps", std::int64_t{m.chirps});
  kv.set("dataset.height", std::int64_t{m.height});
  kv.set("dataset.width", std::int64_t{m.width});
  kv.save((fs::path(dir) / "manifest.txt").string());
  return m;
}

DatasetManifest read_manifest(const std::string& dir) {
  const std::string path = (fs::path(dir) / "manifest.txt").string();
  if (!fs::exists(path)) throw DataError(path + ": manifest not found");
  try {
    const auto kv = KvConfig::load(path);
    DatasetManifest m;
    m.version = kv.get_int("format.version");
    if (m.version != kManifestVersion) throw DataError(path + ": unsupported format.version " + std::to_string(m.version));
    m.chirps = kv.get_int("dataset.chirps");
    m.height = kv.get_int("dataset.height");
    m.width = kv.get_int("dataset.width");
    const Index count = kv.get_int("dataset.sequences");
    Index frames = 0;
    for (Index i = 0; i < count; ++i) {
      char key[32];
      std::snprintf(key, sizeof key, "seq.%03lld.", static_cast<long long>(i));
      const std::string p = key;
      SequenceInfo info{kv.get_string(p + "name"),  kv.get_string(p + "scenario"), kv.get_string(p + "split"),
                        kv.get_string(p + "cube"),  kv.get_string(p + "annotations"), kv.get_int(p + "frames")};
      parse_scenario(info.scenario);
      if (info.split != "train" && info.split != "val") throw DataError(path + ": " + p + "split must be train or val");
      if (info.frames < 1) throw DataError(path + ": " + p + "frames must be positive");
      frames += info.frames;
      m.sequences.push_back(info);
    }
    m.total_frames = kv.get_int("dataset.frames");
    if (m.total_frames != frames) {
      throw DataError(path + ": dataset.frames = " + std::to_string(m.total_frames) + " but sequences hold " +
                      std::to_string(frames));
    }
    return m;
  } catch (const ConfigError& e) {
    throw DataError(path + ": " + e.what());
  }
}

Sequence read_sequence(const std::string& dir, const SequenceInfo& info, const DatasetManifest& m) {
  const std::string cube_path = (fs::path(dir) / info.cube_file).string();
  const std::string ann_path = (fs::path(dir) / info.annotation_file).string();
  Sequence s{info.name, info.scenario, info.split, read_cube(cube_path), read_annotations(ann_path)};
  const Shape expected{2, info.frames, m.chirps, m.height, m.width};
  if (s.cube.shape() != expected) {
    throw DataError(cube_path + ": extents " + to_string(s.cube.shape()) + " disagree with the manifest " +
                    to_string(expected));
  }
  for (const auto& a : s.annotations) {
    if (a.frame >= info.frames || a.range >= m.height || a.azimuth >= m.width) {
      throw DataError(ann_path + ": annotation (frame " + std::to_string(a.frame) + ", bin " + std::to_string(a.range) +
                      "," + std::to_string(a.azimuth) + ") outside the sequence grid");
    }
  }
  return s;
}

std::vector<Sequence> read_dataset(const std::string& dir) {
  const auto m = read_manifest(dir);
  std::vector<Sequence> out;
  for (const auto& info : m.sequences) out.push_back(read_sequence(dir, info, m));
  return out;
}

std::vector<Sequence> synthesize_dataset(std::uint64_t seed, Index count, const SynthConfig& config) {
  std::vector<Sequence> out;
  for (Index i = 0; i < count; ++i) {
    const Scenario sc = static_cast<Scenario>(i % 4);
    auto rendered = render_ramap(generate_scene(mix_seed(seed, std::uint64_t(i)), sc, config));
    char name[32];
    std::snprintf(name, sizeof name, "%02lld_seq", static_cast<long long>(i));
    out.push_back({name, scenario_name(sc), i % 5 == 4 ? "val" : "train", std::move(rendered.cube),
                   std::move(rendered.annotations)});
  }
  return out;
}

}  // namespace radar
