#include <cstring>

#include "doctest.h"
#include "radarformer/gradcheck.hpp"
#include "radarformer/model.hpp"
#include "test_util.hpp"

using namespace radar;
using radar::testing::random_tensor;

namespace {

ModelConfig toy(Variant variant, std::uint64_t seed) {
  ModelConfig c;
  c.name = "toy";
  c.variant = variant;
  c.frames = 4;
  c.chirps = 2;
  c.height = 16;
  c.width = 16;
  c.merge_channels = 4;
  c.stem_kernels = {1, 3};
  c.stem_strides = {2, 2};
  c.stem_channels = {4, 8};
  c.head_kernel = 3;
  c.depth = 1;
  c.heads = 2;
  c.head_dim = 4;
  c.window = 2;
  c.grid = 2;
  c.patch = 2;
  c.hourglass_widths = {4, 8};
  c.hourglass_kernel = {3, 3, 3};
  c.norm = seed % 2 ? NormKind::batch : NormKind::layer;
  c.init_seed = seed;
  return c;
}

std::int64_t total_params(const ProfileList& rows) {
  std::int64_t n = 0;
  for (const auto& r : rows) n += r.params;
  return n;
}

}  // namespace

TEST_CASE("radarformer maps the reference cube to ConfMaps in [0, 1]") {
  Model<float> model(preset("radarformer-ref"));
  auto cube = Tensor<float>::uniform({1, 2, 32, 4, 128, 128}, 1, -1, 1);
  auto y = model.forward(cube);
  CHECK(y.shape() == Shape{1, 3, 32, 128, 128});
  float lo = 1, hi = 0;
  for (float v : y.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= 0.0f);
  CHECK(hi <= 1.0f);
}

TEST_CASE("every variant shares the cube to ConfMap contract") {
  for (Variant v : {Variant::cnn2d, Variant::transformer2d, Variant::radarformer, Variant::hourglass3d}) {
    CAPTURE(variant_name(v));
    auto cfg = toy(v, 1);
    Model<double> model(cfg);
    auto cube = random_tensor(cfg.input_shape(2), 2);
    auto y = model.forward(cube);
    CHECK(y.shape() == cfg.output_shape(2));
    for (double p : y.data()) CHECK((p >= 0.0 && p <= 1.0));
    CHECK_THROWS_AS(model.forward(random_tensor({1, 2, 4, 3, 16, 16}, 3)), ShapeError);
  }
  Model<double> a(preset("radarformer-tiny")), b(preset("cnn2d-tiny"));
  CHECK(a.config().input_shape() == b.config().input_shape());
  CHECK(a.config().output_shape() == b.config().output_shape());
}

TEST_CASE("toy models pass the full forward and backward gradient check") {
  for (Variant v : {Variant::radarformer, Variant::cnn2d, Variant::transformer2d, Variant::hourglass3d}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      CAPTURE(variant_name(v));
      CAPTURE(s);
      const auto cfg = toy(v, s);
      Model<double> model(cfg);
      auto cube = random_tensor(cfg.input_shape(1), 10 + s, -1, 1, true);
      auto target = random_tensor(cfg.output_shape(1), 20 + s, 0, 1);
      const Context ctx{true};
      std::vector<Tensor<double>> inputs{cube};
      for (const auto& p : model.params().trainable()) inputs.push_back(p);
      GradCheckOptions opt;
      opt.max_coords_per_input = 6;
      opt.seed = s;
      const auto r = finite_diff_check([&] { return bce_with_logits(model.forward_logits(cube, ctx), target); },
                                       inputs, opt);
      INFO(r.worst);
      CHECK(r.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("forward output is bit-identical for a fixed seed and config") {
  const auto cfg = toy(Variant::radarformer, 3);
  Model<double> a(cfg), b(cfg);
  auto cube = random_tensor(cfg.input_shape(1), 4);
  auto ya = a.forward(cube), yb = b.forward(cube);
  CHECK(std::memcmp(ya.data().data(), yb.data().data(), ya.data().size_bytes()) == 0);

  auto other = cfg;
  other.init_seed = 4;
  Model<double> c(other);
  CHECK(std::memcmp(ya.data().data(), c.forward(cube).data().data(), ya.data().size_bytes()) != 0);
}

TEST_CASE("profile parameter totals equal the trainable parameter count") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    Model<float> model(preset(name));
    const auto rows = model.profile(model.config().input_shape(1));
    CHECK(total_params(rows) == model.params().trainable_count());
    for (const auto& r : rows) CHECK((r.params >= 0 && r.macs >= 0));
  }
  Model<float> model(preset("radarformer-tiny"));
  CHECK_THROWS_AS(model.profile({1, 2, 16, 4, 32, 32}), ShapeError);
}

TEST_CASE("model config validation and key-value round trip") {
  for (const auto& name : preset_names()) {
    const auto cfg = preset(name);
    CHECK(ModelConfig::from_kv(cfg.to_kv()) == cfg);
    CHECK(ModelConfig::from_kv(KvConfig::parse(cfg.to_kv().to_text(), "mem")) == cfg);
  }
  CHECK_THROWS_AS(preset("nope"), ConfigError);

  auto bad = [](auto mutate) {
    auto c = preset("radarformer-tiny");
    mutate(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  bad([](ModelConfig& c) { c.mlp_ratio = 10; });
  bad([](ModelConfig& c) { c.mlp_ratio = 151; });
  bad([](ModelConfig& c) { c.stem_kernels = {5, 3}; });
  bad([](ModelConfig& c) { c.head_dim = 8; });
  bad([](ModelConfig& c) { c.frames = 24; });
  bad([](ModelConfig& c) { c.stem_kernels = {2, 4}; });
  bad([](ModelConfig& c) { c.height = 31; });

  auto t = preset("transformer2d-ref");
  t.patch = 3;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  CHECK_THROWS_AS(Model<double>{t}, ConfigError);

  KvConfig kv;
  kv.set("model.preset", std::string("radarformer-tiny"));
  kv.set("model.depth", std::int64_t{2});
  const auto merged = ModelConfig::from_kv(kv);
  CHECK(merged.depth == 2);
  CHECK(merged.height == 32);
}
