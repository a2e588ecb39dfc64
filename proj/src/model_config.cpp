#include "radarformer/model_config.hpp"

namespace radar {

Variant parse_variant(const std::string& text) {
  if (text == "cnn2d") return Variant::cnn2d;
  if (text == "transformer2d") return Variant::transformer2d;
  if (text == "radarformer") return Variant::radarformer;
  if (text == "hourglass3d") return Variant::hourglass3d;
  throw ConfigError("unknown model variant '" + text + "'");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::cnn2d: return "cnn2d";
    case Variant::transformer2d: return "transformer2d";
    case Variant::radarformer: return "radarformer";
    case Variant::hourglass3d: return "hourglass3d";
  }
  return "radarformer";
}

Index ModelConfig::stem_stride() const {
  Index s = 1;
  for (Index v : stem_strides) s *= v;
  return s;
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void ModelConfig::validate() const {
  require(frames >= 1 && chirps >= 1 && height >= 1 && width >= 1 && classes >= 1,
          "frames, chirps, height, width and classes must be positive");
  require(temporal_kernel >= 1 && temporal_kernel % 2 == 1, "temporal_kernel must be odd");
  require(init_seed < (std::uint64_t{1} << 63), "init_seed out of range");

  if (variant == Variant::hourglass3d) {
    require(hourglass_widths.size() >= 2, "hourglass_widths needs at least two levels");
    require(hourglass_kernel.size() == 3, "hourglass_kernel needs three extents");
    for (Index k : hourglass_kernel) require(k >= 1 && k % 2 == 1, "hourglass kernel extents must be odd");
    for (Index w : hourglass_widths) require(w >= 1, "hourglass widths must be positive");
    const Index f = Index{1} << (hourglass_widths.size() - 1);
    require(frames % f == 0 && height % f == 0 && width % f == 0,
            "frames, height and width must be divisible by " + std::to_string(f) + " for the hourglass levels");
    return;
  }

  require(frames >= 2 && (frames & (frames - 1)) == 0,
          "frames = " + std::to_string(frames) + " is not reducible to 1 by stride-2 temporal stages");
  require(merge_channels >= 1, "merge_channels must be positive");
  require(stem_kernels.size() == 2 && stem_strides.size() == 2 && stem_channels.size() == 2,
          "the stem has exactly two convolutions (stem_kernels, stem_strides, stem_channels need two entries)");
  for (std::size_t i = 0; i < 2; ++i) {
    require(stem_kernels[i] >= 1 && stem_kernels[i] % 2 == 1, "stem kernels must be odd");
    require(stem_strides[i] >= 1, "stem strides must be positive");
    require(stem_channels[i] >= 1, "stem channels must be positive");
  }
  require(stem_kernels[0] <= stem_kernels[1], "stem kernel sizes must be non-decreasing");
  require(head_kernel >= 1 && head_kernel % 2 == 1, "head_kernel must be odd");
  require(height % stem_stride() == 0 && width % stem_stride() == 0,
          "height and width must be divisible by the total stem stride " + std::to_string(stem_stride()));
  require(depth >= 0, "depth must be non-negative");

  if (variant == Variant::cnn2d) {
    require(block_kernel >= 1 && block_kernel % 2 == 1, "block_kernel must be odd");
    return;
  }
  require(mlp_ratio >= 20 && mlp_ratio <= 150, "mlp_ratio must lie in [20, 150], got " + std::to_string(mlp_ratio));
  require(heads >= 1 && head_dim >= 1, "heads and head_dim must be positive");
  if (variant == Variant::radarformer) {
    require(heads * head_dim == trunk_width(), "heads * head_dim (" + std::to_string(heads * head_dim) +
                                                   ") must equal the trunk width " + std::to_string(trunk_width()));
    require(window >= 1 && grid >= 1, "window and grid sizes must be positive");
    require(mbconv_kernel >= 1 && mbconv_kernel % 2 == 1, "mbconv_kernel must be odd");
    require(trunk_width() % 4 == 0, "trunk width must be a multiple of 4 for MBConv");
  } else {
    const Index h = height / stem_stride(), w = width / stem_stride();
    require(patch >= 1 && h % patch == 0 && w % patch == 0,
            "patch size " + std::to_string(patch) + " does not divide the " + std::to_string(h) + "x" +
                std::to_string(w) + " stem output");
  }
}

KvConfig ModelConfig::to_kv() const {
  KvConfig kv;
  kv.set("model.name", name);
  kv.set("model.variant", variant_name(variant));
  kv.set("model.frames", frames);
  kv.set("model.chirps", chirps);
  kv.set("model.height", height);
  kv.set("model.width", width);
  kv.set("model.classes", classes);
  kv.set("model.merge_channels", merge_channels);
  kv.set("model.temporal_kernel", temporal_kernel);
  kv.set("model.stem_kernels", stem_kernels);
  kv.set("model.stem_strides", stem_strides);
  kv.set("model.stem_channels", stem_channels);
  kv.set("model.head_kernel", head_kernel);
  kv.set("model.depth", depth);
  kv.set("model.heads", heads);
  kv.set("model.head_dim", head_dim);
  kv.set("model.mlp_ratio", mlp_ratio);
  kv.set("model.window", window);
  kv.set("model.grid", grid);
  kv.set("model.mbconv_kernel", mbconv_kernel);
  kv.set("model.block_kernel", block_kernel);
  kv.set("model.patch", patch);
  kv.set("model.hourglass_widths", hourglass_widths);
  kv.set("model.hourglass_kernel", hourglass_kernel);
  kv.set("model.norm", norm_name(norm));
  kv.set("model.activation", activation_name(act));
  kv.set("model.init_seed", static_cast<std::int64_t>(init_seed));
  return kv;
}

const std::set<std::string>& ModelConfig::keys() {
  static const std::set<std::string> k = [] {
    std::set<std::string> s;
    const auto defaults = ModelConfig{}.to_kv();
    for (const auto& [key, value] : defaults.values()) s.insert(key);
    s.insert("model.preset");
    return s;
  }();
  return k;
}

ModelConfig ModelConfig::from_kv(const KvConfig& kv) {
  ModelConfig c = kv.has("model.preset") ? preset(kv.get_string("model.preset")) : ModelConfig{};
  c.name = kv.get_string("model.name", c.name);
  c.variant = parse_variant(kv.get_string("model.variant", variant_name(c.variant)));
  c.frames = kv.get_int("model.frames", c.frames);
  c.chirps = kv.get_int("model.chirps", c.chirps);
  c.height = kv.get_int("model.height", c.height);
  c.width = kv.get_int("model.width", c.width);
  c.classes = kv.get_int("model.classes", c.classes);
  c.merge_channels = kv.get_int("model.merge_channels", c.merge_channels);
  c.temporal_kernel = kv.get_int("model.temporal_kernel", c.temporal_kernel);
  c.stem_kernels = kv.get_int_list("model.stem_kernels", c.stem_kernels);
  c.stem_strides = kv.get_int_list("model.stem_strides", c.stem_strides);
  c.stem_channels = kv.get_int_list("model.stem_channels", c.stem_channels);
  c.head_kernel = kv.get_int("model.head_kernel", c.head_kernel);
  c.depth = kv.get_int("model.depth", c.depth);
  c.heads = kv.get_int("model.heads", c.heads);
  c.head_dim = kv.get_int("model.head_dim", c.head_dim);
  c.mlp_ratio = kv.get_int("model.mlp_ratio", c.mlp_ratio);
  c.window = kv.get_int("model.window", c.window);
  c.grid = kv.get_int("model.grid", c.grid);
  c.mbconv_kernel = kv.get_int("model.mbconv_kernel", c.mbconv_kernel);
  c.block_kernel = kv.get_int("model.block_kernel", c.block_kernel);
  c.patch = kv.get_int("model.patch", c.patch);
  c.hourglass_widths = kv.get_int_list("model.hourglass_widths", c.hourglass_widths);
  c.hourglass_kernel = kv.get_int_list("model.hourglass_kernel", c.hourglass_kernel);
  c.norm = parse_norm(kv.get_string("model.norm", norm_name(c.norm)));
  c.act = parse_activation(kv.get_string("model.activation", activation_name(c.act)));
  const auto seed = kv.get_int("model.init_seed", static_cast<std::int64_t>(c.init_seed));
  if (seed < 0) throw ConfigError("model.init_seed must be non-negative");
  c.init_seed = static_cast<std::uint64_t>(seed);
  c.validate();
  return c;
}

bool operator==(const ModelConfig& a, const ModelConfig& b) {
  return a.to_kv().values() == b.to_kv().values();
}

ModelConfig preset(const std::string& name) {
  ModelConfig c;
  c.name = name;
  if (name == "radarformer-ref") {
    c.variant = Variant::radarformer;
    c.stem_channels = {32, 64};
    c.depth = 17;
    c.heads = 2;
    c.head_dim = 32;
    c.mlp_ratio = 20;
  } else if (name == "cnn2d-ref") {
    c.variant = Variant::cnn2d;
    c.stem_channels = {64, 128};
    c.depth = 9;
    c.norm = NormKind::batch;
    c.act = Activation::relu;
  } else if (name == "transformer2d-ref") {
    c.variant = Variant::transformer2d;
    c.stem_channels = {32, 64};
    c.depth = 7;
    c.heads = 8;
    c.head_dim = 32;
    c.mlp_ratio = 20;
    c.patch = 4;
  } else if (name == "hourglass3d-ref") {
    c.variant = Variant::hourglass3d;
    c.hourglass_widths = {32, 64, 128, 368};
    c.hourglass_kernel = {9, 5, 5};
    c.act = Activation::relu;
  } else if (name == "radarformer-tiny") {
    c.variant = Variant::radarformer;
    c.height = 32;
    c.width = 32;
    c.merge_channels = 8;
    c.stem_kernels = {3, 3};
    c.stem_strides = {1, 2};
    c.stem_channels = {16, 32};
    c.depth = 1;
    c.heads = 2;
    c.head_dim = 16;
    c.mlp_ratio = 20;
    c.window = 4;
    c.grid = 4;
  } else if (name == "cnn2d-tiny") {
    c.variant = Variant::cnn2d;
    c.height = 32;
    c.width = 32;
    c.stem_kernels = {3, 3};
    c.stem_strides = {1, 2};
    c.stem_channels = {16, 32};
    c.depth = 2;
    c.act = Activation::relu;
  } else {
    throw ConfigError("unknown model preset '" + name + "'");
  }
  c.validate();
  return c;
}

std::vector<std::string> preset_names() {
  return {"radarformer-ref", "cnn2d-ref", "transformer2d-ref", "hourglass3d-ref", "radarformer-tiny", "cnn2d-tiny"};
}

}  // namespace radar
