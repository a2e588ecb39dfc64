#include "radarformer/checkpoint.hpp"

#include <limits>

#include "binary_io.hpp"

namespace radar {

template <typename T>
Checkpoint make_checkpoint(const Model<T>& model, const KvConfig& meta, bool f64) {
  Checkpoint ck;
  ck.model = model.config();
  ck.meta = meta;
  ck.f64 = f64;
  for (const auto& e : model.params().entries()) {
    CheckpointBlob blob{e.name, e.tensor.shape(), {}};
    blob.values.reserve(static_cast<std::size_t>(e.tensor.numel()));
    for (T v : e.tensor.data()) blob.values.push_back(f64 ? double(v) : double(static_cast<float>(v)));
    ck.blobs.push_back(std::move(blob));
  }
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  KvConfig text = ck.meta;
  text.merge(ck.model.to_kv());
  text.set("checkpoint.dtype", std::string(ck.f64 ? "f64" : "f32"));
  const std::string config = text.to_text();

  detail::ByteWriter w;
  w.raw("RFCK");
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(config.size()));
  w.raw(config);
  w.u32(static_cast<std::uint32_t>(ck.blobs.size()));
  for (const auto& b : ck.blobs) {
    if (b.name.size() > std::numeric_limits<std::uint16_t>::max()) throw ConfigError("blob name too long: " + b.name);
    w.u16(static_cast<std::uint16_t>(b.name.size()));
    w.raw(b.name);
    w.u8(static_cast<std::uint8_t>(b.shape.size()));
    for (Index e : b.shape) w.u32(static_cast<std::uint32_t>(e));
    for (double v : b.values) ck.f64 ? w.f64(v) : w.f32(static_cast<float>(v));
  }
  w.save(path);
}

Checkpoint load_checkpoint(const std::string& path) {
  detail::ByteReader r(path);
  if (r.raw(4, "magic") != "RFCK") r.fail("bad magic (expected RFCK)", 0);
  const std::size_t version_at = r.offset();
  if (const auto version = r.u16(); version != kCheckpointVersion) {
    r.fail("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  const std::uint32_t config_len = r.u32();
  const std::size_t config_at = r.offset();
  const std::string config = r.raw(config_len, "config text");

  Checkpoint ck;
  KvConfig all;
  try {
    all = KvConfig::parse(config, path);
    KvConfig model_kv;
    for (const auto& [key, value] : all.values()) {
      if (key.starts_with("model.")) {
        model_kv.set(key, value);
      } else if (key != "checkpoint.dtype") {
        ck.meta.set(key, value);
      }
    }
    ck.model = ModelConfig::from_kv(model_kv);
  } catch (const ConfigError& e) {
    r.fail(std::string("invalid config section: ") + e.what(), config_at);
  }
  const std::string dtype = all.get_string("checkpoint.dtype", "f32");
  if (dtype != "f32" && dtype != "f64") r.fail("unknown checkpoint.dtype '" + dtype + "'", config_at);
  ck.f64 = dtype == "f64";

  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointBlob b;
    b.name = r.raw(r.u16(), "blob name");
    const std::size_t rank_at = r.offset();
    const std::uint8_t rank = r.u8();
    if (rank == 0) r.fail("blob '" + b.name + "' has rank 0", rank_at);
    std::uint64_t n = 1;
    for (std::uint8_t a = 0; a < rank; ++a) {
      const std::size_t at = r.offset();
      const std::uint32_t e = r.u32();
      if (e == 0) r.fail("blob '" + b.name + "' has a zero extent", at);
      b.shape.push_back(e);
      n *= e;
      if (n > r.remaining()) r.fail("blob '" + b.name + "' extents exceed the file size", at);
    }
    r.need(n * (ck.f64 ? 8 : 4), "blob '" + b.name + "' values");
    b.values.resize(n);
    for (auto& v : b.values) v = ck.f64 ? r.f64() : double(r.f32());
    ck.blobs.push_back(std::move(b));
  }
  r.expect_end();
  return ck;
}

template <typename T>
void apply_checkpoint(const Checkpoint& ck, Model<T>& model) {
  if (!(ck.model == model.config())) {
    throw ConfigError("checkpoint model '" + ck.model.name + "' does not match the configured model '" +
                      model.config().name + "'");
  }
  const auto& entries = model.params().entries();
  if (entries.size() != ck.blobs.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(ck.blobs.size()) + " tensors, model expects " +
                      std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& b = ck.blobs[i];
    if (b.name != entries[i].name || b.shape != entries[i].tensor.shape()) {
      throw ConfigError("checkpoint tensor '" + b.name + "' " + to_string(b.shape) + " does not match model tensor '" +
                        entries[i].name + "' " + to_string(entries[i].tensor.shape()));
    }
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor<T> t = entries[i].tensor;
    auto dst = t.mutable_data();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = static_cast<T>(ck.blobs[i].values[j]);
  }
}

template Checkpoint make_checkpoint<float>(const Model<float>&, const KvConfig&, bool);
template Checkpoint make_checkpoint<double>(const Model<double>&, const KvConfig&, bool);
template void apply_checkpoint<float>(const Checkpoint&, Model<float>&);
template void apply_checkpoint<double>(const Checkpoint&, Model<double>&);

}  // namespace radar
