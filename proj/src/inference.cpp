#include "radarformer/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "radarformer/error.hpp"

namespace radar {

std::vector<Index> window_starts(Index frames, Index window, Index stride, bool cover_tail) {
  if (window < 1 || frames < window) {
    throw ConfigError("sequence of " + std::to_string(frames) + " frames is shorter than the window " +
                      std::to_string(window));
  }
  if (stride < 1 || stride > window) throw ConfigError("stride must lie in [1, window], got " + std::to_string(stride));
  std::vector<Index> starts;
  for (Index s = 0; s + window <= frames; s += stride) starts.push_back(s);
  if (cover_tail && starts.back() + window < frames) starts.push_back(frames - window);
  return starts;
}

template <typename T>
Tensor<T> window_cube(const Sequence& seq, Index start, Index window) {
  const auto& c = seq.cube;
  const Index F = c.dim(1), C = c.dim(2), H = c.dim(3), W = c.dim(4);
  if (start < 0 || start + window > F) throw ShapeError("window exceeds sequence '" + seq.name + "'");
  const Index plane = C * H * W;
  std::vector<T> out(std::size_t(2 * window * plane));
  const auto src = c.data();
  for (Index part = 0; part < 2; ++part)
    for (Index f = 0; f < window; ++f) {
      const auto from = src.begin() + (part * F + start + f) * plane;
      std::transform(from, from + plane, out.begin() + (part * window + f) * plane,
                     [](float v) { return static_cast<T>(v); });
    }
  return Tensor<T>({1, 2, window, C, H, W}, std::move(out));
}

template <typename T>
Tensor<T> window_targets(const Sequence& seq, Index start, Index window, const CodecParams& p) {
  const Index H = seq.cube.dim(3), W = seq.cube.dim(4);
  std::vector<std::vector<Annotation>> per_frame(static_cast<std::size_t>(window));
  for (const auto& a : seq.annotations)
    if (a.frame >= start && a.frame < start + window) per_frame[std::size_t(a.frame - start)].push_back(a);
  std::vector<T> out(std::size_t(kNumClasses * window * H * W));
  for (Index f = 0; f < window; ++f) {
    const auto cm = encode_confmap(per_frame[std::size_t(f)], kNumClasses, H, W, p);
    for (Index k = 0; k < kNumClasses; ++k)
      for (Index i = 0; i < H * W; ++i)
        out[std::size_t(((k * window + f) * H * W) + i)] = static_cast<T>(cm.values[std::size_t(k * H * W + i)]);
  }
  return Tensor<T>({1, kNumClasses, window, H, W}, std::move(out));
}

template <typename T>
Tensor<double> fuse_windows(Index frames, Index window, Index stride,
                            const std::function<Tensor<T>(Index start)>& predict) {
  std::vector<double> sum;
  std::vector<Index> hits(static_cast<std::size_t>(frames), 0);
  Index K = 0, H = 0, W = 0;
  for (Index start : window_starts(frames, window, stride)) {
    const auto pred = predict(start);
    const auto& s = pred.shape();
    const std::size_t off = s.size() == 5 ? 1 : 0;
    if ((s.size() != 4 && s.size() != 5) || (off && s[0] != 1) || s[off + 1] != window) {
      throw ShapeError("window prediction has shape " + to_string(s));
    }
    if (sum.empty()) {
      K = s[off];
      H = s[off + 2];
      W = s[off + 3];
      sum.assign(std::size_t(K * frames * H * W), 0.0);
    } else if (s[off] != K || s[off + 2] != H || s[off + 3] != W) {
      throw ShapeError("window predictions disagree in shape");
    }
    const auto d = pred.data();
    const Index plane = H * W;
    for (Index k = 0; k < K; ++k)
      for (Index f = 0; f < window; ++f) {
        const auto from = d.begin() + (k * window + f) * plane;
        auto to = sum.begin() + (k * frames + start + f) * plane;
        for (Index i = 0; i < plane; ++i) to[i] += double(from[i]);
      }
    for (Index f = 0; f < window; ++f) ++hits[std::size_t(start + f)];
  }
  const Index plane = H * W;
  for (Index k = 0; k < K; ++k)
    for (Index f = 0; f < frames; ++f) {
      auto to = sum.begin() + (k * frames + f) * plane;
      for (Index i = 0; i < plane; ++i) to[i] /= double(hits[std::size_t(f)]);
    }
  return Tensor<double>({K, frames, H, W}, std::move(sum));
}

template <typename T>
Tensor<double> infer_sequence(const Model<T>& model, const Sequence& seq, Index stride) {
  const Index window = model.config().frames;
  NoGradGuard<T> guard;
  return fuse_windows<T>(seq.frames(), window, stride,
                         [&](Index start) { return model.forward(window_cube<T>(seq, start, window)); });
}

std::vector<Detection> decode_sequence(const Tensor<double>& maps, const CodecParams& p) {
  if (maps.rank() != 4) throw ShapeError("decode_sequence expects [K, T, H, W], got " + to_string(maps.shape()));
  std::vector<Detection> out;
  for (Index f = 0; f < maps.dim(1); ++f) {
    auto dets = decode_confmap(confmap_frame(maps, f), p, f);
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
    out.insert(out.end(), dets.begin(), dets.end());
  }
  return out;
}

namespace {

unsigned char intensity(double v) { return static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))); }

void write_image(const std::string& path, const std::string& header, const std::vector<unsigned char>& pixels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << header;
  out.write(reinterpret_cast<const char*>(pixels.data()), std::streamsize(pixels.size()));
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace

void write_pgm(const std::string& path, const ConfMap& cm, Index cls) {
  if (cls < 0 || cls >= cm.classes) throw ShapeError("class " + std::to_string(cls) + " outside the ConfMap");
  std::vector<unsigned char> px;
  for (Index r = 0; r < cm.height; ++r)
    for (Index a = 0; a < cm.width; ++a) px.push_back(intensity(cm.at(cls, r, a)));
  write_image(path, "P5\n" + std::to_string(cm.width) + " " + std::to_string(cm.height) + "\n255\n", px);
}

void write_ppm(const std::string& path, const ConfMap& cm) {
  std::vector<unsigned char> px;
  for (Index r = 0; r < cm.height; ++r)
    for (Index a = 0; a < cm.width; ++a)
      for (Index k = 0; k < 3; ++k) px.push_back(k < cm.classes ? intensity(cm.at(k, r, a)) : 0);
  write_image(path, "P6\n" + std::to_string(cm.width) + " " + std::to_string(cm.height) + "\n255\n", px);
}

void export_heatmaps(const std::string& dir, const std::string& seq, const Tensor<double>& maps) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError(dir + ": cannot create directory: " + ec.message());
  const auto& names = class_names();
  for (Index f = 0; f < maps.dim(1); ++f) {
    const auto cm = confmap_frame(maps, f);
    char stem[64];
    std::snprintf(stem, sizeof stem, "%s_f%04lld", seq.c_str(), static_cast<long long>(f));
    const auto base = (std::filesystem::path(dir) / stem).string();
    for (Index k = 0; k < cm.classes; ++k) write_pgm(base + "_" + names[std::size_t(k)] + ".pgm", cm, k);
    write_ppm(base + ".ppm", cm);
  }
}

template Tensor<float> window_cube(const Sequence&, Index, Index);
template Tensor<double> window_cube(const Sequence&, Index, Index);
template Tensor<float> window_targets(const Sequence&, Index, Index, const CodecParams&);
template Tensor<double> window_targets(const Sequence&, Index, Index, const CodecParams&);
template Tensor<double> fuse_windows(Index, Index, Index, const std::function<Tensor<float>(Index)>&);
template Tensor<double> fuse_windows(Index, Index, Index, const std::function<Tensor<double>(Index)>&);
template Tensor<double> infer_sequence(const Model<float>&, const Sequence&, Index);
template Tensor<double> infer_sequence(const Model<double>&, const Sequence&, Index);

}  // namespace radar
