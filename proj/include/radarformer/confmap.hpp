#pragma once
// Gaussian ConfMap encoding, object location similarity (OLS), peak
// detection and location-based NMS, plus the annotation/detection line
// formats.

#include <array>
#include <string>
#include <vector>

#include "radarformer/tensor.hpp"

namespace radar {

inline constexpr int kNumClasses = 3;
const std::array<std::string, kNumClasses>& class_names();

struct Annotation {
  Index frame = 0;
  int cls = 0;
  Index range = 0;    // row
  Index azimuth = 0;  // column
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Detection {
  Index frame = 0;
  int cls = 0;
  Index range = 0;
  Index azimuth = 0;
  double confidence = 0.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

// Grid geometry and the OLS constants.
//   d  = range_resolution * euclidean bin distance          [m]
//   s  = max(min_scale, mean object range / scale_distance)
//   OLS = exp(-d^2 / (2 s^2 kappa_c^2))
// Encoding uses sigma_c = clamp(s * kappa_c / range_resolution, min_sigma,
// max_sigma) bins.
struct CodecParams {
  double range_resolution = 0.23;
  std::array<double, kNumClasses> kappa{0.5, 1.0, 2.0};
  double scale_distance = 10.0;
  double min_scale = 1.0;
  double min_sigma = 2.0;
  double max_sigma = 10.0;
  double peak_floor = 0.3;
  double nms_threshold = 0.3;
};

// Per-class heatmaps [classes, height, width] in [0, 1].
struct ConfMap {
  Index classes = 0, height = 0, width = 0;
  std::vector<double> values;

  ConfMap() = default;
  ConfMap(Index k, Index h, Index w) : classes(k), height(h), width(w), values(std::size_t(k * h * w), 0.0) {}
  double& at(Index k, Index r, Index a) { return values[std::size_t((k * height + r) * width + a)]; }
  double at(Index k, Index r, Index a) const { return values[std::size_t((k * height + r) * width + a)]; }
};

double object_scale(double range_bin_a, double range_bin_b, const CodecParams& p);
double encode_sigma(int cls, Index range_bin, const CodecParams& p);

// Similarity of two points; kappa is taken from `cls`.
double ols(int cls, Index r1, Index a1, Index r2, Index a2, const CodecParams& p);
inline double ols(const Detection& d, const Annotation& g, const CodecParams& p) {
  return ols(g.cls, d.range, d.azimuth, g.range, g.azimuth, p);
}

// Throws DataError for annotations outside the grid or class range.
ConfMap encode_confmap(const std::vector<Annotation>& annotations, Index classes, Index height, Index width,
                       const CodecParams& p = {});

// Strict 3x3 local maxima above `floor`, sorted by descending confidence,
// ties by (class, range, azimuth).
std::vector<Detection> peak_detect(const ConfMap& cm, double floor, Index frame = 0);
// Greedy suppression of same-class candidates with OLS > threshold.
std::vector<Detection> l_nms(const std::vector<Detection>& candidates, double threshold, const CodecParams& p = {});
inline std::vector<Detection> decode_confmap(const ConfMap& cm, const CodecParams& p = {}, Index frame = 0) {
  return l_nms(peak_detect(cm, p.peak_floor, frame), p.nms_threshold, p);
}

// Slice frame t of a [K, T, H, W] (or [1, K, T, H, W]) tensor.
template <typename T>
ConfMap confmap_frame(const Tensor<T>& maps, Index t);

// Line formats: "frame class range azimuth" and, for detections, a fifth
// confidence field with 6 decimals. '#' starts a comment line.
void write_annotations(const std::string& path, const std::vector<Annotation>& annotations);
std::vector<Annotation> read_annotations(const std::string& path);
void write_detections(const std::string& path, const std::vector<Detection>& detections);
std::vector<Detection> read_detections(const std::string& path);

}  // namespace radar
