#include "radarformer/confmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "radarformer/error.hpp"

namespace radar {

const std::array<std::string, kNumClasses>& class_names() {
  static const std::array<std::string, kNumClasses> names{"pedestrian", "cyclist", "car"};
  return names;
}

namespace {

double kappa_of(int cls, const CodecParams& p) {
  if (cls < 0 || cls >= kNumClasses) throw DataError("class id " + std::to_string(cls) + " out of range");
  return p.kappa[std::size_t(cls)];
}

bool ranks_before(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.cls != b.cls) return a.cls < b.cls;
  if (a.range != b.range) return a.range < b.range;
  return a.azimuth < b.azimuth;
}

}  // namespace

double object_scale(double range_bin_a, double range_bin_b, const CodecParams& p) {
  const double meters = 0.5 * (range_bin_a + range_bin_b) * p.range_resolution;
  return std::max(p.min_scale, meters / p.scale_distance);
}

double encode_sigma(int cls, Index range_bin, const CodecParams& p) {
  const double s = object_scale(double(range_bin), double(range_bin), p);
  return std::clamp(s * kappa_of(cls, p) / p.range_resolution, p.min_sigma, p.max_sigma);
}

double ols(int cls, Index r1, Index a1, Index r2, Index a2, const CodecParams& p) {
  const double dr = double(r1 - r2), da = double(a1 - a2);
  const double d2 = (dr * dr + da * da) * p.range_resolution * p.range_resolution;
  const double sk = object_scale(double(r1), double(r2), p) * kappa_of(cls, p);
  return std::exp(-d2 / (2.0 * sk * sk));
}

ConfMap encode_confmap(const std::vector<Annotation>& annotations, Index classes, Index height, Index width,
                       const CodecParams& p) {
  ConfMap cm(classes, height, width);
  for (const auto& a : annotations) {
    if (a.cls < 0 || a.cls >= classes || a.range < 0 || a.range >= height || a.azimuth < 0 || a.azimuth >= width) {
      throw DataError("annotation (frame " + std::to_string(a.frame) + ", class " + std::to_string(a.cls) + ", bin " +
                      std::to_string(a.range) + "," + std::to_string(a.azimuth) + ") lies outside the " +
                      std::to_string(classes) + "x" + std::to_string(height) + "x" + std::to_string(width) + " grid");
    }
    const double sigma = encode_sigma(a.cls, a.range, p);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (Index r = 0; r < height; ++r)
      for (Index c = 0; c < width; ++c) {
        const double dr = double(r - a.range), dc = double(c - a.azimuth);
        double& v = cm.at(a.cls, r, c);
        v = std::max(v, std::exp(-(dr * dr + dc * dc) * inv));
      }
  }
  return cm;
}

std::vector<Detection> peak_detect(const ConfMap& cm, double floor, Index frame) {
  std::vector<Detection> out;
  for (Index k = 0; k < cm.classes; ++k)
    for (Index r = 0; r < cm.height; ++r)
      for (Index a = 0; a < cm.width; ++a) {
        const double v = cm.at(k, r, a);
        if (!(v > floor)) continue;
        bool peak = true;
        for (Index dr = -1; dr <= 1 && peak; ++dr)
          for (Index da = -1; da <= 1; ++da) {
            if (dr == 0 && da == 0) continue;
            const Index rr = r + dr, aa = a + da;
            if (rr < 0 || rr >= cm.height || aa < 0 || aa >= cm.width) continue;
            if (cm.at(k, rr, aa) >= v) {
              peak = false;
              break;
            }
          }
        if (peak) out.push_back({frame, int(k), r, a, std::min(1.0, v)});
      }
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

std::vector<Detection> l_nms(const std::vector<Detection>& candidates, double threshold, const CodecParams& p) {
  std::vector<Detection> kept;
  for (const auto& c : candidates) {
    bool suppressed = false;
    for (const auto& k : kept) {
      if (k.cls == c.cls && ols(c.cls, c.range, c.azimuth, k.range, k.azimuth, p) > threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(c);
  }
  return kept;
}

template <typename T>
ConfMap confmap_frame(const Tensor<T>& maps, Index t) {
  Shape s = maps.shape();
  if (s.size() == 5 && s[0] == 1) s.erase(s.begin());
  if (s.size() != 4 || t < 0 || t >= s[1]) {
    throw ShapeError("cannot take frame " + std::to_string(t) + " of " + to_string(maps.shape()));
  }
  ConfMap cm(s[0], s[2], s[3]);
  const auto d = maps.data();
  const Index plane = s[2] * s[3];
  for (Index k = 0; k < s[0]; ++k)
    for (Index i = 0; i < plane; ++i) cm.values[std::size_t(k * plane + i)] = double(d[(k * s[1] + t) * plane + i]);
  return cm;
}

template ConfMap confmap_frame<float>(const Tensor<float>&, Index);
template ConfMap confmap_frame<double>(const Tensor<double>&, Index);

// ---- line formats ------------------------------------------------------------

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  return out;
}

template <typename Record, typename Parse>
std::vector<Record> read_lines(const std::string& path, std::size_t fields, Parse parse) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open for reading");
  std::vector<Record> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    auto bad = [&](const std::string& why) {
      return DataError(path + ":" + std::to_string(lineno) + ": " + why + ": '" + line + "'");
    };
    if (tok.size() != fields) throw bad("expected " + std::to_string(fields) + " fields");
    try {
      std::vector<double> v;
      for (const auto& t : tok) {
        std::size_t used = 0;
        v.push_back(std::stod(t, &used));
        if (used != t.size()) throw std::invalid_argument(t);
      }
      for (std::size_t i = 0; i < 4; ++i)
        if (v[i] != std::floor(v[i]) || v[i] < 0) throw bad("field " + std::to_string(i + 1) + " must be a non-negative integer");
      if (v[1] >= kNumClasses) throw bad("class id out of range");
      out.push_back(parse(v));
    } catch (const std::logic_error&) {
      throw bad("malformed number");
    }
  }
  return out;
}

}  // namespace

void write_annotations(const std::string& path, const std::vector<Annotation>& annotations) {
  auto out = open_out(path);
  out << "# frame class range azimuth\n";
  for (const auto& a : annotations) out << a.frame << ' ' << a.cls << ' ' << a.range << ' ' << a.azimuth << '\n';
  if (!out) throw DataError(path + ": write failed");
}

std::vector<Annotation> read_annotations(const std::string& path) {
  return read_lines<Annotation>(path, 4, [](const std::vector<double>& v) {
    return Annotation{Index(v[0]), int(v[1]), Index(v[2]), Index(v[3])};
  });
}

void write_detections(const std::string& path, const std::vector<Detection>& detections) {
  auto out = open_out(path);
  out << "# frame class range azimuth confidence\n";
  char buf[32];
  for (const auto& d : detections) {
    std::snprintf(buf, sizeof buf, "%.6f", d.confidence);
    out << d.frame << ' ' << d.cls << ' ' << d.range << ' ' << d.azimuth << ' ' << buf << '\n';
  }
  if (!out) throw DataError(path + ": write failed");
}

std::vector<Detection> read_detections(const std::string& path) {
  return read_lines<Detection>(path, 5, [&](const std::vector<double>& v) {
    if (v[4] < 0.0 || v[4] > 1.0) throw DataError(path + ": confidence " + std::to_string(v[4]) + " outside [0, 1]");
    return Detection{Index(v[0]), int(v[1]), Index(v[2]), Index(v[3]), v[4]};
  });
}

}  // namespace radar
