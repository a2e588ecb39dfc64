#pragma once
// Sliding-window inference: windows of T frames advance by the test stride,
// overlapping ConfMaps are fused by their per-pixel mean, and each fused
// frame is decoded with peak detection and L-NMS.

#include <functional>
#include <string>
#include <vector>

#include "radarformer/confmap.hpp"
#include "radarformer/dataset.hpp"
#include "radarformer/model.hpp"

namespace radar {

// Window start frames covering [0, frames): 0, stride, 2 * stride, ... plus
// a final window ending at the last frame when the stride leaves a gap.
// Throws ConfigError when frames < window or stride is out of range.
std::vector<Index> window_starts(Index frames, Index window, Index stride, bool cover_tail = true);

// Model input [1, 2, window, C, H, W] for frames [start, start + window).
template <typename T>
Tensor<T> window_cube(const Sequence& seq, Index start, Index window);
// Encoded ConfMaps [1, K, window, H, W] of the sequence annotations.
template <typename T>
Tensor<T> window_targets(const Sequence& seq, Index start, Index window, const CodecParams& p);

// Per-frame ConfMaps [K, frames, H, W] from window predictions
// ([1, K, window, H, W] or [K, window, H, W]) averaged over overlaps.
template <typename T>
Tensor<double> fuse_windows(Index frames, Index window, Index stride,
                            const std::function<Tensor<T>(Index start)>& predict);

template <typename T>
Tensor<double> infer_sequence(const Model<T>& model, const Sequence& seq, Index stride);

// Detections of every frame, sorted by (frame, descending confidence).
std::vector<Detection> decode_sequence(const Tensor<double>& maps, const CodecParams& p);

// Binary PGM of one class plane with intensity round(255 * value), values
// clamped to [0, 1].
void write_pgm(const std::string& path, const ConfMap& cm, Index cls);
// Binary PPM composite with pedestrian, cyclist and car in red, green and
// blue.
void write_ppm(const std::string& path, const ConfMap& cm);
// Writes <dir>/<seq>_fFFFF_<class>.pgm and <dir>/<seq>_fFFFF.ppm.
void export_heatmaps(const std::string& dir, const std::string& seq, const Tensor<double>& maps);

}  // namespace radar
