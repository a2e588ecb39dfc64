#pragma once
// AP/AR over the OLS threshold sweep 0.50, 0.55, ..., 0.90.

#include <array>
#include <map>
#include <string>
#include <vector>

#include "radarformer/confmap.hpp"
#include "radarformer/kv_config.hpp"

namespace radar {

inline constexpr std::array<double, 9> kOlsThresholds{0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90};
// Slack on the OLS >= threshold test absorbing rounding in exp().
inline constexpr double kOlsSlack = 1e-12;
inline const std::array<std::string, 4> kScenarios{"PL", "CR", "CS", "HW"};

struct MatchCounts {
  Index tp = 0, fp = 0, fn = 0;
};

// Greedy one-to-one matching. `dets` must be sorted by descending
// confidence; each detection takes the unmatched same-class ground truth
// with the highest OLS (lowest (range, azimuth) on ties) when OLS >= threshold.
// `matched` (optional) receives one flag per detection.
MatchCounts match_frame(const std::vector<Detection>& dets, const std::vector<Annotation>& gts, double threshold,
                        const CodecParams& p = {}, std::vector<bool>* matched = nullptr);

struct EvalFrame {
  std::string sequence;
  Index frame = 0;
  std::string scenario;
  std::vector<Detection> dets;
  std::vector<Annotation> gts;
};

struct ThresholdResult {
  double threshold = 0.0;
  double ap = 0.0, ar = 0.0;
  MatchCounts counts;
  std::vector<double> precision, recall;  // along the confidence ranking
};

struct Score {
  double ap = 0.0, ar = 0.0;
  Index frames = 0;
};

struct EvalResult {
  double ap = 0.0, ar = 0.0;  // means over the 9 thresholds
  Index frames = 0;
  std::vector<ThresholdResult> per_threshold;
  std::map<std::string, Score> per_scenario;  // only scenarios that occur
};

// AP per threshold is 101-point interpolated precision over recall levels
// 0, 0.01, ..., 1; AR is the recall after all detections. Detections are
// pooled across frames and ranked by confidence, ties broken by (sequence,
// frame, class, range, azimuth). With no ground truth, AR = 1 and AP is 1
// only when there are no detections either.
EvalResult evaluate(const std::vector<EvalFrame>& frames, const CodecParams& p = {},
                    const std::vector<double>& thresholds = {kOlsThresholds.begin(), kOlsThresholds.end()});

// Groups per-sequence detections and ground truth into frames. Every
// detection must reference a frame below the sequence's frame count.
std::vector<EvalFrame> align_frames(const std::string& sequence, const std::string& scenario, Index frame_count,
                                    const std::vector<Annotation>& gts, const std::vector<Detection>& dets);

// "Total / PL / CR / CS / HW" x "AP / AR" table.
std::string results_table(const EvalResult& r);
KvConfig results_kv(const EvalResult& r);

}  // namespace radar
