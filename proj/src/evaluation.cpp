#include "radarformer/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <tuple>

#include "radarformer/error.hpp"

namespace radar {

MatchCounts match_frame(const std::vector<Detection>& dets, const std::vector<Annotation>& gts, double threshold,
                        const CodecParams& p, std::vector<bool>* matched) {
  std::vector<bool> used(gts.size(), false);
  MatchCounts c;
  if (matched) matched->assign(dets.size(), false);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto& d = dets[i];
    double best = -1.0;
    std::size_t best_j = gts.size();
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (used[j] || gts[j].cls != d.cls) continue;
      const double s = ols(d, gts[j], p);
      const bool earlier = best_j < gts.size() && std::tie(gts[j].range, gts[j].azimuth) <
                                                      std::tie(gts[best_j].range, gts[best_j].azimuth);
      if (s > best || (s == best && earlier)) {
        best = s;
        best_j = j;
      }
    }
    if (best_j < gts.size() && best >= threshold - kOlsSlack) {
      used[best_j] = true;
      ++c.tp;
      if (matched) (*matched)[i] = true;
    } else {
      ++c.fp;
    }
  }
  c.fn = Index(gts.size()) - c.tp;
  return c;
}

namespace {

struct Ranked {
  double confidence;
  const std::string* sequence;
  Index frame;
  int cls;
  Index range, azimuth;
  bool tp;
};

bool ranks_before(const Ranked& a, const Ranked& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  return std::tie(*a.sequence, a.frame, a.cls, a.range, a.azimuth) <
         std::tie(*b.sequence, b.frame, b.cls, b.range, b.azimuth);
}

ThresholdResult score_threshold(const std::vector<const EvalFrame*>& frames, double threshold, const CodecParams& p) {
  ThresholdResult out;
  out.threshold = threshold;
  std::vector<Ranked> ranked;
  Index total_gt = 0;
  for (const auto* f : frames) {
    auto dets = f->dets;
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      return std::tie(a.cls, a.range, a.azimuth) < std::tie(b.cls, b.range, b.azimuth);
    });
    std::vector<bool> matched;
    const auto c = match_frame(dets, f->gts, threshold, p, &matched);
    out.counts.tp += c.tp;
    out.counts.fp += c.fp;
    out.counts.fn += c.fn;
    total_gt += Index(f->gts.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
      const auto& d = dets[i];
      ranked.push_back({d.confidence, &f->sequence, f->frame, d.cls, d.range, d.azimuth, matched[i]});
    }
  }
  std::sort(ranked.begin(), ranked.end(), ranks_before);

  if (total_gt == 0) {
    out.ar = 1.0;
    out.ap = ranked.empty() ? 1.0 : 0.0;
    return out;
  }
  Index tp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    tp += ranked[i].tp ? 1 : 0;
    out.precision.push_back(double(tp) / double(i + 1));
    out.recall.push_back(double(tp) / double(total_gt));
  }
  out.ar = out.recall.empty() ? 0.0 : out.recall.back();

  // Interpolated precision: best precision at any recall >= r.
  std::vector<double> envelope = out.precision;
  for (std::size_t i = envelope.size(); i-- > 1;) envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);
  double acc = 0.0;
  std::size_t idx = 0;
  for (int level = 0; level <= 100; ++level) {
    const double r = level / 100.0;
    while (idx < out.recall.size() && out.recall[idx] < r - 1e-12) ++idx;
    if (idx < out.recall.size()) acc += envelope[idx];
  }
  out.ap = acc / 101.0;
  return out;
}

Score score_frames(const std::vector<const EvalFrame*>& frames, const CodecParams& p,
                   const std::vector<double>& thresholds, std::vector<ThresholdResult>* detail) {
  Score s;
  s.frames = Index(frames.size());
  for (double t : thresholds) {
    auto r = score_threshold(frames, t, p);
    s.ap += r.ap;
    s.ar += r.ar;
    if (detail) detail->push_back(std::move(r));
  }
  s.ap /= double(thresholds.size());
  s.ar /= double(thresholds.size());
  return s;
}

}  // namespace

EvalResult evaluate(const std::vector<EvalFrame>& frames, const CodecParams& p, const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw ConfigError("evaluation needs at least one OLS threshold");
  std::vector<const EvalFrame*> all;
  std::map<std::string, std::vector<const EvalFrame*>> by_scenario;
  for (const auto& f : frames) {
    all.push_back(&f);
    by_scenario[f.scenario].push_back(&f);
  }
  EvalResult r;
  const auto total = score_frames(all, p, thresholds, &r.per_threshold);
  r.ap = total.ap;
  r.ar = total.ar;
  r.frames = total.frames;
  for (const auto& [tag, list] : by_scenario) r.per_scenario[tag] = score_frames(list, p, thresholds, nullptr);
  return r;
}

std::vector<EvalFrame> align_frames(const std::string& sequence, const std::string& scenario, Index frame_count,
                                    const std::vector<Annotation>& gts, const std::vector<Detection>& dets) {
  std::vector<EvalFrame> frames(static_cast<std::size_t>(frame_count));
  for (Index t = 0; t < frame_count; ++t) frames[std::size_t(t)] = {sequence, t, scenario, {}, {}};
  for (const auto& g : gts) {
    if (g.frame < 0 || g.frame >= frame_count) {
      throw DataError(sequence + ": annotation frame " + std::to_string(g.frame) + " outside 0.." +
                      std::to_string(frame_count - 1));
    }
    frames[std::size_t(g.frame)].gts.push_back(g);
  }
  for (const auto& d : dets) {
    if (d.frame < 0 || d.frame >= frame_count) {
      throw DataError(sequence + ": detection frame " + std::to_string(d.frame) + " has no ground-truth frame (0.." +
                      std::to_string(frame_count - 1) + ")");
    }
    frames[std::size_t(d.frame)].dets.push_back(d);
  }
  return frames;
}

std::string results_table(const EvalResult& r) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-8s%10s%10s%8s\n", "", "AP", "AR", "frames");
  out += buf;
  auto row = [&](const std::string& name, const Score& s, bool present) {
    if (present) {
      std::snprintf(buf, sizeof buf, "%-8s%10.4f%10.4f%8lld\n", name.c_str(), s.ap, s.ar, static_cast<long long>(s.frames));
    } else {
      std::snprintf(buf, sizeof buf, "%-8s%10s%10s%8d\n", name.c_str(), "-", "-", 0);
    }
    out += buf;
  };
  row("Total", {r.ap, r.ar, r.frames}, true);
  for (const auto& tag : kScenarios) {
    const auto it = r.per_scenario.find(tag);
    row(tag, it == r.per_scenario.end() ? Score{} : it->second, it != r.per_scenario.end());
  }
  return out;
}

KvConfig results_kv(const EvalResult& r) {
  KvConfig kv;
  kv.set("total.ap", r.ap);
  kv.set("total.ar", r.ar);
  kv.set("total.frames", std::int64_t{r.frames});
  for (const auto& [tag, s] : r.per_scenario) {
    kv.set(tag + ".ap", s.ap);
    kv.set(tag + ".ar", s.ar);
    kv.set(tag + ".frames", std::int64_t{s.frames});
  }
  for (const auto& t : r.per_threshold) {
    char key[32];
    std::snprintf(key, sizeof key, "ols%.2f", t.threshold);
    kv.set(std::string(key) + ".ap", t.ap);
    kv.set(std::string(key) + ".ar", t.ar);
    kv.set(std::string(key) + ".tp", std::int64_t{t.counts.tp});
    kv.set(std::string(key) + ".fp", std::int64_t{t.counts.fp});
    kv.set(std::string(key) + ".fn", std::int64_t{t.counts.fn});
  }
  return kv;
}

}  // namespace radar
