#include "ausm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ausm/error.hpp"

namespace ausm {

namespace {

void check_pair(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || a.shape() != b.shape()) {
    throw DimensionError("mask shapes differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

std::vector<unsigned char> boundary(const Tensor& m) {
  const std::size_t h = m.dim(0), w = m.dim(1);
  std::vector<unsigned char> out(h * w, 0);
  auto fg = [&](std::size_t y, std::size_t x) { return m[y * w + x] > 0.5f; };
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      if (!fg(y, x)) continue;
      const bool edge = (y > 0 && !fg(y - 1, x)) || (y + 1 < h && !fg(y + 1, x)) || (x > 0 && !fg(y, x - 1)) ||
                        (x + 1 < w && !fg(y, x + 1));
      out[y * w + x] = edge ? 1 : 0;
    }
  return out;
}

// Fraction of `from` boundary pixels that have a `to` boundary pixel within tol.
double matched_fraction(const std::vector<unsigned char>& from, const std::vector<unsigned char>& to, std::size_t h,
                        std::size_t w, std::size_t tol, std::size_t& count) {
  count = 0;
  std::size_t hit = 0;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      if (!from[y * w + x]) continue;
      ++count;
      const std::size_t y0 = y >= tol ? y - tol : 0, y1 = std::min(h - 1, y + tol);
      const std::size_t x0 = x >= tol ? x - tol : 0, x1 = std::min(w - 1, x + tol);
      bool found = false;
      for (std::size_t yy = y0; yy <= y1 && !found; ++yy)
        for (std::size_t xx = x0; xx <= x1 && !found; ++xx) found = to[yy * w + xx] != 0;
      hit += found ? 1 : 0;
    }
  return count ? static_cast<double>(hit) / static_cast<double>(count) : 0.0;
}

}  // namespace

double region_j(const Tensor& pred, const Tensor& gt) {
  check_pair(pred, gt);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] > 0.5f, g = gt[i] > 0.5f;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double boundary_f(const Tensor& pred, const Tensor& gt, std::size_t tol_px) {
  check_pair(pred, gt);
  const std::size_t h = pred.dim(0), w = pred.dim(1);
  const auto bp = boundary(pred), bg = boundary(gt);
  std::size_t np = 0, ng = 0;
  const double precision = matched_fraction(bp, bg, h, w, tol_px, np);
  const double recall = matched_fraction(bg, bp, h, w, tol_px, ng);
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::size_t default_boundary_tolerance(std::size_t height, std::size_t width) {
  const double diag = std::hypot(static_cast<double>(height), static_cast<double>(width));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.0075 * diag)));
}

JfSummary jf_and_g(std::span<const double> J, std::span<const double> F) {
  if (J.size() != F.size()) throw DimensionError("J and F lists differ in length");
  JfSummary s;
  if (J.empty()) return s;
  const double n = static_cast<double>(J.size());
  s.j_mean = std::accumulate(J.begin(), J.end(), 0.0) / n;
  s.f_mean = std::accumulate(F.begin(), F.end(), 0.0) / n;
  s.jf = (s.j_mean + s.f_mean) / 2.0;
  double g = 0.0;
  for (std::size_t i = 0; i < J.size(); ++i) g += (J[i] + F[i]) / 2.0;
  s.g = g / n;
  return s;
}

double spatio_temporal_iou(const SpatioTemporalTrack& a, const SpatioTemporalTrack& b) {
  if (a.masks.size() != b.masks.size()) throw DimensionError("tracks cover different frame counts");
  std::size_t inter = 0, uni = 0;
  for (std::size_t t = 0; t < a.masks.size(); ++t) {
    check_pair(a.masks[t], b.masks[t]);
    for (std::size_t i = 0; i < a.masks[t].size(); ++i) {
      const bool p = a.masks[t][i] > 0.5f, g = b.masks[t][i] > 0.5f;
      inter += (p && g) ? 1 : 0;
      uni += (p || g) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

double track_ap(std::span<const SpatioTemporalTrack> preds, std::span<const SpatioTemporalTrack> gts,
                std::span<const double> thresholds) {
  if (thresholds.empty()) throw ConfigError("track_ap needs at least one IoU threshold");
  std::vector<std::size_t> classes;
  for (const auto& g : gts) classes.push_back(g.cls);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.empty()) return preds.empty() ? 1.0 : 0.0;

  double total = 0.0;
  for (std::size_t c : classes) {
    std::vector<std::size_t> p_idx, g_idx;
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (preds[i].cls == c) p_idx.push_back(i);
    for (std::size_t i = 0; i < gts.size(); ++i)
      if (gts[i].cls == c) g_idx.push_back(i);
    std::stable_sort(p_idx.begin(), p_idx.end(),
                     [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
    std::vector<double> iou(p_idx.size() * g_idx.size());
    for (std::size_t a = 0; a < p_idx.size(); ++a)
      for (std::size_t b = 0; b < g_idx.size(); ++b)
        iou[a * g_idx.size() + b] = spatio_temporal_iou(preds[p_idx[a]], gts[g_idx[b]]);

    double class_ap = 0.0;
    for (double thr : thresholds) {
      std::vector<bool> taken(g_idx.size(), false);
      std::vector<double> recall, precision;
      std::size_t tp = 0;
      for (std::size_t a = 0; a < p_idx.size(); ++a) {
        double best = -1.0;
        std::size_t best_b = 0;
        for (std::size_t b = 0; b < g_idx.size(); ++b)
          if (!taken[b] && iou[a * g_idx.size() + b] > best) {
            best = iou[a * g_idx.size() + b];
            best_b = b;
          }
        if (best >= thr - 1e-12) {
          taken[best_b] = true;
          ++tp;
        }
        recall.push_back(static_cast<double>(tp) / static_cast<double>(g_idx.size()));
        precision.push_back(static_cast<double>(tp) / static_cast<double>(a + 1));
      }
      std::vector<double> mrec{0.0}, mpre{0.0};
      mrec.insert(mrec.end(), recall.begin(), recall.end());
      mpre.insert(mpre.end(), precision.begin(), precision.end());
      mrec.push_back(1.0);
      mpre.push_back(0.0);
      for (std::size_t i = mpre.size() - 1; i-- > 0;) mpre[i] = std::max(mpre[i], mpre[i + 1]);
      double ap = 0.0;
      for (std::size_t i = 0; i + 1 < mrec.size(); ++i) ap += (mrec[i + 1] - mrec[i]) * mpre[i + 1];
      class_ap += ap;
    }
    total += class_ap / static_cast<double>(thresholds.size());
  }
  return total / static_cast<double>(classes.size());
}

double track_ap(std::span<const SpatioTemporalTrack> preds, std::span<const SpatioTemporalTrack> gts) {
  const std::vector<double> t = default_iou_thresholds();
  return track_ap(preds, gts, t);
}

namespace {

void check_sets(const PredictionSet& pred, const GroundTruthSet& gt) {
  if (pred.video_id != gt.video_id) {
    throw InputError("prediction is for video '" + pred.video_id + "', ground truth is '" + gt.video_id + "'");
  }
  if (pred.T != gt.T || pred.height != gt.height || pred.width != gt.width) {
    throw InputError("prediction and ground truth differ in frame count or size");
  }
}

Tensor gt_mask(const GroundTruthTrack& tr, std::size_t t, std::size_t h, std::size_t w) {
  return tr.masks[t] ? *tr.masks[t] : Tensor({h, w});
}

}  // namespace

VosReport evaluate_vos(const PredictionSet& pred, const GroundTruthSet& gt) {
  check_sets(pred, gt);
  VosReport r;
  const std::size_t tol = default_boundary_tolerance(gt.height, gt.width);
  for (std::size_t i = 0; i < gt.tracks.size(); ++i) {
    const PredictedTrack* match = nullptr;
    for (const auto& p : pred.tracks)
      if (p.prompt_index && *p.prompt_index == i) match = &p;
    double j = 0.0, f = 0.0;
    const Tensor empty({gt.height, gt.width});
    for (std::size_t t = 0; t < gt.T; ++t) {
      const Tensor g = gt_mask(gt.tracks[i], t, gt.height, gt.width);
      const Tensor& p = match ? match->masks[t] : empty;
      j += region_j(p, g);
      f += boundary_f(p, g, tol);
    }
    r.J.push_back(gt.T ? j / static_cast<double>(gt.T) : 1.0);
    r.F.push_back(gt.T ? f / static_cast<double>(gt.T) : 1.0);
  }
  r.summary = jf_and_g(r.J, r.F);
  return r;
}

double evaluate_track_ap(const PredictionSet& pred, const GroundTruthSet& gt) {
  check_sets(pred, gt);
  std::vector<SpatioTemporalTrack> p, g;
  for (const auto& t : pred.tracks) p.push_back({t.cls, t.score, t.masks});
  for (const auto& t : gt.tracks) {
    SpatioTemporalTrack s{t.cls, 1.0, {}};
    for (std::size_t k = 0; k < gt.T; ++k) s.masks.push_back(gt_mask(t, k, gt.height, gt.width));
    g.push_back(std::move(s));
  }
  return track_ap(p, g);
}

}  // namespace ausm
