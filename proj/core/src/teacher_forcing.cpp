#include "ausm/teacher_forcing.hpp"

#include <cmath>
#include <json.hpp>

#include "ausm/error.hpp"
#include "ausm/ops.hpp"

namespace ausm {

std::vector<std::size_t> GroundTruthTrack::visible_frames() const {
  std::vector<std::size_t> out;
  for (std::size_t t = 1; t <= masks.size(); ++t)
    if (masks[t - 1]) out.push_back(t);
  return out;
}

std::vector<std::size_t> sample_timesteps(std::span<const GroundTruthTrack> tracks, std::size_t T, Rng& rng) {
  if (T == 0) throw InputError("sample_timesteps needs T >= 1");
  std::vector<std::size_t> out;
  out.reserve(tracks.size());
  for (const GroundTruthTrack& tr : tracks) {
    if (tr.frames() != T) {
      throw InputError("track " + std::to_string(tr.instance_id) + " covers " + std::to_string(tr.frames()) +
                       " frames, clip has " + std::to_string(T));
    }
    const std::vector<std::size_t> support = tr.visible_frames();
    if (support.empty()) throw InputError("track " + std::to_string(tr.instance_id) + " is never visible");
    out.push_back(support[rng.below(support.size())]);
  }
  return out;
}

TeacherForcingPlan::TeacherForcingPlan(std::vector<GroundTruthTrack> tracks, std::vector<std::size_t> t_sample,
                                       std::vector<std::size_t> pool_index, Tensor ids, std::size_t T, std::size_t H,
                                       std::size_t W)
    : tracks_(std::move(tracks)),
      t_sample_(std::move(t_sample)),
      pool_index_(std::move(pool_index)),
      ids_(std::move(ids)),
      T_(T),
      H_(H),
      W_(W) {
  if (t_sample_.size() != tracks_.size() || pool_index_.size() != tracks_.size() || ids_.rank() != 2 ||
      ids_.dim(0) != tracks_.size()) {
    throw DimensionError("plan: per-instance arrays disagree in length");
  }
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    if (tracks_[i].frames() != T_) throw InputError("plan: track length differs from clip length");
    if (t_sample_[i] < 1 || t_sample_[i] > T_) throw InputError("plan: switch frame outside [1, T]");
    for (const auto& m : tracks_[i].masks) {
      if (m && m->shape() != Shape{H_, W_}) throw DimensionError("plan: mask is not on the feature grid");
    }
  }
}

std::vector<std::size_t> TeacherForcingPlan::detection_targets(std::size_t t) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tracks_.size(); ++i)
    if (is_detection_target(i, t) && tracks_[i].visible(t)) out.push_back(i);
  return out;
}

std::vector<std::size_t> TeacherForcingPlan::tracking_instances(std::size_t t) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tracks_.size(); ++i)
    if (is_tracking_target(i, t)) out.push_back(i);
  return out;
}

std::vector<std::size_t> TeacherForcingPlan::memory_instances(std::size_t t) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tracks_.size(); ++i)
    if (in_memory(i, t)) out.push_back(i);
  return out;
}

Tensor TeacherForcingPlan::allocation(std::size_t t) const {
  const std::vector<std::size_t> rows = memory_instances(t);
  Tensor out({rows.size(), ids_.dim(1)});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = ids_.slice(rows[r]);
    std::copy(src.begin(), src.end(), out.slice(r).begin());
  }
  return out;
}

MaskStack TeacherForcingPlan::memory_masks(std::size_t t) const {
  const std::vector<std::size_t> rows = memory_instances(t);
  Tensor out({rows.size(), H_, W_});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (t >= 1 && tracks_[rows[r]].visible(t)) {
      const Tensor& m = *tracks_[rows[r]].masks[t - 1];
      std::copy(m.data().begin(), m.data().end(), out.slice(r).begin());
    }
  }
  return MaskStack(std::move(out), MaskKind::Hard);
}

std::string TeacherForcingPlan::to_json() const {
  nlohmann::json instances = nlohmann::json::array();
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    instances.push_back({{"instance_id", tracks_[i].instance_id},
                         {"class", tracks_[i].cls},
                         {"t_sample", t_sample_[i]},
                         {"pool_index", pool_index_[i]},
                         {"visible", tracks_[i].visible_frames()}});
  }
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t t = 1; t <= T_; ++t) {
    std::vector<std::size_t> det;
    for (std::size_t i = 0; i < tracks_.size(); ++i)
      if (is_detection_target(i, t)) det.push_back(i);
    frames.push_back({{"t", t}, {"det", det}, {"trk", tracking_instances(t)}, {"memory", memory_instances(t)}});
  }
  return nlohmann::json{{"T", T_}, {"H", H_}, {"W", W_}, {"instances", instances}, {"frames", frames}}.dump(2);
}

TeacherForcingPlan build_plan(std::vector<GroundTruthTrack> tracks, std::vector<std::size_t> t_sample,
                              IdentityRegistry& registry, std::size_t T) {
  if (tracks.size() > registry.free_indices().size()) {
    throw PoolExhaustedError(tracks.size(), registry.free_indices().size());
  }
  const std::size_t H = registry.masks().H(), W = registry.masks().W();
  const std::vector<std::size_t> pool = registry.sample_indices(tracks.size());
  Tensor ids({tracks.size(), registry.pool().dim(1)});
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto row = registry.pool().slice(pool[i]);
    std::copy(row.begin(), row.end(), ids.slice(i).begin());
  }
  return TeacherForcingPlan(std::move(tracks), std::move(t_sample), pool, std::move(ids), T, H, W);
}

namespace loss {

double mask_bce(std::span<const float> logits, std::span<const float> target) {
  if (logits.size() != target.size() || logits.empty()) throw DimensionError("mask_bce: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits[i], y = target[i];
    sum += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
  }
  return sum / static_cast<double>(logits.size());
}

double mask_dice(std::span<const float> logits, std::span<const float> target) {
  if (logits.size() != target.size()) throw DimensionError("mask_dice: size mismatch");
  double inter = 0.0, ps = 0.0, ts = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = sigmoid(logits[i]);
    inter += p * target[i];
    ps += p;
    ts += target[i];
  }
  return 1.0 - (2.0 * inter + 1.0) / (ps + ts + 1.0);
}

double cross_entropy(std::span<const float> logits, std::size_t target) {
  if (target >= logits.size()) throw DimensionError("cross_entropy: target class out of range");
  double mx = logits[0];
  for (float v : logits) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  for (float v : logits) sum += std::exp(v - mx);
  return -(static_cast<double>(logits[target]) - mx - std::log(sum));
}

}  // namespace loss

namespace {

double class_probability(std::span<const float> logits, std::size_t target) {
  return std::exp(-loss::cross_entropy(logits, target));
}

}  // namespace

LossReport score_losses(std::span<const FramePrediction> predictions, const TeacherForcingPlan& plan,
                        const LossWeights& lw) {
  if (predictions.size() != plan.T()) {
    throw ContractError("score_losses: " + std::to_string(predictions.size()) + " predictions for a " +
                        std::to_string(plan.T()) + "-frame plan");
  }
  LossReport report;
  for (std::size_t t = 1; t <= plan.T(); ++t) {
    const FramePrediction& pred = predictions[t - 1];
    const std::size_t bg = pred.background_index();
    const std::size_t HW = pred.mask_logits.size() / pred.num_queries();
    const std::vector<std::size_t> trk = plan.tracking_instances(t);
    if (pred.num_tracking != trk.size()) {
      throw ContractError("score_losses: frame " + std::to_string(t) + " has " + std::to_string(pred.num_tracking) +
                          " tracking rows but the plan allocates " + std::to_string(trk.size()));
    }
    FrameLoss fl;
    auto matched_cost = [&](std::size_t row, const GroundTruthTrack& gt) {
      const Tensor& m = *gt.masks[t - 1];
      return lw.cls * loss::cross_entropy(pred.class_logits.slice(row), gt.cls - 1) +
             lw.bce * loss::mask_bce(pred.mask_logits.slice(row), m.data()) +
             lw.dice * loss::mask_dice(pred.mask_logits.slice(row), m.data());
    };
    for (std::size_t r = 0; r < trk.size(); ++r) {
      const GroundTruthTrack& gt = plan.tracks()[trk[r]];
      fl.tracking += gt.visible(t) ? matched_cost(r, gt) : lw.cls * loss::cross_entropy(pred.class_logits.slice(r), bg);
    }

    const std::vector<std::size_t> det = plan.detection_targets(t);
    const std::size_t nq = pred.num_detection();
    std::vector<double> cost(nq * det.size());
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t row = pred.num_tracking + q;
      for (std::size_t g = 0; g < det.size(); ++g) {
        const GroundTruthTrack& gt = plan.tracks()[det[g]];
        const Tensor& m = *gt.masks[t - 1];
        cost[q * det.size() + g] = -lw.cls * class_probability(pred.class_logits.slice(row), gt.cls - 1) +
                                   lw.bce * loss::mask_bce(pred.mask_logits.slice(row), m.data()) +
                                   lw.dice * loss::mask_dice(pred.mask_logits.slice(row), m.data());
      }
    }
    const Assignment match = hungarian(cost, nq, det.size());
    for (const auto& [q, g] : match.pairs) fl.detection += matched_cost(pred.num_tracking + q, plan.tracks()[det[g]]);
    for (std::size_t q : match.unmatched_queries) {
      fl.detection += lw.cls * loss::cross_entropy(pred.class_logits.slice(pred.num_tracking + q), bg);
    }
    (void)HW;
    report.total += fl.tracking + fl.detection;
    report.frames.push_back(fl);
  }
  return report;
}

}  // namespace ausm
