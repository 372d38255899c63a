#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ausm/decoders.hpp"
#include "ausm/history_marker.hpp"
#include "ausm/hungarian.hpp"
#include "ausm/identity_registry.hpp"
#include "ausm/random.hpp"
#include "ausm/tensor.hpp"

namespace ausm {

/// One ground-truth instance over a clip. masks[t] is the hard mask of frame
/// t + 1, or nullopt when the instance is not visible there.
struct GroundTruthTrack {
  std::size_t instance_id = 0;
  std::size_t cls = 1;  // 1..K
  std::vector<std::optional<Tensor>> masks;

  std::size_t frames() const noexcept { return masks.size(); }
  /// 1-based frame index.
  bool visible(std::size_t t) const { return t >= 1 && t <= masks.size() && masks[t - 1].has_value(); }
  std::vector<std::size_t> visible_frames() const;
};

/// Draws each instance's switch frame uniformly from the frames where it is
/// visible. Returns 1-based frame indices.
std::vector<std::size_t> sample_timesteps(std::span<const GroundTruthTrack> tracks, std::size_t T, Rng& rng);

/// Per-instance, per-frame targets of a teacher-forced clip. With switch
/// frame s_i for instance i and 1-based frame t:
///   detection target  iff t <= s_i
///   tracking target   iff t >  s_i
///   in memory M_t     iff t >= s_i
/// A_t holds the ID rows of the instances in M_t, in instance order.
class TeacherForcingPlan {
 public:
  TeacherForcingPlan() = default;
  TeacherForcingPlan(std::vector<GroundTruthTrack> tracks, std::vector<std::size_t> t_sample,
                     std::vector<std::size_t> pool_index, Tensor ids, std::size_t T, std::size_t H, std::size_t W);

  std::size_t T() const noexcept { return T_; }
  std::size_t H() const noexcept { return H_; }
  std::size_t W() const noexcept { return W_; }
  std::size_t instances() const noexcept { return tracks_.size(); }
  const std::vector<GroundTruthTrack>& tracks() const noexcept { return tracks_; }
  const std::vector<std::size_t>& t_sample() const noexcept { return t_sample_; }
  const std::vector<std::size_t>& pool_index() const noexcept { return pool_index_; }
  const Tensor& ids() const noexcept { return ids_; }

  bool is_detection_target(std::size_t instance, std::size_t t) const { return t <= t_sample_.at(instance); }
  bool is_tracking_target(std::size_t instance, std::size_t t) const { return t > t_sample_.at(instance); }
  bool in_memory(std::size_t instance, std::size_t t) const { return t >= t_sample_.at(instance); }

  /// Instances that are detection targets at frame t and visible there.
  std::vector<std::size_t> detection_targets(std::size_t t) const;
  /// Instances whose ID rows lead the prediction at frame t (= members of M_{t-1}).
  std::vector<std::size_t> tracking_instances(std::size_t t) const;
  /// Members of M_t, t in [0, T].
  std::vector<std::size_t> memory_instances(std::size_t t) const;

  /// A_t as [|M_t|, D].
  Tensor allocation(std::size_t t) const;
  /// M_t on the feature grid; invisible members contribute empty masks.
  MaskStack memory_masks(std::size_t t) const;

  /// Roles and switch frames as JSON (masks are not included).
  std::string to_json() const;

 private:
  std::vector<GroundTruthTrack> tracks_;
  std::vector<std::size_t> t_sample_;
  std::vector<std::size_t> pool_index_;
  Tensor ids_;
  std::size_t T_ = 0, H_ = 0, W_ = 0;
};

/// Samples one ID row per instance from the registry (in instance order) and
/// builds the plan. Masks must already be on the feature grid.
TeacherForcingPlan build_plan(std::vector<GroundTruthTrack> tracks, std::vector<std::size_t> t_sample,
                              IdentityRegistry& registry, std::size_t T);

struct LossWeights {
  double cls = 2.0;
  double bce = 5.0;
  double dice = 5.0;
};

struct FrameLoss {
  double tracking = 0.0;
  double detection = 0.0;
};

struct LossReport {
  double total = 0.0;
  std::vector<FrameLoss> frames;
};

namespace loss {
/// Mean binary cross-entropy of mask logits against a 0/1 target.
double mask_bce(std::span<const float> logits, std::span<const float> target);
/// 1 - (2 sum(p t) + 1) / (sum p + sum t + 1), p = sigmoid(logits).
double mask_dice(std::span<const float> logits, std::span<const float> target);
/// -log softmax(logits)[target].
double cross_entropy(std::span<const float> logits, std::size_t target);
}  // namespace loss

/// Forward-only loss. Tracking rows use the plan's fixed pairing; detection
/// rows are matched to visible detection targets with the Hungarian
/// algorithm on cls * (-p_class) + bce * BCE + dice * Dice. Unmatched
/// detection queries and invisible tracking targets score against background.
LossReport score_losses(std::span<const FramePrediction> predictions, const TeacherForcingPlan& plan,
                        const LossWeights& weights = {});

}  // namespace ausm
