#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ausm/backbone.hpp"
#include "ausm/decoders.hpp"
#include "ausm/history_compressor.hpp"
#include "ausm/history_marker.hpp"
#include "ausm/identity_registry.hpp"
#include "ausm/io.hpp"
#include "ausm/teacher_forcing.hpp"
#include "ausm/weights.hpp"

namespace ausm {

struct EngineConfig {
  float fg_threshold = 0.5f;
  std::optional<std::size_t> top_k;
  float eps = kMarkerEps;
  MaskKind mask_kind = MaskKind::Hard;  // masks fed back to the marker
  ExhaustionPolicy exhaustion = ExhaustionPolicy::DropLowest;
  std::size_t scan_chunk = kScanChunk;
  std::uint64_t seed = 0;  // registry sampling
  bool admit_detections = true;
  /// Tracking mask logits are replaced by the regions decoded back from the
  /// marked input, and no detections are admitted. Used to check the
  /// bookkeeping independently of the learned heads.
  bool oracle_marks = false;
  LossWeights loss;

  void validate() const;
  std::string to_json() const;
  static EngineConfig from_json(const std::string& text);
};

/// Magnitude of the logits written for oracle-echoed masks.
inline constexpr float kOracleLogit = 10.0f;

struct StepOutput {
  FramePrediction prediction;
  std::vector<std::size_t> tracking_ids;  // pool index of each tracking row
  MaskStack tracking_masks;               // fed-back masks of the tracking rows
  std::vector<Detection> detections;      // after filter_fg, before admission
  AdmitResult admission;
};

/// Streaming inference state for one video. Not thread-safe; one owner.
class StreamSession {
 public:
  static StreamSession start(std::shared_ptr<const WeightBundle> weights, std::size_t H, std::size_t W,
                             const EngineConfig& config, const std::optional<MaskStack>& prompt = std::nullopt);

  StepOutput step(const RawFrame& frame);

  /// Replaces the masks of the leading allocations before the next step.
  void override_memory(const MaskStack& leading);

  std::size_t t() const noexcept { return t_; }
  std::size_t H() const noexcept { return H_; }
  std::size_t W() const noexcept { return W_; }
  const EngineConfig& config() const noexcept { return config_; }
  const IdentityRegistry& registry() const noexcept { return registry_; }
  const CompressorState& compressor_state() const noexcept { return state_; }
  const FrameFeatureMap& prev_features() const noexcept { return prev_; }

  /// Complete session (restorable bit-exactly).
  Bytes serialize() const;
  static StreamSession restore(std::shared_ptr<const WeightBundle> weights, std::span<const std::byte> bytes);

  /// Byte length of the parts whose size never depends on t: the compressor
  /// state and X_{t-1}.
  std::size_t fixed_state_bytes() const;
  /// Byte length of the allocation list and its masks (bounded by N_id).
  std::size_t allocation_bytes() const;

 private:
  std::shared_ptr<const WeightBundle> weights_;
  EngineConfig config_;
  std::size_t H_ = 0, W_ = 0, t_ = 0;
  IdentityRegistry registry_;
  CompressorState state_;
  FrameFeatureMap prev_;
};

struct TeacherForcedResult {
  std::vector<FramePrediction> predictions;
  LossReport losses;
};

/// Frame-by-frame form with A_{t-1}, M_{t-1} taken from the plan.
TeacherForcedResult run_recurrent_teacher_forced(std::span<const RawFrame> frames, const TeacherForcingPlan& plan,
                                                 const WeightBundle& weights, const EngineConfig& config = {});

/// Whole-clip form: all marked inputs at once, one compressor pass over the
/// clip, then frame-parallel decoding.
TeacherForcedResult run_parallel(std::span<const RawFrame> frames, const TeacherForcingPlan& plan,
                                 const WeightBundle& weights, const EngineConfig& config = {});

struct Deviation {
  std::string path;
  double max_abs = 0.0;
};

/// Per-tensor max |a - b|, worst first. Throws DimensionError on shape mismatch.
std::vector<Deviation> compare_results(const TeacherForcedResult& a, const TeacherForcedResult& b);

/// One emitted object over the recorded frames. Masks are the mask logits
/// repeated over each patch and thresholded at 0.
struct TrackRecord {
  std::size_t pool_index = 0;
  std::optional<std::size_t> prompt_index;
  std::vector<Tensor> masks;  // [height, width] per recorded frame, 0/1
  std::vector<std::optional<float>> scores;
  std::vector<std::optional<std::size_t>> classes;  // 0-based foreground class

  /// Mean score over frames where the object was present.
  float mean_score() const;
  /// Most frequent class (lowest on ties), 0 when never present.
  std::size_t majority_class() const;
};

struct InferenceResult {
  std::size_t frames = 0;  // recorded frames
  std::size_t height = 0, width = 0;
  std::vector<TrackRecord> tracks;
  std::vector<double> frame_seconds;  // every processed frame
  std::size_t dropped = 0;
};

struct InferenceOptions {
  std::optional<MaskStack> prompt;  // feature grid
  /// With config.oracle_marks: masks of the prompted objects for frames
  /// 1..T (feature grid), used as M_{t-1}.
  std::vector<MaskStack> oracle_memory;
  std::size_t keep_begin = 0;  // first frame (0-based) to record
};

InferenceResult run_inference(std::shared_ptr<const WeightBundle> weights, std::span<const RawFrame> frames,
                              const EngineConfig& config, const InferenceOptions& options = {});

}  // namespace ausm
