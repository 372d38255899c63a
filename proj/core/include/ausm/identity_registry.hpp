#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ausm/decoders.hpp"
#include "ausm/history_marker.hpp"
#include "ausm/io.hpp"
#include "ausm/random.hpp"
#include "ausm/tensor.hpp"

namespace ausm {

/// A foreground detection that survived filter_fg.
struct Detection {
  std::size_t query_row = 0;  // row within the detection half
  std::size_t cls = 0;        // argmax over foreground classes, 0-based
  Tensor mask;                // [H, W] on the feature grid
  float score = 0.0f;         // 1 - p(background)
};

/// Keeps detection rows whose foreground probability is at least `threshold`,
/// highest score first (ties by row), truncated to `top_k` when given. Masks
/// are thresholded at sigmoid 0.5 unless `kind` is Soft.
std::vector<Detection> filter_fg(const FramePrediction& prediction, float threshold,
                                 std::optional<std::size_t> top_k = std::nullopt, MaskKind kind = MaskKind::Hard);

enum class ExhaustionPolicy { DropLowest, Throw };

struct AdmitResult {
  std::vector<std::size_t> admitted;  // pool indices, in admission order
  std::size_t dropped = 0;
};

/// ID vector pool with the free set B, the allocation list A and the masks M
/// paired with A. Allocations are permanent for the life of a stream.
class IdentityRegistry {
 public:
  IdentityRegistry() = default;
  IdentityRegistry(Tensor pool, std::size_t H, std::size_t W, std::uint64_t seed);

  std::size_t capacity() const { return pool_.dim(0); }
  const Tensor& pool() const noexcept { return pool_; }
  const std::vector<std::size_t>& free_indices() const noexcept { return free_; }
  const std::vector<std::size_t>& allocated() const noexcept { return allocated_; }
  const MaskStack& masks() const noexcept { return masks_; }

  /// Rows of the pool for the current allocation list, [|A|, D].
  Tensor allocated_vectors() const;

  /// Draws n free indices uniformly without replacement, appends them to the
  /// allocation list with empty masks, and returns their vectors in draw order.
  Tensor sample(std::size_t n);
  std::vector<std::size_t> sample_indices(std::size_t n);

  /// Prompted start: allocate one vector per prompt mask and pair them.
  void init_prompted(const MaskStack& prompt);

  /// Appends vectors for new detections and sets M = concat(trk_masks,
  /// detection masks). `trk_masks` must have one mask per current allocation.
  AdmitResult admit(std::vector<Detection> detections, const MaskStack& trk_masks,
                    ExhaustionPolicy policy = ExhaustionPolicy::DropLowest);

  /// Overwrites the paired masks without changing allocations.
  void set_masks(MaskStack masks);

  /// Throws ContractError if a registry invariant is broken.
  void check_invariants() const;

  NamedTensors to_named() const;
  std::string rng_state() const { return rng_.save(); }
  static IdentityRegistry restore(Tensor pool, const NamedTensors& named, const std::string& rng_state);

  friend bool operator==(const IdentityRegistry&, const IdentityRegistry&) = default;

 private:
  Tensor pool_;
  std::vector<std::size_t> free_;
  std::vector<std::size_t> allocated_;
  MaskStack masks_;
  Rng rng_;
};

}  // namespace ausm
