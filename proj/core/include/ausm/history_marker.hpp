#pragma once

#include "ausm/backbone.hpp"
#include "ausm/tensor.hpp"

namespace ausm {

inline constexpr float kMarkerEps = 1e-6f;

enum class MaskKind { Hard, Soft };

/// N instance masks on an H x W grid. Hard masks hold only 0/1; soft masks lie in [0, 1].
class MaskStack {
 public:
  MaskStack() = default;
  MaskStack(Tensor values, MaskKind kind = MaskKind::Hard);

  static MaskStack empty(std::size_t H, std::size_t W, MaskKind kind = MaskKind::Hard);

  std::size_t count() const { return values_.dim(0); }
  std::size_t H() const { return values_.dim(1); }
  std::size_t W() const { return values_.dim(2); }
  MaskKind kind() const noexcept { return kind_; }
  const Tensor& values() const noexcept { return values_; }

  Tensor mask(std::size_t i) const;
  /// Keeps the stricter kind: hard only if both inputs are hard.
  MaskStack concat(const MaskStack& other) const;
  MaskStack select(std::span<const std::size_t> rows) const;

  friend bool operator==(const MaskStack&, const MaskStack&) = default;

 private:
  Tensor values_;
  MaskKind kind_ = MaskKind::Hard;
};

/// S[h, w, :] = sum_i M_i[h, w] A_i / (eps + sum_i M_i[h, w]).
/// A is [N, D]; N = 0 yields an all-zero [H, W, D] map.
Tensor mark(const Tensor& A, const MaskStack& M, float eps = kMarkerEps);

/// E_t = X_{t-1} + mark(A_{t-1}, M_{t-1}).
Tensor build_marked_input(const FrameFeatureMap& X_prev, const Tensor& A, const MaskStack& M,
                          float eps = kMarkerEps);

/// Pixel-resolution masks [N, h, w] to the patch grid by area mean. Hard
/// output thresholds the mean at 0.5; soft output keeps it.
MaskStack downsample_masks(const Tensor& masks, std::size_t patch, MaskKind kind = MaskKind::Hard);

/// Inverse of mark for disjoint hard masks: pixel (h, w) belongs to instance
/// i when S[h, w] projects onto A_i with coefficient above 0.5 and A_i is the
/// most aligned ID vector there.
MaskStack decode_marks(const Tensor& S, const Tensor& A);

}  // namespace ausm
