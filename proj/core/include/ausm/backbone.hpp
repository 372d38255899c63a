#pragma once

#include <span>
#include <vector>

#include "ausm/tensor.hpp"
#include "ausm/weights.hpp"

namespace ausm {

/// RGB frame, values in [0, 1], stored [height, width, 3].
class RawFrame {
 public:
  RawFrame() = default;
  explicit RawFrame(Tensor values);

  std::size_t height() const { return values_.dim(0); }
  std::size_t width() const { return values_.dim(1); }
  const Tensor& values() const noexcept { return values_; }

  friend bool operator==(const RawFrame&, const RawFrame&) = default;

 private:
  Tensor values_;
};

/// Per-frame feature grid [H, W, D] on the patch grid.
class FrameFeatureMap {
 public:
  FrameFeatureMap() = default;
  explicit FrameFeatureMap(Tensor values);

  std::size_t H() const { return values_.dim(0); }
  std::size_t W() const { return values_.dim(1); }
  std::size_t D() const { return values_.dim(2); }
  const Tensor& values() const noexcept { return values_; }

  friend bool operator==(const FrameFeatureMap&, const FrameFeatureMap&) = default;

 private:
  Tensor values_;
};

/// Projects each non-overlapping PxP patch (flattened row, column, channel)
/// to D channels. No state is shared between calls.
FrameFeatureMap embed_frame(const RawFrame& frame, const WeightBundle& weights);

/// X_0: the learned D-vector repeated over an H x W grid.
FrameFeatureMap initial_feature(std::size_t H, std::size_t W, const WeightBundle& weights);

/// Split a [T, height, width, 3] video tensor into frames and back.
std::vector<RawFrame> frames_from_video(const Tensor& video);
Tensor video_from_frames(std::span<const RawFrame> frames);

}  // namespace ausm
