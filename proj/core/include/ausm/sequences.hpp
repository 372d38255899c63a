#pragma once

#include <array>
#include <span>
#include <vector>

#include "ausm/backbone.hpp"

namespace ausm {

/// Frame order for test-time repetition. reps = 1 is the identity. Each
/// further repetition appends a backward pass and a forward pass that both
/// skip the frame they start from, so the sequence ends on frame T.
/// Indices are 0-based; length is T + (reps - 1) * 2 * (T - 1).
std::vector<std::size_t> repetition_indices(std::size_t T, std::size_t reps);

struct AugmentedSequence {
  std::vector<RawFrame> frames;
  std::size_t keep_begin = 0;  // predictions are kept for [keep_begin, frames.size())
  std::size_t keep_count() const { return frames.size() - keep_begin; }
};

AugmentedSequence build_repetition_sequence(std::span<const RawFrame> frames, std::size_t reps);

enum class Quadrant { UpperLeft, UpperRight, BottomRight, BottomLeft };

struct CropBox {
  std::size_t row0 = 0, col0 = 0, rows = 0, cols = 0;
  friend bool operator==(const CropBox&, const CropBox&) = default;
};

/// Corner crop of round(fraction * size) rows and columns.
CropBox quadrant_box(std::size_t height, std::size_t width, double crop_fraction, Quadrant q);

/// Bilinear resize of a crop back to the full frame size.
RawFrame crop_and_resize(const RawFrame& frame, const CropBox& box);

inline constexpr double kDefaultCropFraction = 0.9;
inline constexpr std::array<Quadrant, 4> kQuadrantOrder = {Quadrant::UpperLeft, Quadrant::UpperRight,
                                                           Quadrant::BottomRight, Quadrant::BottomLeft};

/// (I, UL, UR, BR, BL, I); only the last frame's prediction is kept.
/// Requires 0.5 < crop_fraction <= 1.
AugmentedSequence build_quadrant_sequence(const RawFrame& frame, double crop_fraction = kDefaultCropFraction);

}  // namespace ausm
