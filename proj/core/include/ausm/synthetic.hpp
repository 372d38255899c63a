#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ausm/backbone.hpp"
#include "ausm/teacher_forcing.hpp"

namespace ausm {

enum class ShapeKind { Circle, Rectangle };

/// One moving shape. Positions are in pixels at frame 1; velocity is pixels
/// per frame. Objects with a higher index are drawn on top.
struct ObjectSpec {
  std::size_t instance_id = 0;
  std::size_t cls = 1;  // 1..K
  ShapeKind shape = ShapeKind::Rectangle;
  double cx = 0, cy = 0, vx = 0, vy = 0;
  double half_w = 1, half_h = 1;
  std::array<float, 3> color{};
  std::size_t entry_frame = 1;

  /// Pixel coverage at 1-based frame t (false before entry).
  bool covers(std::size_t t, std::size_t y, std::size_t x) const;
};

struct SyntheticOptions {
  std::uint64_t seed = 0;
  std::size_t T = 8;
  std::size_t height = 64, width = 64;
  std::size_t n_objects = 2;
  std::size_t patch = 8;
  std::size_t num_classes = 8;
  std::vector<std::size_t> entry_schedule;  // 1-based entry frame per object; empty means all at 1
  bool zero_velocity = false;
  /// Static rectangles whose edges lie on the patch grid.
  bool grid_aligned = false;
};

struct SyntheticVideo {
  std::uint64_t seed = 0;
  std::string video_id;
  std::size_t height = 0, width = 0;
  std::vector<RawFrame> frames;
  std::vector<GroundTruthTrack> tracks;  // pixel resolution, one per object
  std::vector<ObjectSpec> objects;
};

inline constexpr float kBackgroundLevel = 0.1f;

/// Deterministic in the options. Masks in one frame are disjoint.
SyntheticVideo generate(const SyntheticOptions& options);

/// Renders objects into frames and visibility-aware masks.
SyntheticVideo render(std::uint64_t seed, std::size_t T, std::size_t height, std::size_t width,
                      std::vector<ObjectSpec> objects);

/// Area-mean downsampling of every visible mask to the patch grid. Frames
/// where the reduced mask is empty become invisible; tracks never visible on
/// the grid are dropped.
std::vector<GroundTruthTrack> to_feature_tracks(std::span<const GroundTruthTrack> tracks, std::size_t patch);

/// [T, height, width, N] stack of track masks (absent frames are zero).
Tensor masks_tensor(std::span<const GroundTruthTrack> tracks, std::size_t T, std::size_t height, std::size_t width);

/// Masks of all tracks at 0-based frame k on the patch grid.
MaskStack frame_masks(std::span<const GroundTruthTrack> tracks, std::size_t k, std::size_t patch);

}  // namespace ausm
