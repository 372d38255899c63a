#include "ausm/backbone.hpp"

#include "ausm/error.hpp"
#include "ausm/ops.hpp"

namespace ausm {

RawFrame::RawFrame(Tensor values) : values_(std::move(values)) {
  if (values_.rank() != 3 || values_.dim(2) != 3) {
    throw DimensionError("raw frame must be [height, width, 3], got " + shape_str(values_.shape()));
  }
}

FrameFeatureMap::FrameFeatureMap(Tensor values) : values_(std::move(values)) {
  if (values_.rank() != 3) throw DimensionError("feature map must be [H, W, D], got " + shape_str(values_.shape()));
}

FrameFeatureMap embed_frame(const RawFrame& frame, const WeightBundle& weights) {
  const std::size_t P = weights.dims().P;
  const std::size_t h = frame.height(), w = frame.width();
  if (h % P != 0 || w % P != 0 || h == 0 || w == 0) {
    throw ConfigError("frame " + std::to_string(h) + "x" + std::to_string(w) +
                      " is not divisible by patch size " + std::to_string(P));
  }
  const std::size_t H = h / P, W = w / P, patch = P * P * 3;
  Tensor patches({H * W, patch});
  const Tensor& px = frame.values();
  for (std::size_t gy = 0; gy < H; ++gy) {
    for (std::size_t gx = 0; gx < W; ++gx) {
      float* dst = patches.data().data() + (gy * W + gx) * patch;
      for (std::size_t y = 0; y < P; ++y) {
        const float* src = px.data().data() + ((gy * P + y) * w + gx * P) * 3;
        for (std::size_t i = 0; i < P * 3; ++i) *dst++ = src[i];
      }
    }
  }
  Tensor features = linear(patches, weights.get(param::kPatchWeight), weights.get(param::kPatchBias));
  return FrameFeatureMap(std::move(features).reshaped({H, W, weights.dims().D}));
}

FrameFeatureMap initial_feature(std::size_t H, std::size_t W, const WeightBundle& weights) {
  const Tensor& v = weights.get(param::kInitialFrame);
  const std::size_t D = v.size();
  Tensor x({H, W, D});
  for (std::size_t p = 0; p < H * W; ++p) {
    std::copy(v.data().begin(), v.data().end(), x.data().begin() + static_cast<std::ptrdiff_t>(p * D));
  }
  return FrameFeatureMap(std::move(x));
}

std::vector<RawFrame> frames_from_video(const Tensor& video) {
  if (video.rank() != 4 || video.dim(3) != 3) {
    throw DimensionError("video must be [T, height, width, 3], got " + shape_str(video.shape()));
  }
  std::vector<RawFrame> frames;
  frames.reserve(video.dim(0));
  for (std::size_t t = 0; t < video.dim(0); ++t) {
    frames.emplace_back(video.slices(t, t + 1).reshaped({video.dim(1), video.dim(2), 3}));
  }
  return frames;
}

Tensor video_from_frames(std::span<const RawFrame> frames) {
  std::vector<Tensor> parts;
  parts.reserve(frames.size());
  for (const RawFrame& f : frames) parts.push_back(f.values());
  return stack(parts);
}

}  // namespace ausm
