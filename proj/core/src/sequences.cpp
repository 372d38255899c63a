#include "ausm/sequences.hpp"

#include <algorithm>
#include <cmath>

#include "ausm/error.hpp"

namespace ausm {

std::vector<std::size_t> repetition_indices(std::size_t T, std::size_t reps) {
  if (reps < 1) throw ConfigError("repetitions must be >= 1");
  if (T == 0) throw InputError("cannot repeat an empty sequence");
  std::vector<std::size_t> out;
  out.reserve(T + (reps - 1) * 2 * (T - 1));
  for (std::size_t i = 0; i < T; ++i) out.push_back(i);
  for (std::size_t r = 1; r < reps; ++r) {
    for (std::size_t i = T - 1; i-- > 0;) out.push_back(i);
    for (std::size_t i = 1; i < T; ++i) out.push_back(i);
  }
  return out;
}

AugmentedSequence build_repetition_sequence(std::span<const RawFrame> frames, std::size_t reps) {
  AugmentedSequence seq;
  for (std::size_t i : repetition_indices(frames.size(), reps)) seq.frames.push_back(frames[i]);
  seq.keep_begin = seq.frames.size() - frames.size();
  return seq;
}

CropBox quadrant_box(std::size_t height, std::size_t width, double crop_fraction, Quadrant q) {
  if (!(crop_fraction > 0.5 && crop_fraction <= 1.0)) {
    throw ConfigError("crop fraction must lie in (0.5, 1], got " + std::to_string(crop_fraction));
  }
  CropBox b;
  b.rows = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(crop_fraction * height)), 1, height);
  b.cols = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(crop_fraction * width)), 1, width);
  const bool bottom = q == Quadrant::BottomLeft || q == Quadrant::BottomRight;
  const bool right = q == Quadrant::UpperRight || q == Quadrant::BottomRight;
  b.row0 = bottom ? height - b.rows : 0;
  b.col0 = right ? width - b.cols : 0;
  return b;
}

RawFrame crop_and_resize(const RawFrame& frame, const CropBox& box) {
  const std::size_t h = frame.height(), w = frame.width();
  if (box.rows == 0 || box.cols == 0 || box.row0 + box.rows > h || box.col0 + box.cols > w) {
    throw DimensionError("crop box lies outside the frame");
  }
  const Tensor& src = frame.values();
  Tensor out({h, w, 3});
  auto coord = [](std::size_t i, std::size_t n_out, std::size_t n_in, std::size_t& i0, std::size_t& i1, double& f) {
    double s = (static_cast<double>(i) + 0.5) * static_cast<double>(n_in) / static_cast<double>(n_out) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n_in - 1));
    i0 = static_cast<std::size_t>(std::floor(s));
    i1 = std::min(i0 + 1, n_in - 1);
    f = s - static_cast<double>(i0);
  };
  for (std::size_t y = 0; y < h; ++y) {
    std::size_t y0, y1;
    double fy;
    coord(y, h, box.rows, y0, y1, fy);
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t x0, x1;
      double fx;
      coord(x, w, box.cols, x0, x1, fx);
      for (std::size_t c = 0; c < 3; ++c) {
        auto at = [&](std::size_t r, std::size_t q) {
          return static_cast<double>(src[((box.row0 + r) * w + box.col0 + q) * 3 + c]);
        };
        const double v = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) +
                         fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
        out[(y * w + x) * 3 + c] = static_cast<float>(v);
      }
    }
  }
  return RawFrame(std::move(out));
}

AugmentedSequence build_quadrant_sequence(const RawFrame& frame, double crop_fraction) {
  AugmentedSequence seq;
  seq.frames.push_back(frame);
  for (Quadrant q : kQuadrantOrder) {
    seq.frames.push_back(crop_and_resize(frame, quadrant_box(frame.height(), frame.width(), crop_fraction, q)));
  }
  seq.frames.push_back(frame);
  seq.keep_begin = seq.frames.size() - 1;
  return seq;
}

}  // namespace ausm
