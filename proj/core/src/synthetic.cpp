#include "ausm/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "ausm/error.hpp"
#include "ausm/random.hpp"

namespace ausm {

bool ObjectSpec::covers(std::size_t t, std::size_t y, std::size_t x) const {
  if (t < entry_frame) return false;
  const double dt = static_cast<double>(t - 1);
  const double px = static_cast<double>(x) + 0.5 - (cx + vx * dt);
  const double py = static_cast<double>(y) + 0.5 - (cy + vy * dt);
  if (shape == ShapeKind::Rectangle) return std::abs(px) < half_w && std::abs(py) < half_h;
  return (px * px) / (half_w * half_w) + (py * py) / (half_h * half_h) <= 1.0;
}

namespace {

std::array<float, 3> hue_color(double hue) {
  const double h = hue * 6.0;
  const int sector = static_cast<int>(std::floor(h)) % 6;
  const double f = h - std::floor(h);
  const double v = 0.9, s = 0.8;
  const double p = v * (1 - s), q = v * (1 - s * f), u = v * (1 - s * (1 - f));
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = v, g = u, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = u; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = u, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
  return {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
}

}  // namespace

SyntheticVideo render(std::uint64_t seed, std::size_t T, std::size_t height, std::size_t width,
                      std::vector<ObjectSpec> objects) {
  SyntheticVideo v;
  v.seed = seed;
  v.video_id = "synthetic-" + std::to_string(seed);
  v.height = height;
  v.width = width;
  const std::size_t n = objects.size();
  for (std::size_t i = 0; i < n; ++i) {
    GroundTruthTrack tr;
    tr.instance_id = objects[i].instance_id;
    tr.cls = objects[i].cls;
    tr.masks.resize(T);
    v.tracks.push_back(std::move(tr));
  }
  std::vector<int> owner(height * width);
  for (std::size_t t = 1; t <= T; ++t) {
    Tensor img({height, width, 3}, kBackgroundLevel);
    std::fill(owner.begin(), owner.end(), -1);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        for (std::size_t i = 0; i < n; ++i)
          if (objects[i].covers(t, y, x)) owner[y * width + x] = static_cast<int>(i);
    std::vector<Tensor> masks(n, Tensor({height, width}));
    std::vector<bool> any(n, false);
    for (std::size_t p = 0; p < owner.size(); ++p) {
      if (owner[p] < 0) continue;
      const auto i = static_cast<std::size_t>(owner[p]);
      masks[i][p] = 1.0f;
      any[i] = true;
      for (std::size_t c = 0; c < 3; ++c) img[p * 3 + c] = objects[i].color[c];
    }
    for (std::size_t i = 0; i < n; ++i)
      if (any[i]) v.tracks[i].masks[t - 1] = std::move(masks[i]);
    v.frames.emplace_back(std::move(img));
  }
  v.objects = std::move(objects);
  return v;
}

SyntheticVideo generate(const SyntheticOptions& o) {
  if (o.n_objects == 0) throw InputError("n_objects must be >= 1");
  if (o.T == 0) throw InputError("T must be >= 1");
  if (o.patch == 0 || o.height == 0 || o.width == 0 || o.height % o.patch != 0 || o.width % o.patch != 0) {
    throw ConfigError("frame size " + std::to_string(o.height) + "x" + std::to_string(o.width) +
                      " must be a positive multiple of patch size " + std::to_string(o.patch));
  }
  if (o.num_classes == 0) throw ConfigError("num_classes must be >= 1");
  if (!o.entry_schedule.empty() && o.entry_schedule.size() != o.n_objects) {
    throw InputError("entry schedule needs one frame per object");
  }
  Rng rng(o.seed);
  const double hue0 = rng.uniform();
  const double side = static_cast<double>(std::min(o.height, o.width));
  const double vmax = o.zero_velocity || o.grid_aligned ? 0.0 : side / 16.0;
  const std::size_t gh = o.height / o.patch, gw = o.width / o.patch;
  std::vector<ObjectSpec> objects;
  for (std::size_t i = 0; i < o.n_objects; ++i) {
    ObjectSpec s;
    s.instance_id = i + 1;
    s.cls = 1 + rng.below(o.num_classes);
    s.color = hue_color(std::fmod(hue0 + static_cast<double>(i) / static_cast<double>(o.n_objects), 1.0));
    s.entry_frame = o.entry_schedule.empty() ? 1 : o.entry_schedule[i];
    if (s.entry_frame < 1 || s.entry_frame > o.T) throw InputError("entry frame outside [1, T]");
    if (o.grid_aligned) {
      s.shape = ShapeKind::Rectangle;
      const std::size_t ch = 1 + rng.below(std::max<std::size_t>(1, gh / 2));
      const std::size_t cw = 1 + rng.below(std::max<std::size_t>(1, gw / 2));
      const std::size_t r0 = rng.below(gh - ch + 1), c0 = rng.below(gw - cw + 1);
      const double P = static_cast<double>(o.patch);
      s.half_h = static_cast<double>(ch) * P / 2.0;
      s.half_w = static_cast<double>(cw) * P / 2.0;
      s.cy = static_cast<double>(r0) * P + s.half_h;
      s.cx = static_cast<double>(c0) * P + s.half_w;
    } else {
      s.shape = rng.below(2) == 0 ? ShapeKind::Circle : ShapeKind::Rectangle;
      s.half_w = rng.uniform(side / 10.0, side / 5.0);
      s.half_h = s.shape == ShapeKind::Circle ? s.half_w : rng.uniform(side / 10.0, side / 5.0);
      s.cx = rng.uniform(s.half_w, static_cast<double>(o.width) - s.half_w);
      s.cy = rng.uniform(s.half_h, static_cast<double>(o.height) - s.half_h);
      s.vx = rng.uniform(-vmax, vmax);
      s.vy = rng.uniform(-vmax, vmax);
    }
    objects.push_back(s);
  }
  return render(o.seed, o.T, o.height, o.width, std::move(objects));
}

std::vector<GroundTruthTrack> to_feature_tracks(std::span<const GroundTruthTrack> tracks, std::size_t patch) {
  std::vector<GroundTruthTrack> out;
  for (const GroundTruthTrack& tr : tracks) {
    GroundTruthTrack f;
    f.instance_id = tr.instance_id;
    f.cls = tr.cls;
    bool seen = false;
    for (const auto& m : tr.masks) {
      if (!m) {
        f.masks.emplace_back();
        continue;
      }
      const MaskStack d = downsample_masks(m->reshaped({1, m->dim(0), m->dim(1)}), patch, MaskKind::Hard);
      Tensor small = d.mask(0);
      if (std::any_of(small.data().begin(), small.data().end(), [](float v) { return v > 0.0f; })) {
        f.masks.emplace_back(std::move(small));
        seen = true;
      } else {
        f.masks.emplace_back();
      }
    }
    if (seen) out.push_back(std::move(f));
  }
  return out;
}

Tensor masks_tensor(std::span<const GroundTruthTrack> tracks, std::size_t T, std::size_t height, std::size_t width) {
  const std::size_t n = tracks.size();
  Tensor out({T, height, width, n});
  for (std::size_t i = 0; i < n; ++i) {
    if (tracks[i].frames() != T) throw DimensionError("track length differs from clip length");
    for (std::size_t t = 0; t < T; ++t) {
      if (!tracks[i].masks[t]) continue;
      const Tensor& m = *tracks[i].masks[t];
      if (m.shape() != Shape{height, width}) throw DimensionError("track mask size differs from frame size");
      for (std::size_t p = 0; p < height * width; ++p) out[(t * height * width + p) * n + i] = m[p];
    }
  }
  return out;
}

MaskStack frame_masks(std::span<const GroundTruthTrack> tracks, std::size_t k, std::size_t patch) {
  if (tracks.empty()) throw InputError("frame_masks needs at least one track");
  std::size_t h = 0, w = 0;
  for (const auto& tr : tracks)
    for (const auto& m : tr.masks)
      if (m) {
        h = m->dim(0);
        w = m->dim(1);
      }
  if (h == 0) throw InputError("no visible masks to size the grid from");
  Tensor full({tracks.size(), h, w});
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (k < tracks[i].frames() && tracks[i].masks[k]) {
      const Tensor& m = *tracks[i].masks[k];
      std::copy(m.data().begin(), m.data().end(), full.slice(i).begin());
    }
  }
  return downsample_masks(full, patch, MaskKind::Hard);
}

}  // namespace ausm
