#include <doctest.h>

#include "ausm/error.hpp"
#include "ausm/synthetic.hpp"

using namespace ausm;

namespace {

SyntheticOptions opts(std::uint64_t seed) {
  SyntheticOptions o;
  o.seed = seed;
  o.T = 6;
  o.height = 32;
  o.width = 24;
  o.n_objects = 3;
  o.patch = 4;
  return o;
}

}  // namespace

TEST_CASE("generation is deterministic in the options") {
  const SyntheticVideo a = generate(opts(7)), b = generate(opts(7)), c = generate(opts(8));
  CHECK(a.frames == b.frames);
  CHECK(a.frames != c.frames);
  CHECK(a.video_id == "synthetic-7");
  REQUIRE(a.tracks.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a.tracks[i].masks == b.tracks[i].masks);
}

TEST_CASE("masks are disjoint and match the rendered colors") {
  const SyntheticVideo v = generate(opts(1));
  for (std::size_t t = 0; t < v.frames.size(); ++t) {
    const Tensor& img = v.frames[t].values();
    for (std::size_t p = 0; p < 32 * 24; ++p) {
      int owners = 0;
      for (std::size_t i = 0; i < v.tracks.size(); ++i) {
        if (!v.tracks[i].masks[t] || (*v.tracks[i].masks[t])[p] == 0.0f) continue;
        ++owners;
        for (std::size_t c = 0; c < 3; ++c) CHECK(img[p * 3 + c] == v.objects[i].color[c]);
      }
      CHECK(owners <= 1);
      if (owners == 0)
        for (std::size_t c = 0; c < 3; ++c) CHECK(img[p * 3 + c] == kBackgroundLevel);
    }
  }
}

TEST_CASE("entry schedule hides objects until they enter") {
  SyntheticOptions o = opts(2);
  o.entry_schedule = {1, 3, 6};
  const SyntheticVideo v = generate(o);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t t = 1; t < o.entry_schedule[i]; ++t) CHECK_FALSE(v.tracks[i].visible(t));
  CHECK(v.tracks[2].visible_frames().size() <= 1);
  o.entry_schedule = {1, 2};
  CHECK_THROWS_AS(generate(o), InputError);
  o.entry_schedule = {1, 2, 7};
  CHECK_THROWS_AS(generate(o), InputError);
}

TEST_CASE("static and grid-aligned options") {
  SyntheticOptions o = opts(3);
  o.zero_velocity = true;
  const SyntheticVideo v = generate(o);
  for (std::size_t t = 1; t < o.T; ++t) CHECK(v.frames[t] == v.frames[0]);
  o.zero_velocity = false;
  o.grid_aligned = true;
  const SyntheticVideo g = generate(o);
  for (const auto& tr : g.tracks)
    for (const auto& m : tr.masks) {
      if (!m) continue;
      for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t x = 0; x < 24; ++x) CHECK(m->at({y, x}) == m->at({y / 4 * 4, x / 4 * 4}));
    }
}

TEST_CASE("invalid options") {
  SyntheticOptions o = opts(0);
  o.n_objects = 0;
  CHECK_THROWS_AS(generate(o), InputError);
  o = opts(0);
  o.height = 30;
  CHECK_THROWS_AS(generate(o), ConfigError);
  o = opts(0);
  o.T = 0;
  CHECK_THROWS_AS(generate(o), InputError);
}

TEST_CASE("mask tensor layout") {
  const SyntheticVideo v = generate(opts(4));
  const Tensor m = masks_tensor(v.tracks, 6, 32, 24);
  CHECK(m.shape() == Shape{6, 32, 24, 3});
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t y = 0; y < 32; y += 5)
        for (std::size_t x = 0; x < 24; x += 3) {
          const float want = v.tracks[i].masks[t] ? v.tracks[i].masks[t]->at({y, x}) : 0.0f;
          CHECK(m.at({t, y, x, i}) == want);
        }
  CHECK_THROWS_AS(masks_tensor(v.tracks, 5, 32, 24), DimensionError);
}

TEST_CASE("feature tracks drop objects that vanish on the grid") {
  ObjectSpec big;
  big.instance_id = 1;
  big.cx = big.cy = 8;
  big.half_w = big.half_h = 4;
  ObjectSpec tiny = big;
  tiny.instance_id = 2;
  tiny.cx = tiny.cy = 13.5;
  tiny.half_w = tiny.half_h = 0.6;
  const SyntheticVideo v = render(0, 2, 16, 16, {big, tiny});
  CHECK(v.tracks[1].visible(1));
  const auto f = to_feature_tracks(v.tracks, 4);
  REQUIRE(f.size() == 1);
  CHECK(f[0].instance_id == 1);
  CHECK(f[0].masks[0]->shape() == Shape{4, 4});
  CHECK(f[0].masks[0]->at({1, 1}) == 1.0f);
  CHECK(f[0].masks[0]->at({0, 0}) == 0.0f);
  const MaskStack fm = frame_masks(v.tracks, 0, 4);
  CHECK(fm.count() == 2);
  CHECK(fm.mask(0) == *f[0].masks[0]);
}
