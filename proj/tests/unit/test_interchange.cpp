#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ausm/error.hpp"
#include "ausm/interchange.hpp"
#include "ausm/synthetic.hpp"

using namespace ausm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ausm_interchange_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SyntheticVideo sample_video() {
  SyntheticOptions o;
  o.seed = 9;
  o.T = 4;
  o.height = o.width = 16;
  o.patch = 4;
  o.n_objects = 2;
  o.entry_schedule = {1, 3};
  return generate(o);
}

}  // namespace

TEST_CASE("ground truth survives a disk round trip") {
  const SyntheticVideo v = sample_video();
  const fs::path dir = scratch("gt");
  write_synthetic(dir, v);
  CHECK(fs::exists(dir / kVideoFile));
  const GroundTruthSet gt = read_ground_truth(dir / kGroundTruthFile);
  CHECK(gt.video_id == v.video_id);
  CHECK(gt.T == 4);
  REQUIRE(gt.tracks.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(gt.tracks[i].masks == v.tracks[i].masks);
    CHECK(gt.tracks[i].cls == v.tracks[i].cls);
    CHECK(gt.objects[i].cx == v.objects[i].cx);
    CHECK(gt.objects[i].color == v.objects[i].color);
  }
  CHECK(ground_truth_json(gt) == slurp(dir / kGroundTruthFile));
  const Tensor frames = read_avr(dir / kVideoFile);
  CHECK(frames.shape() == Shape{4, 16, 16, 3});
  fs::remove_all(dir);
}

TEST_CASE("malformed ground truth is an input error") {
  CHECK_THROWS_AS(parse_ground_truth_json("{"), InputError);
  CHECK_THROWS_AS(parse_ground_truth_json(R"({"video_id": "x"})"), InputError);
  const SyntheticVideo v = sample_video();
  std::string text = ground_truth_json(ground_truth_of(v));
  const auto pos = text.find("rectangle") != std::string::npos ? text.find("rectangle") : text.find("circle");
  text.replace(pos, 1, "X");
  CHECK_THROWS_AS(parse_ground_truth_json(text), InputError);
}

TEST_CASE("predictions survive a disk round trip") {
  PredictionSet p;
  p.video_id = "clip";
  p.T = 2;
  p.height = 4;
  p.width = 3;
  PredictedTrack a;
  a.track_id = 7;
  a.prompt_index = 0;
  a.cls = 3;
  a.score = 0.25;
  a.frame_scores = {0.5, std::nullopt};
  a.frame_classes = {3, std::nullopt};
  Tensor m({4, 3});
  m.at({1, 2}) = 1.0f;
  a.masks = {m, Tensor({4, 3})};
  PredictedTrack b = a;
  b.track_id = 2;
  b.prompt_index.reset();
  b.masks = {Tensor({4, 3}, 1.0f), m};
  p.tracks = {a, b};
  const fs::path dir = scratch("pred");
  write_predictions(dir, p);
  const PredictionSet q = read_predictions(dir / kPredictionFile);
  CHECK(prediction_json(q) == prediction_json(p));
  REQUIRE(q.tracks.size() == 2);
  CHECK(q.tracks[0].masks == a.masks);
  CHECK(q.tracks[1].masks == b.masks);
  CHECK_FALSE(q.tracks[1].prompt_index.has_value());
  fs::remove_all(dir);
}
