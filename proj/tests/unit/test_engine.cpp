#include <doctest.h>

#include <algorithm>
#include <json.hpp>
#include <numeric>

#include "ausm/engine.hpp"
#include "ausm/error.hpp"
#include "ausm/metrics.hpp"
#include "ausm/synthetic.hpp"
#include "ausm/training_bench.hpp"

using namespace ausm;

namespace {

ModelDims small_dims() {
  ModelDims d;
  d.D = 16;
  d.S = 4;
  d.L_comp = 2;
  d.L_dec = 1;
  d.N_det = 5;
  d.N_id = 8;
  d.P = 4;
  return d;
}

std::shared_ptr<const WeightBundle> small_weights(std::uint64_t seed = 3) {
  return std::make_shared<const WeightBundle>(WeightBundle::initialize(small_dims(), seed));
}

double worst(const TeacherForcedResult& a, const TeacherForcedResult& b) {
  const auto dev = compare_results(a, b);
  return dev.empty() ? 0.0 : dev.front().max_abs;
}

}  // namespace

TEST_CASE("recurrent and parallel teacher forcing agree") {
  const auto w = small_weights();
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t T = 1 + seed % 6;
    const TeacherForcingCase c = make_teacher_forcing_case(*w, seed, T, 16, 16, 1 + seed % 3);
    const auto rec = run_recurrent_teacher_forced(c.video.frames, c.plan, *w);
    const auto par = run_parallel(c.video.frames, c.plan, *w);
    REQUIRE(rec.predictions.size() == T);
    CHECK(worst(rec, par) <= 1e-4);
    CHECK(std::isfinite(rec.losses.total));
  }
}

TEST_CASE("single frame clips match exactly") {
  const auto w = small_weights();
  const TeacherForcingCase c = make_teacher_forcing_case(*w, 11, 1, 16, 16, 2);
  CHECK(worst(run_recurrent_teacher_forced(c.video.frames, c.plan, *w), run_parallel(c.video.frames, c.plan, *w)) ==
        0.0);
}

TEST_CASE("clips without instances only carry detection loss") {
  const auto w = small_weights();
  const TeacherForcingCase c = make_teacher_forcing_case(*w, 2, 3, 16, 16, 1);
  const TeacherForcingPlan empty({}, {}, {}, Tensor({0, small_dims().D}), 3, 4, 4);
  const auto rec = run_recurrent_teacher_forced(c.video.frames, empty, *w);
  const auto par = run_parallel(c.video.frames, empty, *w);
  CHECK(worst(rec, par) <= 1e-4);
  for (const auto& f : rec.losses.frames) {
    CHECK(f.tracking == 0.0);
    CHECK(f.detection > 0.0);
  }
  for (const auto& p : rec.predictions) CHECK(p.num_tracking == 0);
}

TEST_CASE("instance order does not change the loss") {
  const auto w = small_weights();
  const TeacherForcingCase c = make_teacher_forcing_case(*w, 5, 4, 16, 16, 3);
  const TeacherForcingPlan& p = c.plan;
  REQUIRE(p.instances() >= 2);
  std::vector<std::size_t> order(p.instances());
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  std::vector<GroundTruthTrack> tracks;
  std::vector<std::size_t> ts, pool;
  Tensor ids({order.size(), p.ids().dim(1)});
  for (std::size_t i = 0; i < order.size(); ++i) {
    tracks.push_back(p.tracks()[order[i]]);
    ts.push_back(p.t_sample()[order[i]]);
    pool.push_back(p.pool_index()[order[i]]);
    std::copy(p.ids().slice(order[i]).begin(), p.ids().slice(order[i]).end(), ids.slice(i).begin());
  }
  const TeacherForcingPlan q(tracks, ts, pool, ids, p.T(), p.H(), p.W());
  const auto a = run_parallel(c.video.frames, p, *w);
  const auto b = run_parallel(c.video.frames, q, *w);
  CHECK(a.losses.total == doctest::Approx(b.losses.total).epsilon(1e-5));
}

TEST_CASE("engine config round trip and validation") {
  EngineConfig c;
  c.top_k = 3;
  c.oracle_marks = true;
  c.seed = 42;
  const EngineConfig d = EngineConfig::from_json(c.to_json());
  CHECK(d.to_json() == c.to_json());
  EngineConfig bad;
  bad.fg_threshold = 1.0f;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.top_k = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.scan_chunk = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("streaming state has constant size and restores exactly") {
  const auto w = small_weights();
  SyntheticOptions o;
  o.T = 8;
  o.height = o.width = 16;
  o.patch = 4;
  o.n_objects = 2;
  const SyntheticVideo v = generate(o);
  EngineConfig cfg;
  cfg.fg_threshold = 0.05f;
  StreamSession s = StreamSession::start(w, 4, 4, cfg);
  s.step(v.frames[0]);
  const std::size_t fixed = s.fixed_state_bytes();
  for (std::size_t k = 1; k < 4; ++k) {
    s.step(v.frames[k]);
    CHECK(s.fixed_state_bytes() == fixed);
    CHECK(s.registry().allocated().size() <= small_dims().N_id);
    s.registry().check_invariants();
  }
  CHECK(s.t() == 4);
  StreamSession r = StreamSession::restore(w, s.serialize());
  CHECK(r.t() == 4);
  CHECK(r.registry() == s.registry());
  CHECK(r.serialize() == s.serialize());
  for (std::size_t k = 4; k < 8; ++k) {
    const StepOutput a = s.step(v.frames[k]);
    const StepOutput b = r.step(v.frames[k]);
    CHECK(a.prediction.class_logits == b.prediction.class_logits);
    CHECK(a.prediction.mask_logits == b.prediction.mask_logits);
    CHECK(a.tracking_ids == b.tracking_ids);
  }
}

TEST_CASE("prompted streams lead with one tracking row per prompt") {
  const auto w = small_weights();
  Tensor m({2, 4, 4});
  m.at({0, 0, 0}) = 1.0f;
  m.at({1, 3, 3}) = 1.0f;
  EngineConfig cfg;
  cfg.admit_detections = false;
  StreamSession s = StreamSession::start(w, 4, 4, cfg, MaskStack(m));
  const StepOutput out = s.step(RawFrame(Tensor({16, 16, 3}, 0.5f)));
  CHECK(out.prediction.num_tracking == 2);
  CHECK(out.prediction.num_detection() == small_dims().N_det);
  CHECK(out.tracking_ids == s.registry().allocated());
  CHECK(out.admission.admitted.empty());
}

TEST_CASE("inference is deterministic") {
  const auto w = small_weights();
  SyntheticOptions o;
  o.T = 4;
  o.height = o.width = 16;
  o.patch = 4;
  const SyntheticVideo v = generate(o);
  EngineConfig cfg;
  cfg.fg_threshold = 0.05f;
  const InferenceResult a = run_inference(w, v.frames, cfg);
  const InferenceResult b = run_inference(w, v.frames, cfg);
  REQUIRE(a.tracks.size() == b.tracks.size());
  for (std::size_t i = 0; i < a.tracks.size(); ++i) {
    CHECK(a.tracks[i].pool_index == b.tracks[i].pool_index);
    CHECK(a.tracks[i].masks == b.tracks[i].masks);
    CHECK(a.tracks[i].scores == b.tracks[i].scores);
  }
  CHECK(a.frames == 4);
  CHECK(a.frame_seconds.size() == 4);
}

TEST_CASE("oracle marks reproduce grid-aligned ground truth") {
  const auto w = small_weights();
  SyntheticOptions o;
  o.T = 5;
  o.height = o.width = 16;
  o.patch = 4;
  o.n_objects = 2;
  o.grid_aligned = true;
  const SyntheticVideo v = generate(o);
  EngineConfig cfg;
  cfg.oracle_marks = true;
  InferenceOptions opt;
  opt.prompt = frame_masks(v.tracks, 0, 4);
  for (std::size_t k = 1; k < o.T; ++k) opt.oracle_memory.push_back(frame_masks(v.tracks, k, 4));
  const InferenceResult r = run_inference(w, v.frames, cfg, opt);
  REQUIRE(r.tracks.size() == v.tracks.size());
  for (std::size_t i = 0; i < r.tracks.size(); ++i) {
    CHECK(r.tracks[i].prompt_index == i);
    for (std::size_t k = 0; k < o.T; ++k) {
      const Tensor gt = v.tracks[i].masks[k] ? *v.tracks[i].masks[k] : Tensor({16, 16});
      CHECK(region_j(r.tracks[i].masks[k], gt) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("inference input checks") {
  const auto w = small_weights();
  const std::vector<RawFrame> none;
  CHECK_THROWS_AS(run_inference(w, none, {}), InputError);
  const std::vector<RawFrame> odd{RawFrame(Tensor({10, 16, 3}))};
  CHECK_THROWS_AS(run_inference(w, odd, {}), ConfigError);
  EngineConfig cfg;
  cfg.oracle_marks = true;
  const std::vector<RawFrame> ok{RawFrame(Tensor({16, 16, 3}))};
  CHECK_THROWS_AS(run_inference(w, ok, cfg), InputError);
}
