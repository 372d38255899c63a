#include <doctest.h>

#include <json.hpp>
#include <numeric>

#include "ausm/error.hpp"
#include "ausm/teacher_forcing.hpp"
#include "oracles.hpp"

using namespace ausm;

namespace {

constexpr std::size_t H = 2, W = 3, K = 3;

GroundTruthTrack track(std::size_t id, std::size_t cls, std::vector<int> visible, ausm::Rng& rng) {
  GroundTruthTrack t;
  t.instance_id = id;
  t.cls = cls;
  for (int v : visible) {
    if (!v) {
      t.masks.emplace_back();
      continue;
    }
    Tensor m({H, W});
    for (float& x : m.data()) x = rng.below(2) ? 1.0f : 0.0f;
    m[0] = 1.0f;
    t.masks.emplace_back(std::move(m));
  }
  return t;
}

TeacherForcingPlan make_plan(std::vector<GroundTruthTrack> tracks, std::vector<std::size_t> ts, std::size_t T,
                             std::uint64_t seed = 1) {
  ausm::Rng rng(seed);
  IdentityRegistry reg(oracle::random_tensor({10, 4}, rng), H, W, seed);
  return build_plan(std::move(tracks), std::move(ts), reg, T);
}

FramePrediction random_prediction(std::size_t n_trk, std::size_t n_det, ausm::Rng& rng) {
  FramePrediction p;
  p.class_logits = oracle::random_tensor({n_trk + n_det, K + 1}, rng, -3, 3);
  p.mask_logits = oracle::random_tensor({n_trk + n_det, H, W}, rng, -3, 3);
  p.num_tracking = n_trk;
  return p;
}

// Independent loss of one frame: tracking rows by index, detection rows by
// exhaustive search over assignments of the matching cost.
double reference_frame_loss(const FramePrediction& p, const TeacherForcingPlan& plan, std::size_t t) {
  auto row = [&](const Tensor& x, std::size_t r) { return oracle::to_double(x.slice(r)); };
  double loss = 0.0;
  const auto trk = plan.tracking_instances(t);
  for (std::size_t r = 0; r < trk.size(); ++r) {
    const auto& gt = plan.tracks()[trk[r]];
    if (gt.visible(t)) {
      const auto target = oracle::to_double(gt.masks[t - 1]->data());
      loss += 2 * oracle::cross_entropy(row(p.class_logits, r), gt.cls - 1) +
              5 * oracle::bce_mean(row(p.mask_logits, r), target) + 5 * oracle::dice(row(p.mask_logits, r), target);
    } else {
      loss += 2 * oracle::cross_entropy(row(p.class_logits, r), K);
    }
  }
  std::vector<std::size_t> det;
  for (std::size_t i = 0; i < plan.instances(); ++i)
    if (t <= plan.t_sample()[i] && plan.tracks()[i].visible(t)) det.push_back(i);
  const std::size_t nq = p.num_detection();
  REQUIRE(det.size() <= nq);
  std::vector<std::size_t> perm(nq);
  std::iota(perm.begin(), perm.end(), 0);
  double best_cost = INFINITY, best_loss = 0.0;
  do {
    double cost = 0.0, l = 0.0;
    std::vector<bool> used(nq, false);
    for (std::size_t g = 0; g < det.size(); ++g) {
      const std::size_t q = perm[g], r = p.num_tracking + q;
      used[q] = true;
      const auto& gt = plan.tracks()[det[g]];
      const auto target = oracle::to_double(gt.masks[t - 1]->data());
      const double ce = oracle::cross_entropy(row(p.class_logits, r), gt.cls - 1);
      const double bce = oracle::bce_mean(row(p.mask_logits, r), target);
      const double dc = oracle::dice(row(p.mask_logits, r), target);
      cost += -2 * std::exp(-ce) + 5 * bce + 5 * dc;
      l += 2 * ce + 5 * bce + 5 * dc;
    }
    for (std::size_t q = 0; q < nq; ++q)
      if (!used[q]) l += 2 * oracle::cross_entropy(row(p.class_logits, p.num_tracking + q), K);
    if (cost < best_cost - 1e-12) {
      best_cost = cost;
      best_loss = l;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return loss + best_loss;
}

}  // namespace

TEST_CASE("switch frames are drawn from visible frames") {
  ausm::Rng rng(1);
  const std::vector<GroundTruthTrack> tracks{track(1, 1, {0, 1, 0, 1, 1}, rng), track(2, 2, {1, 0, 0, 0, 0}, rng)};
  std::vector<int> hist(6, 0);
  for (int i = 0; i < 3000; ++i) {
    const auto ts = sample_timesteps(tracks, 5, rng);
    CHECK(tracks[0].visible(ts[0]));
    CHECK(ts[1] == 1);
    ++hist[ts[0]];
  }
  CHECK(hist[1] == 0);
  CHECK(hist[3] == 0);
  for (int f : {2, 4, 5}) CHECK(std::abs(hist[f] - 1000) < 120);
  const std::vector<GroundTruthTrack> never{track(3, 1, {0, 0}, rng)};
  CHECK_THROWS_AS(sample_timesteps(never, 2, rng), InputError);
  CHECK_THROWS_AS(sample_timesteps(tracks, 4, rng), InputError);
}

TEST_CASE("plan memberships follow the switch frame") {
  ausm::Rng rng(2);
  const TeacherForcingPlan plan =
      make_plan({track(1, 1, {1, 1, 1, 1}, rng), track(2, 2, {0, 1, 0, 1}, rng), track(3, 3, {1, 1, 1, 1}, rng)},
                {2, 4, 1}, 4);
  CHECK(plan.memory_instances(0).empty());
  CHECK(plan.memory_instances(1) == std::vector<std::size_t>{2});
  CHECK(plan.memory_instances(2) == std::vector<std::size_t>{0, 2});
  CHECK(plan.memory_instances(4) == std::vector<std::size_t>{0, 1, 2});
  CHECK(plan.detection_targets(1) == std::vector<std::size_t>{0, 2});
  CHECK(plan.detection_targets(2) == std::vector<std::size_t>{0, 1});
  CHECK(plan.detection_targets(3).empty());  // instance 1 invisible at 3
  CHECK(plan.detection_targets(4) == std::vector<std::size_t>{1});
  for (std::size_t t = 1; t <= 4; ++t) CHECK(plan.tracking_instances(t) == plan.memory_instances(t - 1));
  // A_t rows are the ID rows of M_t in instance order; invisible members carry empty masks
  const Tensor A3 = plan.allocation(3);
  REQUIRE(A3.dim(0) == 2);
  CHECK(std::equal(A3.slice(1).begin(), A3.slice(1).end(), plan.ids().slice(2).begin()));
  const MaskStack M4 = plan.memory_masks(4);
  CHECK(M4.count() == 3);
  CHECK(M4.mask(1) == *plan.tracks()[1].masks[3]);
  const nlohmann::json j = nlohmann::json::parse(plan.to_json());
  CHECK(j["frames"][2]["trk"] == nlohmann::json{0, 2});
  CHECK(j["instances"][1]["t_sample"] == 4);
}

TEST_CASE("distinct pool rows per instance") {
  ausm::Rng rng(3);
  const TeacherForcingPlan plan =
      make_plan({track(1, 1, {1, 1}, rng), track(2, 1, {1, 1}, rng), track(3, 1, {1, 1}, rng)}, {1, 1, 2}, 2);
  std::vector<std::size_t> idx = plan.pool_index();
  std::sort(idx.begin(), idx.end());
  CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
}

TEST_CASE("losses match an independent computation") {
  ausm::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t T = 1 + rng.below(4);
    std::vector<GroundTruthTrack> tracks;
    const std::size_t n = 1 + rng.below(3);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> vis(T);
      for (auto& v : vis) v = rng.below(3) != 0;
      vis[rng.below(T)] = 1;
      tracks.push_back(track(i + 1, 1 + rng.below(K), vis, rng));
    }
    const auto ts = sample_timesteps(tracks, T, rng);
    const TeacherForcingPlan plan = make_plan(tracks, ts, T, trial);
    std::vector<FramePrediction> preds;
    for (std::size_t t = 1; t <= T; ++t) preds.push_back(random_prediction(plan.tracking_instances(t).size(), 4, rng));
    const LossReport rep = score_losses(preds, plan);
    double total = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
      const double ref = reference_frame_loss(preds[t - 1], plan, t);
      const double got = rep.frames[t - 1].tracking + rep.frames[t - 1].detection;
      CHECK(got == doctest::Approx(ref).epsilon(1e-7));  // float intermediates
      total += ref;
    }
    CHECK(rep.total == doctest::Approx(total).epsilon(1e-7));
  }
}

TEST_CASE("confident correct predictions drive the loss to zero") {
  ausm::Rng rng(5);
  const TeacherForcingPlan plan = make_plan({track(1, 2, {1, 1, 1}, rng), track(2, 1, {1, 1, 1}, rng)}, {1, 2}, 3);
  std::vector<FramePrediction> preds;
  for (std::size_t t = 1; t <= 3; ++t) {
    const auto trk = plan.tracking_instances(t);
    const auto det = plan.detection_targets(t);
    FramePrediction p;
    const std::size_t n = trk.size() + 3;
    p.num_tracking = trk.size();
    p.class_logits = Tensor({n, K + 1}, -40.0f);
    p.mask_logits = Tensor({n, H, W}, -40.0f);
    auto fill = [&](std::size_t row, const GroundTruthTrack& g) {
      p.class_logits.slice(row)[g.cls - 1] = 40.0f;
      const Tensor& m = *g.masks[t - 1];
      for (std::size_t i = 0; i < m.size(); ++i) p.mask_logits.slice(row)[i] = m[i] > 0 ? 40.0f : -40.0f;
    };
    for (std::size_t r = 0; r < trk.size(); ++r) fill(r, plan.tracks()[trk[r]]);
    for (std::size_t q = 0; q < 3; ++q) {
      if (q < det.size())
        fill(trk.size() + q, plan.tracks()[det[q]]);
      else
        p.class_logits.slice(trk.size() + q)[K] = 40.0f;
    }
    preds.push_back(std::move(p));
  }
  CHECK(score_losses(preds, plan).total < 1e-3);
}

TEST_CASE("empty frames only score background") {
  ausm::Rng rng(6);
  const TeacherForcingPlan plan = make_plan({}, {}, 2);
  std::vector<FramePrediction> preds{random_prediction(0, 3, rng), random_prediction(0, 3, rng)};
  const LossReport rep = score_losses(preds, plan);
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(rep.frames[t].tracking == 0.0);
    double bg = 0.0;
    for (std::size_t q = 0; q < 3; ++q) bg += 2 * oracle::cross_entropy(oracle::to_double(preds[t].class_logits.slice(q)), K);
    CHECK(rep.frames[t].detection == doctest::Approx(bg).epsilon(1e-9));
  }
}

TEST_CASE("row count mismatch is a contract error") {
  ausm::Rng rng(7);
  const TeacherForcingPlan plan = make_plan({track(1, 1, {1, 1}, rng)}, {1}, 2);
  std::vector<FramePrediction> preds{random_prediction(0, 2, rng), random_prediction(0, 2, rng)};
  CHECK_THROWS_AS(score_losses(preds, plan), ContractError);
  CHECK_THROWS_AS(score_losses(std::span(preds).first(1), plan), ContractError);
}
