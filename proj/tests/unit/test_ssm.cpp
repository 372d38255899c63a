#include <doctest.h>

#include "ausm/error.hpp"
#include "ausm/ssm.hpp"
#include "oracles.hpp"

using namespace ausm;

namespace {

struct Case {
  oracle::SsmWeights w;
  SsmParams p;
};

Case make_case(std::size_t D, std::size_t S, ausm::Rng& rng, double b_delta = 0.0) {
  oracle::SsmWeights w{oracle::random_tensor({D, S}, rng, -2, 1), oracle::random_tensor({D, D}, rng, -0.5, 0.5),
                       Tensor({D}, static_cast<float>(b_delta)),   oracle::random_tensor({D, S}, rng),
                       oracle::random_tensor({D, S}, rng),        oracle::random_tensor({D}, rng)};
  SsmParams p(w.A_log, w.W_delta, w.b_delta, w.W_B, w.W_C, w.D_skip);
  return {w, p};
}

}  // namespace

TEST_CASE("sequential scan follows the recurrence") {
  ausm::Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t T = 1 + rng.below(12), D = 1 + rng.below(6), S = 1 + rng.below(5);
    Case c = make_case(D, S, rng);
    const Tensor x = oracle::random_tensor({T, D}, rng);
    const Tensor h0 = oracle::random_tensor({D, S}, rng);
    const SsmScanResult r = ssm_scan_sequential(x, h0, c.p);
    const oracle::SsmRun ref = oracle::ssm(x, oracle::to_double(h0.data()), c.w);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < D; ++d) CHECK(r.y[t * D + d] == doctest::Approx(ref.y[t][d]).epsilon(1e-5));
    for (std::size_t i = 0; i < D * S; ++i) CHECK(r.h_last[i] == doctest::Approx(ref.h[i]).epsilon(1e-5));
  }
}

TEST_CASE("ssm_step chains into the sequential scan") {
  ausm::Rng rng(2);
  Case c = make_case(4, 3, rng);
  const Tensor x = oracle::random_tensor({5, 4}, rng);
  Tensor h({4, 3});
  const SsmScanResult r = ssm_scan_sequential(x, h, c.p);
  for (std::size_t t = 0; t < 5; ++t) {
    const SsmStepResult s = ssm_step(Tensor({4}, std::vector<float>(x.slice(t).begin(), x.slice(t).end())), h, c.p);
    for (std::size_t d = 0; d < 4; ++d) CHECK(s.y[d] == r.y[t * 4 + d]);
    h = s.h;
  }
  CHECK(h == r.h_last);
}

TEST_CASE("chunked and associative scans agree with the sequential scan") {
  ausm::Rng rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t T = 1 + rng.below(40), D = 1 + rng.below(6), S = 1 + rng.below(5);
    const std::size_t chunk = 1 + rng.below(9);
    Case c = make_case(D, S, rng, trial % 5 == 0 ? -30.0 : 0.0);
    const Tensor x = oracle::random_tensor({T, D}, rng);
    const Tensor h0 = trial % 2 ? oracle::random_tensor({D, S}, rng) : Tensor({D, S});
    const SsmScanResult seq = ssm_scan_sequential(x, h0, c.p);
    const SsmScanResult par = ssm_scan_parallel(x, h0, c.p, chunk);
    const SsmScanResult asc = ssm_scan_associative(x, h0, c.p);
    CHECK(max_abs_diff(seq.y, par.y) <= 1e-5);
    CHECK(max_abs_diff(seq.h_last, par.h_last) <= 1e-5);
    CHECK(max_abs_diff(seq.y, asc.y) <= 1e-5);
    CHECK(max_abs_diff(seq.h_last, asc.h_last) <= 1e-5);
  }
}

TEST_CASE("chunked scan from a zero state is bit identical up to two chunks") {
  ausm::Rng rng(4);
  for (std::size_t T = 1; T <= 2 * kScanChunk; ++T) {
    Case c = make_case(5, 4, rng);
    const Tensor x = oracle::random_tensor({T, 5}, rng);
    const Tensor h0({5, 4});
    const SsmScanResult seq = ssm_scan_sequential(x, h0, c.p);
    const SsmScanResult par = ssm_scan_parallel(x, h0, c.p);
    CHECK(seq.y == par.y);
    CHECK(seq.h_last == par.h_last);
  }
}

TEST_CASE("vanishing step size leaves the state unchanged") {
  ausm::Rng rng(5);
  Case c = make_case(3, 2, rng, -60.0);
  const Tensor x = oracle::random_tensor({6, 3}, rng);
  const Tensor h0 = oracle::random_tensor({3, 2}, rng);
  const SsmScanResult r = ssm_scan_parallel(x, h0, c.p);
  CHECK(max_abs_diff(r.h_last, h0) <= 1e-6);
}

TEST_CASE("decay factors lie in (0, 1)") {
  ausm::Rng rng(6);
  Case c = make_case(4, 4, rng);
  for (float a : c.p.A().data()) CHECK(a < 0.0f);
}

TEST_CASE("scan shape errors") {
  ausm::Rng rng(7);
  Case c = make_case(3, 2, rng);
  CHECK_THROWS_AS(ssm_scan_sequential(Tensor({4, 2}), Tensor({3, 2}), c.p), DimensionError);
  CHECK_THROWS_AS(ssm_scan_parallel(Tensor({4, 3}), Tensor({3, 3}), c.p), DimensionError);
  CHECK_THROWS(ssm_scan_parallel(Tensor({4, 3}), Tensor({3, 2}), c.p, 0));
}
