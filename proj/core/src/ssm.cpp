#include "ausm/ssm.hpp"

#include <cmath>
#include <vector>

#include "ausm/error.hpp"
#include "ausm/ops.hpp"
#include "ausm/parallel.hpp"

namespace ausm {

SsmParams::SsmParams(Tensor A_log, Tensor W_delta, Tensor b_delta, Tensor W_B, Tensor W_C, Tensor D_skip)
    : A_log_(std::move(A_log)),
      W_delta_(std::move(W_delta)),
      b_delta_(std::move(b_delta)),
      W_B_(std::move(W_B)),
      W_C_(std::move(W_C)),
      D_skip_(std::move(D_skip)) {
  if (A_log_.rank() != 2) throw DimensionError("A_log must be [D, S], got " + shape_str(A_log_.shape()));
  const std::size_t D = A_log_.dim(0), S = A_log_.dim(1);
  if (W_delta_.shape() != Shape{D, D} || b_delta_.shape() != Shape{D} || W_B_.shape() != Shape{D, S} ||
      W_C_.shape() != Shape{D, S} || D_skip_.shape() != Shape{D}) {
    throw DimensionError("SSM parameter shapes disagree with A_log " + shape_str(A_log_.shape()));
  }
  A_ = Tensor(A_log_.shape());
  for (std::size_t i = 0; i < A_.size(); ++i) A_[i] = -std::exp(A_log_[i]);
}

SsmParams SsmParams::from_bundle(const WeightBundle& w, const std::string& prefix) {
  return SsmParams(w.get(prefix + ".A_log"), w.get(prefix + ".W_delta"), w.get(prefix + ".b_delta"),
                   w.get(prefix + ".W_B"), w.get(prefix + ".W_C"), w.get(prefix + ".D_skip"));
}

SelectiveInputs selective_inputs(const Tensor& x, const SsmParams& p) {
  if (x.rank() != 2 || x.dim(1) != p.D()) {
    throw DimensionError("SSM input " + shape_str(x.shape()) + " does not match D = " + std::to_string(p.D()));
  }
  SelectiveInputs in;
  in.x = x;
  in.delta = linear(x, p.W_delta(), p.b_delta());
  for (float& v : in.delta.data()) v = softplus(v);
  in.B = linear(x, p.W_B());
  in.C = linear(x, p.W_C());
  return in;
}

namespace detail {

namespace {

// One recurrence step for one lane. h is [D, S]; the remaining pointers are
// the lane's rows of x / delta ([D]) and B / C ([S]).
inline void advance(const float* x, const float* delta, const float* B, const float* C, const float* A,
                    const float* D_skip, std::size_t D, std::size_t S, float* h, float* y) {
  for (std::size_t d = 0; d < D; ++d) {
    const float dt = delta[d];
    const double dtx = static_cast<double>(dt) * x[d];
    const float* a_row = A + d * S;
    float* h_row = h + d * S;
    double acc = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      const float a = std::exp(dt * a_row[s]);
      h_row[s] = static_cast<float>(static_cast<double>(a) * h_row[s] + dtx * B[s]);
      acc += static_cast<double>(C[s]) * h_row[s];
    }
    if (y) y[d] = static_cast<float>(acc + static_cast<double>(D_skip[d]) * x[d]);
  }
}

}  // namespace

void scan_lanes_sequential(const SelectiveInputs& in, std::size_t steps, std::size_t lanes, const SsmParams& p,
                           std::span<float> h, std::span<float> y) {
  const std::size_t D = p.D(), S = p.S();
  const float* A = p.A().data().data();
  const float* Dk = p.D_skip().data().data();
  parallel_for(lanes, [&](std::size_t begin, std::size_t end) {
    for (std::size_t l = begin; l < end; ++l) {
      for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t row = t * lanes + l;
        advance(in.x.data().data() + row * D, in.delta.data().data() + row * D, in.B.data().data() + row * S,
                in.C.data().data() + row * S, A, Dk, D, S, h.data() + l * D * S, y.data() + row * D);
      }
    }
  });
}

void scan_lanes_chunked(const SelectiveInputs& in, std::size_t steps, std::size_t lanes, const SsmParams& p,
                        std::span<float> h, std::span<float> y, std::size_t chunk) {
  if (chunk == 0) throw ConfigError("scan chunk length must be positive");
  const std::size_t D = p.D(), S = p.S(), DS = D * S;
  const std::size_t chunks = (steps + chunk - 1) / chunk;
  const float* A = p.A().data().data();
  const float* Dk = p.D_skip().data().data();
  const float* x = in.x.data().data();
  const float* delta = in.delta.data().data();
  const float* B = in.B.data().data();
  const float* C = in.C.data().data();

  parallel_for(lanes, [&](std::size_t begin, std::size_t end) {
    std::vector<float> carry(chunks * DS);
    std::vector<double> a_prod(chunks * DS);
    std::vector<float> b_local(chunks * DS);
    for (std::size_t l = begin; l < end; ++l) {
      float* hl = h.data() + l * DS;
      // Chunk aggregates from a zero state. The last chunk's aggregate is never needed.
      for (std::size_t c = 0; c + 1 < chunks; ++c) {
        double* ap = a_prod.data() + c * DS;
        float* bl = b_local.data() + c * DS;
        std::fill(ap, ap + DS, 1.0);
        std::fill(bl, bl + DS, 0.0f);
        for (std::size_t t = c * chunk; t < (c + 1) * chunk; ++t) {
          const std::size_t row = t * lanes + l;
          advance(x + row * D, delta + row * D, B + row * S, C + row * S, A, Dk, D, S, bl, nullptr);
          const float* dr = delta + row * D;
          for (std::size_t d = 0; d < D; ++d)
            for (std::size_t s = 0; s < S; ++s) ap[d * S + s] *= std::exp(dr[d] * A[d * S + s]);
        }
      }
      // Carries: carry_{c+1} = combine(carry_c, aggregate_c).
      std::copy(hl, hl + DS, carry.begin());
      for (std::size_t c = 1; c < chunks; ++c) {
        const float* prev = carry.data() + (c - 1) * DS;
        const double* ap = a_prod.data() + (c - 1) * DS;
        const float* bl = b_local.data() + (c - 1) * DS;
        float* cur = carry.data() + c * DS;
        for (std::size_t i = 0; i < DS; ++i) cur[i] = static_cast<float>(ap[i] * prev[i] + bl[i]);
      }
      // Replay each chunk from its carry.
      for (std::size_t c = 0; c < chunks; ++c) {
        float* hc = carry.data() + c * DS;
        const std::size_t stop = std::min(steps, (c + 1) * chunk);
        for (std::size_t t = c * chunk; t < stop; ++t) {
          const std::size_t row = t * lanes + l;
          advance(x + row * D, delta + row * D, B + row * S, C + row * S, A, Dk, D, S, hc, y.data() + row * D);
        }
        if (c + 1 == chunks) std::copy(hc, hc + DS, hl);
      }
    }
  });
}

}  // namespace detail

namespace {

void check_state(const Tensor& h, const SsmParams& p) {
  if (h.shape() != Shape{p.D(), p.S()}) {
    throw DimensionError("SSM state " + shape_str(h.shape()) + " does not match [" + std::to_string(p.D()) + ", " +
                         std::to_string(p.S()) + "]");
  }
}

Tensor as_rows(const Tensor& x, std::size_t D) {
  if (x.rank() == 1 && x.dim(0) == D) return x.reshaped({1, D});
  if (x.rank() == 2 && x.dim(1) == D) return x;
  throw DimensionError("SSM input " + shape_str(x.shape()) + " does not match D = " + std::to_string(D));
}

}  // namespace

SsmStepResult ssm_step(const Tensor& x, const Tensor& h_prev, const SsmParams& p) {
  check_state(h_prev, p);
  const Tensor rows = as_rows(x, p.D());
  if (rows.dim(0) != 1) throw DimensionError("ssm_step takes a single [D] input");
  const SelectiveInputs in = selective_inputs(rows, p);
  SsmStepResult r{Tensor({p.D()}), h_prev};
  detail::scan_lanes_sequential(in, 1, 1, p, r.h.data(), r.y.data());
  return r;
}

SsmScanResult ssm_scan_sequential(const Tensor& x, const Tensor& h0, const SsmParams& p) {
  check_state(h0, p);
  const Tensor rows = as_rows(x, p.D());
  const std::size_t T = rows.dim(0);
  if (T == 0) throw ContractError("scan needs T >= 1");
  const SelectiveInputs in = selective_inputs(rows, p);
  SsmScanResult r{Tensor({T, p.D()}), h0};
  detail::scan_lanes_sequential(in, T, 1, p, r.h_last.data(), r.y.data());
  return r;
}

SsmScanResult ssm_scan_parallel(const Tensor& x, const Tensor& h0, const SsmParams& p, std::size_t chunk) {
  check_state(h0, p);
  const Tensor rows = as_rows(x, p.D());
  const std::size_t T = rows.dim(0);
  if (T == 0) throw ContractError("scan needs T >= 1");
  const SelectiveInputs in = selective_inputs(rows, p);
  SsmScanResult r{Tensor({T, p.D()}), h0};
  detail::scan_lanes_chunked(in, T, 1, p, r.h_last.data(), r.y.data(), chunk);
  return r;
}

SsmScanResult ssm_scan_associative(const Tensor& x, const Tensor& h0, const SsmParams& p) {
  check_state(h0, p);
  const Tensor rows = as_rows(x, p.D());
  const std::size_t T = rows.dim(0), D = p.D(), S = p.S(), DS = D * S;
  if (T == 0) throw ContractError("scan needs T >= 1");
  const SelectiveInputs in = selective_inputs(rows, p);

  std::vector<double> a(T * DS), b(T * DS);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t s = 0; s < S; ++s) {
        const double dt = in.delta[t * D + d];
        a[t * DS + d * S + s] = std::exp(dt * p.A()[d * S + s]);
        b[t * DS + d * S + s] = dt * in.B[t * S + s] * in.x[t * D + d];
      }
  // Hillis-Steele: after the pass with offset k, element t holds the
  // composition of elements (t - 2k, t].
  for (std::size_t k = 1; k < T; k *= 2) {
    std::vector<double> na = a, nb = b;
    for (std::size_t t = k; t < T; ++t)
      for (std::size_t i = 0; i < DS; ++i) {
        const double ai = a[(t - k) * DS + i], bi = b[(t - k) * DS + i];
        const double aj = a[t * DS + i], bj = b[t * DS + i];
        na[t * DS + i] = aj * ai;
        nb[t * DS + i] = aj * bi + bj;
      }
    a.swap(na);
    b.swap(nb);
  }
  SsmScanResult r{Tensor({T, D}), Tensor({D, S})};
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) {
      double acc = 0.0;
      for (std::size_t s = 0; s < S; ++s) {
        const std::size_t i = d * S + s;
        const double ht = a[t * DS + i] * h0[i] + b[t * DS + i];
        acc += static_cast<double>(in.C[t * S + s]) * ht;
        if (t + 1 == T) r.h_last[i] = static_cast<float>(ht);
      }
      r.y[t * D + d] = static_cast<float>(acc + static_cast<double>(p.D_skip()[d]) * in.x[t * D + d]);
    }
  return r;
}

}  // namespace ausm
