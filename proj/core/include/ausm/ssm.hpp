#pragma once

#include <span>
#include <string>

#include "ausm/tensor.hpp"
#include "ausm/weights.hpp"

namespace ausm {

/// Chunk length of the parallel scan.
inline constexpr std::size_t kScanChunk = 8;

/// Diagonal selective SSM parameters for one layer.
///
/// Per input x_t (D channels):
///   delta_t = softplus(x_t W_delta + b_delta)            [D]
///   B_t = x_t W_B,  C_t = x_t W_C                        [S]
///   h_t[d, s] = exp(delta_t[d] A[d, s]) h_{t-1}[d, s] + delta_t[d] B_t[s] x_t[d]
///   y_t[d] = sum_s C_t[s] h_t[d, s] + D_skip[d] x_t[d]
/// with A = -exp(A_log), so every decay factor lies in (0, 1).
class SsmParams {
 public:
  SsmParams(Tensor A_log, Tensor W_delta, Tensor b_delta, Tensor W_B, Tensor W_C, Tensor D_skip);

  static SsmParams from_bundle(const WeightBundle& weights, const std::string& prefix);

  std::size_t D() const { return A_log_.dim(0); }
  std::size_t S() const { return A_log_.dim(1); }

  const Tensor& A_log() const noexcept { return A_log_; }
  const Tensor& A() const noexcept { return A_; }
  const Tensor& W_delta() const noexcept { return W_delta_; }
  const Tensor& b_delta() const noexcept { return b_delta_; }
  const Tensor& W_B() const noexcept { return W_B_; }
  const Tensor& W_C() const noexcept { return W_C_; }
  const Tensor& D_skip() const noexcept { return D_skip_; }

 private:
  Tensor A_log_, A_, W_delta_, b_delta_, W_B_, W_C_, D_skip_;
};

/// Input-dependent coefficients of a batch of steps: x, delta are [rows, D];
/// B, C are [rows, S].
struct SelectiveInputs {
  Tensor x;
  Tensor delta;
  Tensor B;
  Tensor C;
};

/// Evaluates delta, B and C for every row of x ([rows, D]).
SelectiveInputs selective_inputs(const Tensor& x, const SsmParams& p);

struct SsmStepResult {
  Tensor y;  // [D]
  Tensor h;  // [D, S]
};

struct SsmScanResult {
  Tensor y;       // [T, D]
  Tensor h_last;  // [D, S]
};

SsmStepResult ssm_step(const Tensor& x, const Tensor& h_prev, const SsmParams& p);

/// T chained ssm_step calls.
SsmScanResult ssm_scan_sequential(const Tensor& x, const Tensor& h0, const SsmParams& p);

/// Chunked scan: per-chunk aggregates (prod a, local b) are formed
/// independently, chunk carries are combined with the associative operator
/// (a_i, b_i) . (a_j, b_j) = (a_j a_i, a_j b_i + b_j), then each chunk replays
/// its steps from its carry.
SsmScanResult ssm_scan_parallel(const Tensor& x, const Tensor& h0, const SsmParams& p,
                                std::size_t chunk = kScanChunk);

/// Log-depth inclusive scan over (a_t, b_t) pairs in double precision. Slow;
/// kept as an independent reference for the other two scans.
SsmScanResult ssm_scan_associative(const Tensor& x, const Tensor& h0, const SsmParams& p);

namespace detail {

/// Sequential recurrence over `steps` time steps for `lanes` independent
/// pixels. inputs hold [steps, lanes, *] rows; h is [lanes, D, S] and is
/// advanced in place; y receives [steps, lanes, D].
void scan_lanes_sequential(const SelectiveInputs& in, std::size_t steps, std::size_t lanes, const SsmParams& p,
                           std::span<float> h, std::span<float> y);

/// Same contract as scan_lanes_sequential, computed with the chunked scan.
void scan_lanes_chunked(const SelectiveInputs& in, std::size_t steps, std::size_t lanes, const SsmParams& p,
                        std::span<float> h, std::span<float> y, std::size_t chunk);

}  // namespace detail

}  // namespace ausm
