#pragma once

// Straightforward double-precision reference implementations used as test
// oracles. They follow the defining formulas directly and share no code
// with the library beyond the Tensor container.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ausm/random.hpp"
#include "ausm/tensor.hpp"

namespace oracle {

using ausm::Tensor;

inline Tensor random_tensor(ausm::Shape shape, ausm::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

inline double softplus(double x) { return x > 20 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct SsmWeights {
  Tensor A_log, W_delta, b_delta, W_B, W_C, D_skip;
};

struct SsmRun {
  std::vector<std::vector<double>> y;  // [T][D]
  std::vector<double> h;               // [D*S]
};

/// Direct recurrence of the selective SSM in double precision.
inline SsmRun ssm(const Tensor& x, const std::vector<double>& h0, const SsmWeights& w) {
  const std::size_t T = x.dim(0), D = x.dim(1), S = w.A_log.dim(1);
  SsmRun r;
  r.h = h0;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> delta(D), B(S, 0.0), C(S, 0.0);
    for (std::size_t j = 0; j < D; ++j) {
      double acc = w.b_delta[j];
      for (std::size_t i = 0; i < D; ++i) acc += double(x[t * D + i]) * w.W_delta[i * D + j];
      delta[j] = softplus(acc);
    }
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t i = 0; i < D; ++i) {
        B[s] += double(x[t * D + i]) * w.W_B[i * S + s];
        C[s] += double(x[t * D + i]) * w.W_C[i * S + s];
      }
    std::vector<double> y(D);
    for (std::size_t d = 0; d < D; ++d) {
      double acc = 0.0;
      for (std::size_t s = 0; s < S; ++s) {
        const double A = -std::exp(double(w.A_log[d * S + s]));
        double& h = r.h[d * S + s];
        h = std::exp(delta[d] * A) * h + delta[d] * B[s] * x[t * D + d];
        acc += C[s] * h;
      }
      y[d] = acc + double(w.D_skip[d]) * x[t * D + d];
    }
    r.y.push_back(y);
  }
  return r;
}

/// Minimum over all injective row->column maps (rows <= cols) or
/// column->row maps (rows > cols) by exhaustive permutation.
inline double brute_force_assignment(const std::vector<double>& cost, std::size_t rows, std::size_t cols) {
  const bool transpose = rows > cols;
  const std::size_t r = transpose ? cols : rows, c = transpose ? rows : cols;
  auto at = [&](std::size_t i, std::size_t j) { return transpose ? cost[j * cols + i] : cost[i * cols + j]; };
  std::vector<std::size_t> perm(c);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double sum = 0.0;
    for (std::size_t i = 0; i < r; ++i) sum += at(i, perm[i]);
    best = std::min(best, sum);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// S[p, :] = sum_i M_i[p] A_i / (eps + sum_i M_i[p]) for masks [N, P], A [N, D].
inline std::vector<double> mark(const Tensor& A, const Tensor& M, double eps) {
  const std::size_t N = A.dim(0), D = A.dim(1), P = N ? M.size() / N : 0;
  std::vector<double> out(P * D, 0.0);
  for (std::size_t p = 0; p < P; ++p) {
    double denom = eps;
    for (std::size_t i = 0; i < N; ++i) denom += M[i * P + p];
    for (std::size_t d = 0; d < D; ++d) {
      double num = 0.0;
      for (std::size_t i = 0; i < N; ++i) num += double(M[i * P + p]) * A[i * D + d];
      out[p * D + d] = num / denom;
    }
  }
  return out;
}

inline double bce_mean(const std::vector<double>& logits, const std::vector<double>& target) {
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = sigmoid(logits[i]);
    s += -(target[i] * std::log(p) + (1 - target[i]) * std::log(1 - p));
  }
  return s / double(logits.size());
}

inline double dice(const std::vector<double>& logits, const std::vector<double>& target) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = sigmoid(logits[i]);
    num += p * target[i];
    den += p + target[i];
  }
  return 1.0 - (2.0 * num + 1.0) / (den + 1.0);
}

inline double cross_entropy(const std::vector<double>& logits, std::size_t target) {
  double z = 0.0;
  for (double v : logits) z += std::exp(v);
  return -std::log(std::exp(logits[target]) / z);
}

inline std::vector<double> to_double(std::span<const float> v) { return {v.begin(), v.end()}; }

}  // namespace oracle
