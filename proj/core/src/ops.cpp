#include "ausm/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ausm/error.hpp"

namespace ausm {

float softplus(float x) {
  // log(1 + e^x) without overflow for large x.
  const double v = x;
  return static_cast<float>(v > 20.0 ? v : std::log1p(std::exp(v)));
}

float sigmoid(float x) {
  const double v = x;
  return static_cast<float>(v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)));
}

float gelu(float x) {
  const double v = x;
  return static_cast<float>(0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))));
}

void linear_rows(std::span<const float> x, std::size_t rows, const Tensor& W, const Tensor* b,
                 std::span<float> y) {
  const std::size_t din = W.dim(0);
  const std::size_t dout = W.dim(1);
  const float* w = W.data().data();
  std::vector<double> acc(dout);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* xr = x.data() + r * din;
    if (b) {
      for (std::size_t j = 0; j < dout; ++j) acc[j] = (*b)[j];
    } else {
      std::fill(acc.begin(), acc.end(), 0.0);
    }
    for (std::size_t k = 0; k < din; ++k) {
      const double xv = xr[k];
      const float* wr = w + k * dout;
      for (std::size_t j = 0; j < dout; ++j) acc[j] += xv * wr[j];
    }
    float* yr = y.data() + r * dout;
    for (std::size_t j = 0; j < dout; ++j) yr[j] = static_cast<float>(acc[j]);
  }
}

namespace {

void check_linear(const Tensor& x, const Tensor& W, const Tensor* b) {
  if (W.rank() != 2 || x.rank() == 0 || x.shape().back() != W.dim(0)) {
    throw DimensionError("linear: input shape " + shape_str(x.shape()) + " incompatible with weight shape " +
                         shape_str(W.shape()));
  }
  if (b && (b->rank() != 1 || b->dim(0) != W.dim(1))) {
    throw DimensionError("linear: bias shape " + shape_str(b->shape()) + " incompatible with weight shape " +
                         shape_str(W.shape()));
  }
}

Tensor linear_impl(const Tensor& x, const Tensor& W, const Tensor* b) {
  check_linear(x, W, b);
  Shape out = x.shape();
  out.back() = W.dim(1);
  Tensor y(out);
  linear_rows(x.data(), x.size() / W.dim(0), W, b, y.data());
  return y;
}

}  // namespace

Tensor linear(const Tensor& x, const Tensor& W, const Tensor& b) { return linear_impl(x, W, &b); }
Tensor linear(const Tensor& x, const Tensor& W) { return linear_impl(x, W, nullptr); }

void softmax_inplace(std::span<float> row) {
  if (row.empty()) return;
  const float mx = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  std::vector<double> e(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    e[i] = std::exp(static_cast<double>(row[i]) - mx);
    sum += e[i];
  }
  for (std::size_t i = 0; i < row.size(); ++i) row[i] = static_cast<float>(e[i] / sum);
}

Tensor softmax(const Tensor& x) {
  if (x.rank() == 0) throw DimensionError("softmax of a rank-0 tensor");
  Tensor y = x;
  const std::size_t n = x.shape().back();
  if (n == 0) return y;
  for (std::size_t r = 0; r < x.size() / n; ++r) softmax_inplace(y.data().subspan(r * n, n));
  return y;
}

void layer_norm_rows(std::span<const float> x, std::size_t rows, const Tensor& gamma, const Tensor& beta,
                     float eps, std::span<float> y) {
  const std::size_t d = gamma.size();
  for (std::size_t r = 0; r < rows; ++r) {
    const float* xr = x.data() + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += xr[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = xr[i] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    float* yr = y.data() + r * d;
    for (std::size_t i = 0; i < d; ++i) {
      yr[i] = static_cast<float>((xr[i] - mean) * inv * gamma[i] + beta[i]);
    }
  }
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  if (x.rank() == 0 || gamma.rank() != 1 || beta.shape() != gamma.shape() || x.shape().back() != gamma.dim(0)) {
    throw DimensionError("layer_norm: input " + shape_str(x.shape()) + " with gamma " + shape_str(gamma.shape()) +
                         " and beta " + shape_str(beta.shape()));
  }
  Tensor y(x.shape());
  layer_norm_rows(x.data(), x.size() / gamma.size(), gamma, beta, eps, y.data());
  return y;
}

Tensor layer_norm(const Tensor& x, const NormParams& p) { return layer_norm(x, *p.gamma, *p.beta); }

bool AttentionMask::row_blocked(std::size_t q) const {
  const auto row = allowed_.begin() + static_cast<std::ptrdiff_t>(q * keys_);
  return std::none_of(row, row + static_cast<std::ptrdiff_t>(keys_), [](std::uint8_t a) { return a != 0; });
}

namespace {

Tensor attention_impl(const Tensor& Q, const Tensor& K, const Tensor& V, const AttentionMask* mask) {
  if (Q.rank() != 2 || K.rank() != 2 || V.rank() != 2 || Q.dim(1) != K.dim(1) || K.dim(0) != V.dim(0)) {
    throw DimensionError("attention: Q " + shape_str(Q.shape()) + ", K " + shape_str(K.shape()) + ", V " +
                         shape_str(V.shape()));
  }
  const std::size_t nq = Q.dim(0), nk = K.dim(0), d = Q.dim(1), dv = V.dim(1);
  if (mask && (mask->queries() != nq || mask->keys() != nk)) {
    throw DimensionError("attention: mask is " + std::to_string(mask->queries()) + "x" +
                         std::to_string(mask->keys()) + " but scores are " + std::to_string(nq) + "x" +
                         std::to_string(nk));
  }
  if (nk == 0) throw ContractError("attention: no keys");

  // K transposed so the score loop streams contiguously over keys.
  std::vector<float> kt(d * nk);
  for (std::size_t j = 0; j < nk; ++j)
    for (std::size_t k = 0; k < d; ++k) kt[k * nk + j] = K[j * d + k];

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor out({nq, dv});
  std::vector<double> scores(nk);
  std::vector<double> acc(dv);
  for (std::size_t i = 0; i < nq; ++i) {
    if (mask && mask->row_blocked(i)) {
      throw ContractError("attention: query row " + std::to_string(i) +
                          " has every key blocked; apply the empty-mask fallback first");
    }
    std::fill(scores.begin(), scores.end(), 0.0);
    const float* qi = Q.data().data() + i * d;
    for (std::size_t k = 0; k < d; ++k) {
      const double qv = qi[k];
      const float* kr = kt.data() + k * nk;
      for (std::size_t j = 0; j < nk; ++j) scores[j] += qv * kr[j];
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nk; ++j) {
      if (mask && !mask->allowed(i, j)) {
        scores[j] = -std::numeric_limits<double>::infinity();
      } else {
        scores[j] *= scale;
        mx = std::max(mx, scores[j]);
      }
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < nk; ++j) {
      scores[j] = std::exp(scores[j] - mx);
      sum += scores[j];
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < nk; ++j) {
      const double p = scores[j] / sum;
      if (p == 0.0) continue;
      const float* vj = V.data().data() + j * dv;
      for (std::size_t k = 0; k < dv; ++k) acc[k] += p * vj[k];
    }
    float* oi = out.data().data() + i * dv;
    for (std::size_t k = 0; k < dv; ++k) oi[k] = static_cast<float>(acc[k]);
  }
  return out;
}

}  // namespace

Tensor attention(const Tensor& Q, const Tensor& K, const Tensor& V) { return attention_impl(Q, K, V, nullptr); }

Tensor attention(const Tensor& Q, const Tensor& K, const Tensor& V, const AttentionMask& mask) {
  return attention_impl(Q, K, V, &mask);
}

Tensor attention_block(const Tensor& queries, const Tensor& memory, const AttentionParams& p,
                       const AttentionMask* mask) {
  const Tensor q = linear(queries, *p.wq, *p.bq);
  const Tensor k = linear(memory, *p.wk, *p.bk);
  const Tensor v = linear(memory, *p.wv, *p.bv);
  const Tensor a = attention_impl(q, k, v, mask);
  return linear(a, *p.wo, *p.bo);
}

Tensor feed_forward(const Tensor& x, const FeedForwardParams& p) {
  Tensor h = linear(x, *p.w1, *p.b1);
  for (float& v : h.data()) v = gelu(v);
  return linear(h, *p.w2, *p.b2);
}

void add_inplace(Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace ausm
