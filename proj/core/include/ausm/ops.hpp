#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ausm/tensor.hpp"

namespace ausm {

inline constexpr float kLayerNormEps = 1e-5f;

float softplus(float x);
float sigmoid(float x);
float gelu(float x);

/// y[..., j] = sum_i x[..., i] * W[i, j] + b[j]. Accumulates in double.
Tensor linear(const Tensor& x, const Tensor& W, const Tensor& b);
Tensor linear(const Tensor& x, const Tensor& W);

/// Raw-buffer form of linear over `rows` contiguous input rows. `b` may be null.
void linear_rows(std::span<const float> x, std::size_t rows, const Tensor& W, const Tensor* b,
                 std::span<float> y);

/// Softmax over the last axis.
Tensor softmax(const Tensor& x);
void softmax_inplace(std::span<float> row);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = kLayerNormEps);
void layer_norm_rows(std::span<const float> x, std::size_t rows, const Tensor& gamma, const Tensor& beta,
                     float eps, std::span<float> y);

/// Boolean [Nq, Nk] grid of allowed attention edges.
class AttentionMask {
 public:
  AttentionMask(std::size_t queries, std::size_t keys, bool allowed = true)
      : queries_(queries), keys_(keys), allowed_(queries * keys, allowed ? 1 : 0) {}

  std::size_t queries() const noexcept { return queries_; }
  std::size_t keys() const noexcept { return keys_; }

  bool allowed(std::size_t q, std::size_t k) const { return allowed_[q * keys_ + k] != 0; }
  void set(std::size_t q, std::size_t k, bool allowed) { allowed_[q * keys_ + k] = allowed ? 1 : 0; }
  bool row_blocked(std::size_t q) const;

 private:
  std::size_t queries_;
  std::size_t keys_;
  std::vector<std::uint8_t> allowed_;
};

/// softmax(Q K^T / sqrt(D) + bias) V, where blocked entries get -inf bias.
/// Throws ContractError when a mask row blocks every key.
Tensor attention(const Tensor& Q, const Tensor& K, const Tensor& V);
Tensor attention(const Tensor& Q, const Tensor& K, const Tensor& V, const AttentionMask& mask);

struct NormParams {
  const Tensor* gamma = nullptr;
  const Tensor* beta = nullptr;
};

struct AttentionParams {
  const Tensor* wq = nullptr;
  const Tensor* bq = nullptr;
  const Tensor* wk = nullptr;
  const Tensor* bk = nullptr;
  const Tensor* wv = nullptr;
  const Tensor* bv = nullptr;
  const Tensor* wo = nullptr;
  const Tensor* bo = nullptr;
};

struct FeedForwardParams {
  const Tensor* w1 = nullptr;
  const Tensor* b1 = nullptr;
  const Tensor* w2 = nullptr;
  const Tensor* b2 = nullptr;
};

Tensor layer_norm(const Tensor& x, const NormParams& p);

/// Single-head projected attention: out = Wo * attention(Wq q, Wk kv, Wv kv) + bo.
/// `queries` is [Nq, D] and `memory` is [Nk, D].
Tensor attention_block(const Tensor& queries, const Tensor& memory, const AttentionParams& p,
                       const AttentionMask* mask = nullptr);

/// Two-layer GELU MLP applied to every row of x.
Tensor feed_forward(const Tensor& x, const FeedForwardParams& p);

/// In-place a += b. Shapes must match.
void add_inplace(Tensor& a, const Tensor& b);

}  // namespace ausm
