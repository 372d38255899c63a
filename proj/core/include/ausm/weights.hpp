#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ausm/io.hpp"
#include "ausm/ops.hpp"
#include "ausm/tensor.hpp"

namespace ausm {

/// Model hyperparameters. Defaults follow the full-size configuration:
/// 100 detection queries, 100 ID vectors, 6 compressor and 6 decoder layers,
/// 256 channels on a stride-8 grid.
struct ModelDims {
  std::size_t D = 256;       // channel width
  std::size_t S = 16;        // SSM state width per channel
  std::size_t L_comp = 6;    // history compressor layers
  std::size_t L_dec = 6;     // layers in each decoder
  std::size_t N_det = 100;   // detection queries
  std::size_t N_id = 100;    // ID vector pool size
  std::size_t K = 8;         // foreground classes (background is index K)
  std::size_t P = 8;         // backbone patch size
  std::size_t ffn_hidden = 0;  // 0 selects 2 * D

  std::size_t hidden() const noexcept { return ffn_hidden ? ffn_hidden : 2 * D; }

  /// Throws ConfigError when any count is zero.
  void validate() const;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

enum class InitKind { Uniform, Ones, Zeros };

struct ParamSpec {
  std::string path;
  Shape shape;
  InitKind init = InitKind::Uniform;
  std::size_t fan_in = 1;
};

/// Every parameter the forward pass reads, with its shape and initializer.
std::vector<ParamSpec> parameter_specs(const ModelDims& dims);

/// Named parameter tensors plus the dimensions they were built for.
class WeightBundle {
 public:
  WeightBundle() = default;
  WeightBundle(ModelDims dims, std::uint64_t seed, std::map<std::string, Tensor> tensors);

  /// Deterministic initialization: each tensor draws from a counter stream
  /// keyed by (seed, path), uniform in +-1/sqrt(fan_in).
  static WeightBundle initialize(const ModelDims& dims, std::uint64_t seed);

  const ModelDims& dims() const noexcept { return dims_; }
  std::uint64_t seed() const noexcept { return seed_; }

  bool contains(const std::string& path) const { return tensors_.count(path) != 0; }
  const Tensor& get(const std::string& path) const;
  /// Replaces an existing parameter; the new tensor must keep its shape.
  void set(const std::string& path, Tensor value);

  const std::map<std::string, Tensor>& tensors() const noexcept { return tensors_; }

  /// Throws ContractError if any required parameter is missing or misshapen.
  void validate() const;

  NormParams norm(const std::string& prefix) const;
  AttentionParams attention(const std::string& prefix) const;
  FeedForwardParams feed_forward(const std::string& prefix) const;

  friend bool operator==(const WeightBundle&, const WeightBundle&) = default;

 private:
  ModelDims dims_;
  std::uint64_t seed_ = 0;
  std::map<std::string, Tensor> tensors_;
};

/// ATB1 round trip; dims and seed travel in the manifest metadata.
Bytes encode_weights(const WeightBundle& weights);
WeightBundle decode_weights(std::span<const std::byte> bytes);

namespace param {
std::string compressor_layer(std::size_t l);
std::string history_decoder_layer(std::size_t l);
std::string pixel_decoder_layer(std::size_t l);
inline constexpr const char* kPatchWeight = "backbone.patch.weight";
inline constexpr const char* kPatchBias = "backbone.patch.bias";
inline constexpr const char* kInitialFrame = "backbone.initial_frame";
inline constexpr const char* kDetQueries = "pixel_decoder.det_queries";
inline constexpr const char* kIdPool = "pixel_decoder.id_pool";
}  // namespace param

}  // namespace ausm
