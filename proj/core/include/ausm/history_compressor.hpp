#pragma once

#include <vector>

#include "ausm/io.hpp"
#include "ausm/ssm.hpp"
#include "ausm/tensor.hpp"
#include "ausm/weights.hpp"

namespace ausm {

/// Fixed-size temporal memory: one [H, W, D, S] SSM hidden state per
/// compressor layer. Its size never depends on how many frames were consumed.
class CompressorState {
 public:
  CompressorState() = default;
  explicit CompressorState(std::vector<Tensor> hidden);

  static CompressorState zeros(std::size_t H, std::size_t W, const ModelDims& dims);

  std::size_t layers() const noexcept { return hidden_.size(); }
  const Tensor& hidden(std::size_t layer) const { return hidden_.at(layer); }
  Tensor& hidden(std::size_t layer) { return hidden_.at(layer); }

  std::size_t element_count() const;
  bool all_finite() const;

  NamedTensors to_named() const;
  static CompressorState from_named(const NamedTensors& tensors);
  Bytes serialize() const { return encode_atb(to_named()); }
  static CompressorState deserialize(std::span<const std::byte> bytes);

  friend bool operator==(const CompressorState&, const CompressorState&) = default;

 private:
  std::vector<Tensor> hidden_;
};

struct CompressorStepResult {
  Tensor F;  // [H, W, D]
  CompressorState state;
};

struct CompressorRunResult {
  Tensor F;  // [T, H, W, D]
  CompressorState state;
};

/// One frame through every layer: pre-norm temporal SSM per pixel (using and
/// advancing that pixel's state), pre-norm spatial self-attention over the
/// H*W tokens, pre-norm feed-forward.
CompressorStepResult compressor_step(const Tensor& E, const CompressorState& state, const WeightBundle& weights);

/// All T frames at once from a zero state. The SSM runs as a chunked scan
/// along time; attention and feed-forward are frame-local and run per frame.
CompressorRunResult compressor_parallel(const Tensor& E, const WeightBundle& weights, std::size_t chunk = kScanChunk);

}  // namespace ausm
