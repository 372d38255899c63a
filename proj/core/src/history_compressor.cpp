#include "ausm/history_compressor.hpp"

#include <algorithm>

#include "ausm/error.hpp"
#include "ausm/ops.hpp"
#include "ausm/parallel.hpp"

namespace ausm {

CompressorState::CompressorState(std::vector<Tensor> hidden) : hidden_(std::move(hidden)) {
  for (const Tensor& h : hidden_) {
    if (h.rank() != 4 || h.shape() != hidden_.front().shape()) {
      throw DimensionError("compressor state layers must share one [H, W, D, S] shape");
    }
  }
}

CompressorState CompressorState::zeros(std::size_t H, std::size_t W, const ModelDims& dims) {
  return CompressorState(std::vector<Tensor>(dims.L_comp, Tensor({H, W, dims.D, dims.S})));
}

std::size_t CompressorState::element_count() const {
  std::size_t n = 0;
  for (const Tensor& h : hidden_) n += h.size();
  return n;
}

bool CompressorState::all_finite() const {
  for (const Tensor& h : hidden_)
    if (!h.all_finite()) return false;
  return true;
}

NamedTensors CompressorState::to_named() const {
  NamedTensors out;
  for (std::size_t l = 0; l < hidden_.size(); ++l) out.emplace_back(param::compressor_layer(l) + ".hidden", hidden_[l]);
  return out;
}

CompressorState CompressorState::from_named(const NamedTensors& tensors) {
  std::vector<Tensor> hidden;
  for (std::size_t l = 0;; ++l) {
    const std::string name = param::compressor_layer(l) + ".hidden";
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const auto& e) { return e.first == name; });
    if (it == tensors.end()) break;
    hidden.push_back(it->second);
  }
  if (hidden.empty()) throw ContractError("no compressor state layers found");
  return CompressorState(std::move(hidden));
}

CompressorState CompressorState::deserialize(std::span<const std::byte> bytes) {
  return from_named(decode_atb(bytes).tensors);
}

namespace {

enum class ScanMode { Sequential, Chunked };

// X is [T, HW, D] and is transformed in place; `state` holds one
// [HW, D, S] buffer per layer and is advanced to the end of the block.
void run_layers(Tensor& X, std::size_t T, std::size_t HW, CompressorState& state, const WeightBundle& w,
                ScanMode mode, std::size_t chunk) {
  const std::size_t D = w.dims().D;
  for (std::size_t l = 0; l < w.dims().L_comp; ++l) {
    const std::string prefix = param::compressor_layer(l);
    const SsmParams ssm = SsmParams::from_bundle(w, prefix + ".ssm");
    const Tensor u = layer_norm(X.reshaped({T * HW, D}), w.norm(prefix + ".ssm_norm"));
    const SelectiveInputs in = selective_inputs(u, ssm);
    Tensor y({T * HW, D});
    Tensor& h = state.hidden(l);
    if (mode == ScanMode::Sequential) {
      detail::scan_lanes_sequential(in, T, HW, ssm, h.data(), y.data());
    } else {
      detail::scan_lanes_chunked(in, T, HW, ssm, h.data(), y.data(), chunk);
    }
    for (std::size_t i = 0; i < X.size(); ++i) X[i] += y[i];

    const NormParams attn_norm = w.norm(prefix + ".attn_norm");
    const NormParams ffn_norm = w.norm(prefix + ".ffn_norm");
    const AttentionParams attn = w.attention(prefix + ".attn");
    const FeedForwardParams ffn = w.feed_forward(prefix + ".ffn");
    parallel_for(T, [&](std::size_t begin, std::size_t end) {
      for (std::size_t t = begin; t < end; ++t) {
        Tensor x = X.slices(t, t + 1).reshaped({HW, D});
        const Tensor a = layer_norm(x, attn_norm);
        add_inplace(x, attention_block(a, a, attn));
        add_inplace(x, feed_forward(layer_norm(x, ffn_norm), ffn));
        std::copy(x.data().begin(), x.data().end(), X.slice(t).begin());
      }
    });
  }
}

void check_frames(const Tensor& E, std::size_t rank, const WeightBundle& w) {
  if (E.rank() != rank || E.shape().back() != w.dims().D) {
    throw DimensionError("compressor input " + shape_str(E.shape()) + " does not match D = " +
                         std::to_string(w.dims().D));
  }
}

}  // namespace

CompressorStepResult compressor_step(const Tensor& E, const CompressorState& state, const WeightBundle& w) {
  check_frames(E, 3, w);
  const std::size_t H = E.dim(0), W = E.dim(1), D = E.dim(2);
  if (state.layers() != w.dims().L_comp || state.hidden(0).shape() != Shape{H, W, D, w.dims().S}) {
    throw DimensionError("compressor state does not match input " + shape_str(E.shape()) + " and weights");
  }
  CompressorStepResult r{E.reshaped({1, H * W, D}), state};
  run_layers(r.F, 1, H * W, r.state, w, ScanMode::Sequential, kScanChunk);
  r.F = std::move(r.F).reshaped({H, W, D});
  return r;
}

CompressorRunResult compressor_parallel(const Tensor& E, const WeightBundle& w, std::size_t chunk) {
  check_frames(E, 4, w);
  const std::size_t T = E.dim(0), H = E.dim(1), W = E.dim(2), D = E.dim(3);
  if (T == 0) throw ContractError("compressor_parallel needs T >= 1");
  CompressorRunResult r{E.reshaped({T, H * W, D}), CompressorState::zeros(H, W, w.dims())};
  run_layers(r.F, T, H * W, r.state, w, ScanMode::Chunked, chunk);
  r.F = std::move(r.F).reshaped({T, H, W, D});
  return r;
}

}  // namespace ausm
