#include "ausm/decoders.hpp"

#include <algorithm>
#include <cmath>

#include "ausm/error.hpp"
#include "ausm/ops.hpp"

namespace ausm {

Tensor history_decode(const FrameFeatureMap& X, const Tensor& F, const WeightBundle& w) {
  if (F.shape() != X.values().shape()) {
    throw DimensionError("history_decode: features " + shape_str(X.values().shape()) + " vs compressed state " +
                         shape_str(F.shape()));
  }
  const std::size_t H = X.H(), W = X.W(), D = X.D();
  Tensor x = X.values().reshaped({H * W, D});
  const Tensor memory = F.reshaped({H * W, D});
  for (std::size_t l = 0; l < w.dims().L_dec; ++l) {
    const std::string p = param::history_decoder_layer(l);
    const Tensor q = layer_norm(x, w.norm(p + ".query_norm"));
    const Tensor m = layer_norm(memory, w.norm(p + ".memory_norm"));
    add_inplace(x, attention_block(q, m, w.attention(p + ".cross_attn")));
    add_inplace(x, feed_forward(layer_norm(x, w.norm(p + ".ffn_norm")), w.feed_forward(p + ".ffn")));
  }
  return layer_norm(x, w.norm("history_decoder.out_norm")).reshaped({H, W, D});
}

namespace {

struct Heads {
  Tensor class_logits;  // [Nq, K + 1]
  Tensor mask_logits;   // [Nq, HW]
};

Heads predict(const Tensor& queries, const Tensor& mask_features_t, const WeightBundle& w) {
  const Tensor qn = layer_norm(queries, w.norm("pixel_decoder.out_norm"));
  Heads h;
  h.class_logits = linear(qn, w.get("pixel_decoder.class_head.weight"), w.get("pixel_decoder.class_head.bias"));
  const Tensor emb = linear(qn, w.get("pixel_decoder.mask_embed.weight"), w.get("pixel_decoder.mask_embed.bias"));
  h.mask_logits = linear(emb, mask_features_t);
  return h;
}

}  // namespace

FramePrediction pixel_decode(const Tensor& A_prev, const Tensor& V, const Tensor& G, const WeightBundle& w) {
  const std::size_t D = w.dims().D;
  if (G.rank() != 3 || G.dim(2) != D) throw DimensionError("pixel_decode: G has shape " + shape_str(G.shape()));
  if (A_prev.rank() != 2 || A_prev.dim(1) != D || V.rank() != 2 || V.dim(1) != D) {
    throw DimensionError("pixel_decode: queries " + shape_str(A_prev.shape()) + " and " + shape_str(V.shape()) +
                         " must be [*, " + std::to_string(D) + "]");
  }
  const std::size_t H = G.dim(0), W = G.dim(1), HW = H * W;
  const Tensor memory = G.reshaped({HW, D});
  const Tensor mask_features =
      linear(memory, w.get("pixel_decoder.mask_features.weight"), w.get("pixel_decoder.mask_features.bias"));
  Tensor mask_features_t({D, HW});
  for (std::size_t p = 0; p < HW; ++p)
    for (std::size_t d = 0; d < D; ++d) mask_features_t[d * HW + p] = mask_features[p * D + d];

  Tensor q = concat_rows(A_prev, V);
  const std::size_t Nq = q.dim(0);
  for (std::size_t l = 0; l < w.dims().L_dec; ++l) {
    const std::string p = param::pixel_decoder_layer(l);
    const Heads estimate = predict(q, mask_features_t, w);
    AttentionMask mask(Nq, HW, false);
    for (std::size_t i = 0; i < Nq; ++i) {
      bool any = false;
      for (std::size_t k = 0; k < HW; ++k) {
        if (estimate.mask_logits[i * HW + k] > 0.0f) {
          mask.set(i, k, true);
          any = true;
        }
      }
      if (!any)
        for (std::size_t k = 0; k < HW; ++k) mask.set(i, k, true);
    }
    add_inplace(q, attention_block(layer_norm(q, w.norm(p + ".query_norm")), memory, w.attention(p + ".cross_attn"),
                                   &mask));
    add_inplace(q, feed_forward(layer_norm(q, w.norm(p + ".ffn_norm")), w.feed_forward(p + ".ffn")));
  }
  Heads out = predict(q, mask_features_t, w);
  return FramePrediction{std::move(out.class_logits), std::move(out.mask_logits).reshaped({Nq, H, W}), A_prev.dim(0)};
}

Tensor upsample_mask(const Tensor& logits, std::size_t target_h, std::size_t target_w, Upsample mode) {
  if (logits.rank() != 2) throw DimensionError("upsample_mask expects [H, W], got " + shape_str(logits.shape()));
  const std::size_t H = logits.dim(0), W = logits.dim(1);
  if (H == 0 || W == 0 || target_h % H != 0 || target_w % W != 0 || target_h == 0 || target_w == 0) {
    throw ConfigError("upsample target " + std::to_string(target_h) + "x" + std::to_string(target_w) +
                      " is not a multiple of " + std::to_string(H) + "x" + std::to_string(W));
  }
  if (mode == Upsample::Nearest) {
    Tensor out({target_h, target_w});
    const std::size_t sy = target_h / H, sx = target_w / W;
    for (std::size_t y = 0; y < target_h; ++y)
      for (std::size_t x = 0; x < target_w; ++x) out[y * target_w + x] = logits[(y / sy) * W + x / sx];
    return out;
  }
  auto source = [](std::size_t i, std::size_t src, std::size_t dst, std::size_t& i0, std::size_t& i1, double& f) {
    double s = (static_cast<double>(i) + 0.5) * static_cast<double>(src) / static_cast<double>(dst) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    i0 = static_cast<std::size_t>(std::floor(s));
    i1 = std::min(i0 + 1, src - 1);
    f = s - static_cast<double>(i0);
  };
  Tensor out({target_h, target_w});
  for (std::size_t y = 0; y < target_h; ++y) {
    std::size_t y0, y1;
    double fy;
    source(y, H, target_h, y0, y1, fy);
    for (std::size_t x = 0; x < target_w; ++x) {
      std::size_t x0, x1;
      double fx;
      source(x, W, target_w, x0, x1, fx);
      const double top = (1 - fx) * logits[y0 * W + x0] + fx * logits[y0 * W + x1];
      const double bottom = (1 - fx) * logits[y1 * W + x0] + fx * logits[y1 * W + x1];
      out[y * target_w + x] = static_cast<float>((1 - fy) * top + fy * bottom);
    }
  }
  return out;
}

}  // namespace ausm
