#pragma once

#include "ausm/backbone.hpp"
#include "ausm/tensor.hpp"
#include "ausm/weights.hpp"

namespace ausm {

/// Per-query outputs for one frame. Rows [0, num_tracking) are tracking
/// predictions in allocation order; the remaining N_det rows come from the
/// detection queries. The last class column is background.
struct FramePrediction {
  Tensor class_logits;  // [Nq, K + 1]
  Tensor mask_logits;   // [Nq, H, W]
  std::size_t num_tracking = 0;

  std::size_t num_queries() const { return class_logits.dim(0); }
  std::size_t num_detection() const { return num_queries() - num_tracking; }
  std::size_t background_index() const { return class_logits.dim(1) - 1; }
};

/// Stack of cross-attention blocks: tokens of X_t query the tokens of F_t.
/// Pre-norm residual attention and feed-forward per block, final norm.
Tensor history_decode(const FrameFeatureMap& X, const Tensor& F, const WeightBundle& weights);

/// Masked-attention query decoder over G_t. Queries are concat(A_prev, V).
/// Each block restricts a query to pixels where its current mask estimate is
/// foreground (logit > 0), falling back to all pixels when that set is empty.
/// Queries do not attend to each other, so every output row depends only on
/// its own query vector and G_t.
FramePrediction pixel_decode(const Tensor& A_prev, const Tensor& V, const Tensor& G, const WeightBundle& weights);

enum class Upsample { Nearest, Bilinear };

/// Resize of a logit map to integer multiples of its size. Nearest repeats
/// each cell over its block; Bilinear uses half-pixel centers, edge clamped.
Tensor upsample_mask(const Tensor& mask_logits, std::size_t target_h, std::size_t target_w,
                     Upsample mode = Upsample::Bilinear);

}  // namespace ausm
