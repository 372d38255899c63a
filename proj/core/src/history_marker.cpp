#include "ausm/history_marker.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ausm/error.hpp"

namespace ausm {

MaskStack::MaskStack(Tensor values, MaskKind kind) : values_(std::move(values)), kind_(kind) {
  if (values_.rank() != 3) throw DimensionError("mask stack must be [N, H, W], got " + shape_str(values_.shape()));
  for (float v : values_.data()) {
    const bool ok = kind_ == MaskKind::Hard ? (v == 0.0f || v == 1.0f) : (v >= 0.0f && v <= 1.0f);
    if (!ok) {
      throw ContractError(std::string(kind_ == MaskKind::Hard ? "hard" : "soft") + " mask holds invalid value " +
                          std::to_string(v));
    }
  }
}

MaskStack MaskStack::empty(std::size_t H, std::size_t W, MaskKind kind) { return MaskStack(Tensor({0, H, W}), kind); }

Tensor MaskStack::mask(std::size_t i) const { return values_.slices(i, i + 1).reshaped({H(), W()}); }

MaskStack MaskStack::concat(const MaskStack& other) const {
  if (other.H() != H() || other.W() != W()) {
    throw DimensionError("cannot concat masks of " + shape_str(values_.shape()) + " and " +
                         shape_str(other.values_.shape()));
  }
  const MaskKind k = (kind_ == MaskKind::Hard && other.kind_ == MaskKind::Hard) ? MaskKind::Hard : MaskKind::Soft;
  return MaskStack(concat_rows(values_, other.values_), k);
}

MaskStack MaskStack::select(std::span<const std::size_t> rows) const {
  Tensor out({rows.size(), H(), W()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = values_.slice(rows[i]);
    std::copy(src.begin(), src.end(), out.slice(i).begin());
  }
  return MaskStack(std::move(out), kind_);
}

Tensor mark(const Tensor& A, const MaskStack& M, float eps) {
  if (A.rank() != 2 || A.dim(0) != M.count()) {
    throw DimensionError("mark: " + std::to_string(M.count()) + " masks but ID matrix has shape " +
                         shape_str(A.shape()));
  }
  if (!(eps > 0.0f)) throw ConfigError("mark: eps must be positive");
  const std::size_t N = M.count(), D = A.dim(1), HW = M.H() * M.W();
  Tensor S({M.H(), M.W(), D});
  std::vector<double> acc(D);
  for (std::size_t p = 0; p < HW; ++p) {
    double weight = 0.0;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      const double m = M.values()[i * HW + p];
      if (m == 0.0) continue;
      weight += m;
      const float* a = A.data().data() + i * D;
      for (std::size_t d = 0; d < D; ++d) acc[d] += m * a[d];
    }
    if (weight == 0.0) continue;
    const double denom = static_cast<double>(eps) + weight;
    float* s = S.data().data() + p * D;
    for (std::size_t d = 0; d < D; ++d) s[d] = static_cast<float>(acc[d] / denom);
  }
  return S;
}

Tensor build_marked_input(const FrameFeatureMap& X_prev, const Tensor& A, const MaskStack& M, float eps) {
  if (X_prev.H() != M.H() || X_prev.W() != M.W()) {
    throw DimensionError("marked input: features are " + std::to_string(X_prev.H()) + "x" +
                         std::to_string(X_prev.W()) + " but masks are " + std::to_string(M.H()) + "x" +
                         std::to_string(M.W()));
  }
  if (A.rank() == 2 && A.dim(1) != X_prev.D()) {
    throw DimensionError("marked input: ID vectors have " + std::to_string(A.dim(1)) + " channels, features have " +
                         std::to_string(X_prev.D()));
  }
  Tensor E = X_prev.values();
  if (M.count() == 0) return E;
  const Tensor S = mark(A, M, eps);
  for (std::size_t i = 0; i < E.size(); ++i) E[i] += S[i];
  return E;
}

MaskStack downsample_masks(const Tensor& masks, std::size_t patch, MaskKind kind) {
  if (masks.rank() != 3) throw DimensionError("downsample_masks expects [N, h, w], got " + shape_str(masks.shape()));
  const std::size_t N = masks.dim(0), h = masks.dim(1), w = masks.dim(2);
  if (patch == 0 || h % patch != 0 || w % patch != 0) {
    throw ConfigError("mask size " + std::to_string(h) + "x" + std::to_string(w) + " not divisible by patch " +
                      std::to_string(patch));
  }
  const std::size_t H = h / patch, W = w / patch;
  Tensor out({N, H, W});
  const double area = static_cast<double>(patch * patch);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t gy = 0; gy < H; ++gy) {
      for (std::size_t gx = 0; gx < W; ++gx) {
        double sum = 0.0;
        for (std::size_t y = 0; y < patch; ++y)
          for (std::size_t x = 0; x < patch; ++x) sum += masks[(n * h + gy * patch + y) * w + gx * patch + x];
        const double mean = sum / area;
        out[(n * H + gy) * W + gx] =
            kind == MaskKind::Hard ? (mean >= 0.5 ? 1.0f : 0.0f) : static_cast<float>(std::clamp(mean, 0.0, 1.0));
      }
    }
  }
  return MaskStack(std::move(out), kind);
}

MaskStack decode_marks(const Tensor& S, const Tensor& A) {
  if (S.rank() != 3 || A.rank() != 2 || S.dim(2) != A.dim(1)) {
    throw DimensionError("decode_marks: map " + shape_str(S.shape()) + " with IDs " + shape_str(A.shape()));
  }
  const std::size_t N = A.dim(0), D = A.dim(1), H = S.dim(0), W = S.dim(1);
  Tensor out({N, H, W});
  std::vector<double> norm2(N, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t d = 0; d < D; ++d) norm2[i] += double(A[i * D + d]) * A[i * D + d];
  for (std::size_t p = 0; p < H * W; ++p) {
    const float* s = S.data().data() + p * D;
    double s2 = 0.0;
    for (std::size_t d = 0; d < D; ++d) s2 += double(s[d]) * s[d];
    if (s2 == 0.0) continue;
    double best_cos = -2.0;
    std::size_t best = N;
    double best_coef = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (norm2[i] == 0.0) continue;
      double dot = 0.0;
      for (std::size_t d = 0; d < D; ++d) dot += double(s[d]) * A[i * D + d];
      const double cos = dot / std::sqrt(s2 * norm2[i]);
      if (cos > best_cos) {
        best_cos = cos;
        best = i;
        best_coef = dot / norm2[i];
      }
    }
    if (best < N && best_coef > 0.5) out[best * H * W + p] = 1.0f;
  }
  return MaskStack(std::move(out), MaskKind::Hard);
}

}  // namespace ausm
