#include "ausm/identity_registry.hpp"

#include <algorithm>
#include <numeric>

#include "ausm/error.hpp"
#include "ausm/ops.hpp"

namespace ausm {

std::vector<Detection> filter_fg(const FramePrediction& pred, float threshold, std::optional<std::size_t> top_k,
                                 MaskKind kind) {
  if (!(threshold > 0.0f && threshold < 1.0f)) throw ConfigError("foreground threshold must lie in (0, 1)");
  const std::size_t C = pred.class_logits.dim(1), bg = C - 1;
  const std::size_t H = pred.mask_logits.dim(1), W = pred.mask_logits.dim(2);
  std::vector<Detection> kept;
  std::vector<float> probs(C);
  for (std::size_t r = 0; r < pred.num_detection(); ++r) {
    const std::size_t row = pred.num_tracking + r;
    const auto logits = pred.class_logits.slice(row);
    std::copy(logits.begin(), logits.end(), probs.begin());
    softmax_inplace(probs);
    const float score = 1.0f - probs[bg];
    if (score < threshold) continue;
    Detection d;
    d.query_row = r;
    d.cls = static_cast<std::size_t>(std::max_element(probs.begin(), probs.begin() + bg) - probs.begin());
    d.score = score;
    d.mask = Tensor({H, W});
    const auto m = pred.mask_logits.slice(row);
    for (std::size_t i = 0; i < H * W; ++i) {
      d.mask[i] = kind == MaskKind::Hard ? (m[i] > 0.0f ? 1.0f : 0.0f) : sigmoid(m[i]);
    }
    kept.push_back(std::move(d));
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
  if (top_k && kept.size() > *top_k) kept.resize(*top_k);
  return kept;
}

IdentityRegistry::IdentityRegistry(Tensor pool, std::size_t H, std::size_t W, std::uint64_t seed)
    : pool_(std::move(pool)), masks_(MaskStack::empty(H, W)), rng_(seed) {
  if (pool_.rank() != 2 || pool_.dim(0) == 0) throw DimensionError("ID pool must be [N_id, D] with N_id >= 1");
  free_.resize(pool_.dim(0));
  std::iota(free_.begin(), free_.end(), std::size_t{0});
}

Tensor IdentityRegistry::allocated_vectors() const {
  const std::size_t D = pool_.dim(1);
  Tensor out({allocated_.size(), D});
  for (std::size_t i = 0; i < allocated_.size(); ++i) {
    const auto row = pool_.slice(allocated_[i]);
    std::copy(row.begin(), row.end(), out.slice(i).begin());
  }
  return out;
}

std::vector<std::size_t> IdentityRegistry::sample_indices(std::size_t n) {
  if (n > free_.size()) throw PoolExhaustedError(n, free_.size());
  std::vector<std::size_t> drawn;
  drawn.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<std::ptrdiff_t>(rng_.below(free_.size()));
    drawn.push_back(free_[static_cast<std::size_t>(j)]);
    free_.erase(free_.begin() + j);
  }
  allocated_.insert(allocated_.end(), drawn.begin(), drawn.end());
  masks_ = masks_.concat(MaskStack(Tensor({n, masks_.H(), masks_.W()}), masks_.kind()));
  return drawn;
}

Tensor IdentityRegistry::sample(std::size_t n) {
  const std::vector<std::size_t> drawn = sample_indices(n);
  Tensor out({n, pool_.dim(1)});
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = pool_.slice(drawn[i]);
    std::copy(row.begin(), row.end(), out.slice(i).begin());
  }
  return out;
}

void IdentityRegistry::init_prompted(const MaskStack& prompt) {
  if (!allocated_.empty()) throw ContractError("init_prompted on a registry that already has allocations");
  if (prompt.H() != masks_.H() || prompt.W() != masks_.W()) {
    throw DimensionError("prompt masks are " + std::to_string(prompt.H()) + "x" + std::to_string(prompt.W()) +
                         ", registry grid is " + std::to_string(masks_.H()) + "x" + std::to_string(masks_.W()));
  }
  sample_indices(prompt.count());
  masks_ = prompt;
}

AdmitResult IdentityRegistry::admit(std::vector<Detection> detections, const MaskStack& trk_masks,
                                    ExhaustionPolicy policy) {
  if (trk_masks.count() != allocated_.size()) {
    throw ContractError("admit: " + std::to_string(trk_masks.count()) + " tracking masks for " +
                        std::to_string(allocated_.size()) + " allocations");
  }
  if (trk_masks.H() != masks_.H() || trk_masks.W() != masks_.W()) throw DimensionError("admit: tracking mask size");
  AdmitResult result;
  if (detections.size() > free_.size()) {
    if (policy == ExhaustionPolicy::Throw) throw PoolExhaustedError(detections.size(), free_.size());
    std::stable_sort(detections.begin(), detections.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    result.dropped = detections.size() - free_.size();
    detections.resize(free_.size());
  }
  Tensor det_masks({detections.size(), masks_.H(), masks_.W()});
  bool soft = trk_masks.kind() == MaskKind::Soft;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Tensor& m = detections[i].mask;
    if (m.shape() != Shape{masks_.H(), masks_.W()}) throw DimensionError("admit: detection mask size");
    for (float v : m.data()) soft = soft || (v != 0.0f && v != 1.0f);
    std::copy(m.data().begin(), m.data().end(), det_masks.slice(i).begin());
  }
  const MaskKind kind = soft ? MaskKind::Soft : MaskKind::Hard;
  result.admitted = sample_indices(detections.size());
  masks_ = MaskStack(trk_masks.values(), kind).concat(MaskStack(std::move(det_masks), kind));
  return result;
}

void IdentityRegistry::set_masks(MaskStack masks) {
  if (masks.count() != allocated_.size() || masks.H() != masks_.H() || masks.W() != masks_.W()) {
    throw ContractError("set_masks: need " + std::to_string(allocated_.size()) + " masks of " +
                        std::to_string(masks_.H()) + "x" + std::to_string(masks_.W()));
  }
  masks_ = std::move(masks);
}

void IdentityRegistry::check_invariants() const {
  const std::size_t n = capacity();
  if (free_.size() + allocated_.size() != n) throw ContractError("free and allocated sets do not cover the pool");
  std::vector<int> seen(n, 0);
  for (std::size_t i : free_) {
    if (i >= n || seen[i]++) throw ContractError("free set holds an invalid or repeated index");
  }
  for (std::size_t i : allocated_) {
    if (i >= n || seen[i]++) throw ContractError("allocated index is repeated or also free");
  }
  if (masks_.count() != allocated_.size()) throw ContractError("|A| != |M|");
}

NamedTensors IdentityRegistry::to_named() const {
  auto as_tensor = [](const std::vector<std::size_t>& v) {
    Tensor t({v.size()});
    for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<float>(v[i]);
    return t;
  };
  return {{"registry.free", as_tensor(free_)},
          {"registry.allocated", as_tensor(allocated_)},
          {masks_.kind() == MaskKind::Hard ? "registry.masks.hard" : "registry.masks.soft", masks_.values()}};
}

IdentityRegistry IdentityRegistry::restore(Tensor pool, const NamedTensors& named, const std::string& rng_state) {
  auto find = [&](const std::string& name) -> const Tensor* {
    for (const auto& [k, v] : named)
      if (k == name) return &v;
    return nullptr;
  };
  const Tensor* free = find("registry.free");
  const Tensor* allocated = find("registry.allocated");
  const Tensor* hard = find("registry.masks.hard");
  const Tensor* soft = find("registry.masks.soft");
  if (!free || !allocated || (!hard && !soft)) throw ContractError("serialized registry is incomplete");
  IdentityRegistry r;
  r.pool_ = std::move(pool);
  for (float v : free->data()) r.free_.push_back(static_cast<std::size_t>(v));
  for (float v : allocated->data()) r.allocated_.push_back(static_cast<std::size_t>(v));
  r.masks_ = hard ? MaskStack(*hard, MaskKind::Hard) : MaskStack(*soft, MaskKind::Soft);
  r.rng_.load(rng_state);
  r.check_invariants();
  return r;
}

}  // namespace ausm
