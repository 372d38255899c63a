#include "ausm/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <map>

#include "ausm/error.hpp"
#include "ausm/ops.hpp"
#include "ausm/parallel.hpp"

namespace ausm {

using nlohmann::json;

void EngineConfig::validate() const {
  if (!(fg_threshold > 0.0f && fg_threshold < 1.0f)) {
    throw ConfigError("fg_threshold must lie in (0, 1), got " + std::to_string(fg_threshold));
  }
  if (top_k && *top_k == 0) throw ConfigError("top_k must be >= 1 when set");
  if (!(eps > 0.0f)) throw ConfigError("eps must be positive");
  if (scan_chunk == 0) throw ConfigError("scan_chunk must be >= 1");
}

std::string EngineConfig::to_json() const {
  json j{{"fg_threshold", fg_threshold},
         {"top_k", top_k ? json(*top_k) : json(nullptr)},
         {"eps", eps},
         {"soft_masks", mask_kind == MaskKind::Soft},
         {"exhaustion", exhaustion == ExhaustionPolicy::DropLowest ? "drop_lowest" : "throw"},
         {"scan_chunk", scan_chunk},
         {"seed", seed},
         {"admit_detections", admit_detections},
         {"oracle_marks", oracle_marks},
         {"loss", {{"cls", loss.cls}, {"bce", loss.bce}, {"dice", loss.dice}}}};
  return j.dump();
}

EngineConfig EngineConfig::from_json(const std::string& text) {
  EngineConfig c;
  try {
    const json j = json::parse(text);
    c.fg_threshold = j.value("fg_threshold", c.fg_threshold);
    if (j.contains("top_k") && !j["top_k"].is_null()) c.top_k = j["top_k"].get<std::size_t>();
    c.eps = j.value("eps", c.eps);
    c.mask_kind = j.value("soft_masks", false) ? MaskKind::Soft : MaskKind::Hard;
    const std::string ex = j.value("exhaustion", std::string("drop_lowest"));
    if (ex != "drop_lowest" && ex != "throw") throw ConfigError("unknown exhaustion policy '" + ex + "'");
    c.exhaustion = ex == "throw" ? ExhaustionPolicy::Throw : ExhaustionPolicy::DropLowest;
    c.scan_chunk = j.value("scan_chunk", c.scan_chunk);
    c.seed = j.value("seed", c.seed);
    c.admit_detections = j.value("admit_detections", c.admit_detections);
    c.oracle_marks = j.value("oracle_marks", c.oracle_marks);
    if (j.contains("loss")) {
      c.loss.cls = j["loss"].value("cls", c.loss.cls);
      c.loss.bce = j["loss"].value("bce", c.loss.bce);
      c.loss.dice = j["loss"].value("dice", c.loss.dice);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("engine config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

Tensor row_tensor(const Tensor& t, std::size_t i) {
  Shape rest(t.shape().begin() + 1, t.shape().end());
  const auto s = t.slice(i);
  return Tensor(std::move(rest), std::vector<float>(s.begin(), s.end()));
}

void check_frame(const RawFrame& frame, std::size_t H, std::size_t W, std::size_t P) {
  if (frame.height() != H * P || frame.width() != W * P) {
    throw DimensionError("frame is " + std::to_string(frame.height()) + "x" + std::to_string(frame.width()) +
                         ", session expects " + std::to_string(H * P) + "x" + std::to_string(W * P));
  }
}

MaskStack binarize_tracking(const FramePrediction& pred, std::size_t H, std::size_t W, MaskKind kind) {
  Tensor out({pred.num_tracking, H, W});
  for (std::size_t r = 0; r < pred.num_tracking; ++r) {
    const auto src = pred.mask_logits.slice(r);
    auto dst = out.slice(r);
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i] = kind == MaskKind::Hard ? (src[i] > 0.0f ? 1.0f : 0.0f) : static_cast<float>(sigmoid(src[i]));
    }
  }
  return MaskStack(std::move(out), kind);
}

const Tensor* find_named(const NamedTensors& named, const std::string& name) {
  for (const auto& [k, v] : named)
    if (k == name) return &v;
  return nullptr;
}

constexpr const char* kPrevName = "session.prev_features";

}  // namespace

StreamSession StreamSession::start(std::shared_ptr<const WeightBundle> weights, std::size_t H, std::size_t W,
                                   const EngineConfig& config, const std::optional<MaskStack>& prompt) {
  if (!weights) throw ContractError("session needs weights");
  config.validate();
  if (H == 0 || W == 0) throw DimensionError("feature grid must be non-empty");
  StreamSession s;
  s.weights_ = std::move(weights);
  s.config_ = config;
  s.H_ = H;
  s.W_ = W;
  s.registry_ = IdentityRegistry(s.weights_->get(param::kIdPool), H, W, config.seed);
  if (prompt) {
    if (prompt->H() != H || prompt->W() != W) throw DimensionError("prompt masks must be on the feature grid");
    s.registry_.init_prompted(*prompt);
  }
  s.state_ = CompressorState::zeros(H, W, s.weights_->dims());
  s.prev_ = initial_feature(H, W, *s.weights_);
  return s;
}

void StreamSession::override_memory(const MaskStack& leading) {
  const MaskStack& cur = registry_.masks();
  if (leading.count() > cur.count() || leading.H() != H_ || leading.W() != W_) {
    throw ContractError("override_memory: " + std::to_string(leading.count()) + " masks for " +
                        std::to_string(cur.count()) + " allocations");
  }
  Tensor values = cur.values();
  std::copy(leading.values().data().begin(), leading.values().data().end(), values.data().begin());
  const bool soft = cur.kind() == MaskKind::Soft || leading.kind() == MaskKind::Soft;
  registry_.set_masks(MaskStack(std::move(values), soft ? MaskKind::Soft : MaskKind::Hard));
}

StepOutput StreamSession::step(const RawFrame& frame) {
  const WeightBundle& w = *weights_;
  check_frame(frame, H_, W_, w.dims().P);
  const FrameFeatureMap X = embed_frame(frame, w);
  const Tensor A = registry_.allocated_vectors();
  const MaskStack& M = registry_.masks();
  const Tensor E = build_marked_input(prev_, A, M, config_.eps);
  CompressorStepResult comp = compressor_step(E, state_, w);
  const Tensor G = history_decode(X, comp.F, w);

  StepOutput out;
  out.prediction = pixel_decode(A, w.get(param::kDetQueries), G, w);
  out.tracking_ids = registry_.allocated();
  if (config_.oracle_marks) {
    out.tracking_masks = decode_marks(mark(A, M, config_.eps), A);
    for (std::size_t r = 0; r < out.prediction.num_tracking; ++r) {
      const auto m = out.tracking_masks.values().slice(r);
      auto dst = out.prediction.mask_logits.slice(r);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = m[i] > 0.5f ? kOracleLogit : -kOracleLogit;
    }
  } else {
    out.tracking_masks = binarize_tracking(out.prediction, H_, W_, config_.mask_kind);
  }
  out.detections = filter_fg(out.prediction, config_.fg_threshold, config_.top_k, config_.mask_kind);
  const bool admit = config_.admit_detections && !config_.oracle_marks;
  out.admission = registry_.admit(admit ? out.detections : std::vector<Detection>{}, out.tracking_masks,
                                  config_.exhaustion);

  state_ = std::move(comp.state);
  prev_ = X;
  ++t_;
  return out;
}

Bytes StreamSession::serialize() const {
  NamedTensors named = state_.to_named();
  named.emplace_back(kPrevName, prev_.values());
  for (auto& e : registry_.to_named()) named.push_back(std::move(e));
  const json meta{{"kind", "ausm.session"},
                  {"version", 1},
                  {"t", t_},
                  {"H", H_},
                  {"W", W_},
                  {"config", json::parse(config_.to_json())},
                  {"registry_rng", registry_.rng_state()}};
  return encode_atb(named, meta.dump());
}

StreamSession StreamSession::restore(std::shared_ptr<const WeightBundle> weights, std::span<const std::byte> bytes) {
  if (!weights) throw ContractError("session needs weights");
  AtbContents c = decode_atb(bytes);
  json meta;
  try {
    meta = json::parse(c.metadata_json);
  } catch (const json::exception& e) {
    throw InputError(std::string("session metadata: ") + e.what());
  }
  if (meta.value("kind", std::string()) != "ausm.session") throw InputError("not a serialized session");
  StreamSession s;
  s.weights_ = std::move(weights);
  s.config_ = EngineConfig::from_json(meta.at("config").dump());
  s.t_ = meta.at("t").get<std::size_t>();
  s.H_ = meta.at("H").get<std::size_t>();
  s.W_ = meta.at("W").get<std::size_t>();
  s.state_ = CompressorState::from_named(c.tensors);
  const Tensor* prev = find_named(c.tensors, kPrevName);
  if (!prev) throw InputError("serialized session lacks " + std::string(kPrevName));
  s.prev_ = FrameFeatureMap(*prev);
  s.registry_ = IdentityRegistry::restore(s.weights_->get(param::kIdPool), c.tensors,
                                          meta.at("registry_rng").get<std::string>());
  return s;
}

std::size_t StreamSession::fixed_state_bytes() const {
  NamedTensors named = state_.to_named();
  named.emplace_back(kPrevName, prev_.values());
  return encode_atb(named).size();
}

std::size_t StreamSession::allocation_bytes() const { return encode_atb(registry_.to_named()).size(); }

namespace {

void check_plan(std::span<const RawFrame> frames, const TeacherForcingPlan& plan, const WeightBundle& w) {
  if (frames.empty()) throw InputError("teacher forcing needs at least one frame");
  if (frames.size() != plan.T()) {
    throw InputError("plan covers " + std::to_string(plan.T()) + " frames, clip has " + std::to_string(frames.size()));
  }
  for (const RawFrame& f : frames) check_frame(f, plan.H(), plan.W(), w.dims().P);
  if (plan.ids().dim(1) != w.dims().D) throw DimensionError("plan ID vectors do not match model width");
}

}  // namespace

TeacherForcedResult run_recurrent_teacher_forced(std::span<const RawFrame> frames, const TeacherForcingPlan& plan,
                                                 const WeightBundle& w, const EngineConfig& config) {
  config.validate();
  check_plan(frames, plan, w);
  TeacherForcedResult out;
  FrameFeatureMap prev = initial_feature(plan.H(), plan.W(), w);
  CompressorState state = CompressorState::zeros(plan.H(), plan.W(), w.dims());
  for (std::size_t t = 1; t <= frames.size(); ++t) {
    const FrameFeatureMap X = embed_frame(frames[t - 1], w);
    const Tensor A = plan.allocation(t - 1);
    const Tensor E = build_marked_input(prev, A, plan.memory_masks(t - 1), config.eps);
    CompressorStepResult comp = compressor_step(E, state, w);
    const Tensor G = history_decode(X, comp.F, w);
    out.predictions.push_back(pixel_decode(A, w.get(param::kDetQueries), G, w));
    state = std::move(comp.state);
    prev = X;
  }
  out.losses = score_losses(out.predictions, plan, config.loss);
  return out;
}

TeacherForcedResult run_parallel(std::span<const RawFrame> frames, const TeacherForcingPlan& plan,
                                 const WeightBundle& w, const EngineConfig& config) {
  config.validate();
  check_plan(frames, plan, w);
  const std::size_t T = frames.size(), H = plan.H(), W = plan.W(), D = w.dims().D;
  std::vector<FrameFeatureMap> X(T + 1);
  X[0] = initial_feature(H, W, w);
  parallel_for(T, [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) X[t + 1] = embed_frame(frames[t], w);
  });
  Tensor E({T, H, W, D});
  parallel_for(T, [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) {
      const Tensor Et = build_marked_input(X[t], plan.allocation(t), plan.memory_masks(t), config.eps);
      std::copy(Et.data().begin(), Et.data().end(), E.slice(t).begin());
    }
  });
  const CompressorRunResult comp = compressor_parallel(E, w, config.scan_chunk);
  TeacherForcedResult out;
  out.predictions.resize(T);
  parallel_for(T, [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) {
      const Tensor G = history_decode(X[t + 1], row_tensor(comp.F, t), w);
      out.predictions[t] = pixel_decode(plan.allocation(t), w.get(param::kDetQueries), G, w);
    }
  });
  out.losses = score_losses(out.predictions, plan, config.loss);
  return out;
}

std::vector<Deviation> compare_results(const TeacherForcedResult& a, const TeacherForcedResult& b) {
  if (a.predictions.size() != b.predictions.size()) throw DimensionError("results cover different frame counts");
  std::vector<Deviation> out;
  for (std::size_t t = 0; t < a.predictions.size(); ++t) {
    const FramePrediction& pa = a.predictions[t];
    const FramePrediction& pb = b.predictions[t];
    const std::string f = "frame" + std::to_string(t + 1);
    out.push_back({f + ".class_logits", max_abs_diff(pa.class_logits, pb.class_logits)});
    out.push_back({f + ".mask_logits", max_abs_diff(pa.mask_logits, pb.mask_logits)});
    if (t < a.losses.frames.size() && t < b.losses.frames.size()) {
      out.push_back({f + ".L_trk", std::abs(a.losses.frames[t].tracking - b.losses.frames[t].tracking)});
      out.push_back({f + ".L_det", std::abs(a.losses.frames[t].detection - b.losses.frames[t].detection)});
    }
  }
  out.push_back({"L_total", std::abs(a.losses.total - b.losses.total)});
  std::stable_sort(out.begin(), out.end(), [](const Deviation& x, const Deviation& y) { return x.max_abs > y.max_abs; });
  return out;
}

float TrackRecord::mean_score() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : scores)
    if (s) {
      sum += *s;
      ++n;
    }
  return n ? static_cast<float>(sum / static_cast<double>(n)) : 0.0f;
}

std::size_t TrackRecord::majority_class() const {
  std::map<std::size_t, std::size_t> counts;
  for (const auto& c : classes)
    if (c) ++counts[*c];
  std::size_t best = 0, best_n = 0;
  for (const auto& [c, n] : counts)
    if (n > best_n) {
      best = c;
      best_n = n;
    }
  return best;
}

namespace {

struct RowSummary {
  Tensor mask;
  float score;
  std::size_t cls;
};

RowSummary summarize_row(const FramePrediction& pred, std::size_t row, std::size_t H, std::size_t W,
                         std::size_t height, std::size_t width) {
  const auto logits = pred.class_logits.slice(row);
  std::vector<float> p(logits.begin(), logits.end());
  softmax_inplace(p);
  const std::size_t bg = pred.background_index();
  const std::size_t cls = static_cast<std::size_t>(std::max_element(p.begin(), p.begin() + bg) - p.begin());
  const auto m = pred.mask_logits.slice(row);
  Tensor up = upsample_mask(Tensor({H, W}, std::vector<float>(m.begin(), m.end())), height, width,
                           Upsample::Nearest);
  for (float& v : up.data()) v = v > 0.0f ? 1.0f : 0.0f;
  return {std::move(up), 1.0f - p[bg], cls};
}

}  // namespace

InferenceResult run_inference(std::shared_ptr<const WeightBundle> weights, std::span<const RawFrame> frames,
                              const EngineConfig& config, const InferenceOptions& options) {
  if (frames.empty()) throw InputError("inference needs at least one frame");
  const std::size_t P = weights->dims().P;
  const std::size_t height = frames.front().height(), width = frames.front().width();
  if (height % P != 0 || width % P != 0) {
    throw ConfigError("frame size " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not a multiple of patch size " + std::to_string(P));
  }
  if (options.keep_begin > frames.size()) throw InputError("keep_begin beyond the sequence");
  const std::size_t H = height / P, W = width / P;
  if (config.oracle_marks) {
    if (!options.prompt) throw InputError("oracle marks need a prompt");
    if (options.oracle_memory.size() + 1 < frames.size()) {
      throw InputError("oracle marks need ground-truth masks for every frame");
    }
  }
  StreamSession session = StreamSession::start(weights, H, W, config, options.prompt);

  InferenceResult result;
  result.height = height;
  result.width = width;
  std::map<std::size_t, std::size_t> record_of;  // pool index -> track
  auto add_track = [&](std::size_t pool, std::optional<std::size_t> prompt_index) {
    TrackRecord r;
    r.pool_index = pool;
    r.prompt_index = prompt_index;
    record_of[pool] = result.tracks.size();
    result.tracks.push_back(std::move(r));
  };
  for (std::size_t i = 0; i < session.registry().allocated().size(); ++i) add_track(session.registry().allocated()[i], i);

  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (config.oracle_marks && k >= 1) session.override_memory(options.oracle_memory[k - 1]);
    const auto t0 = std::chrono::steady_clock::now();
    const StepOutput out = session.step(frames[k]);
    result.frame_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    result.dropped += out.admission.dropped;
    for (std::size_t j = 0; j < out.admission.admitted.size(); ++j) add_track(out.admission.admitted[j], std::nullopt);
    if (k < options.keep_begin) continue;

    const std::size_t recorded = result.frames;
    for (TrackRecord& r : result.tracks) {
      while (r.masks.size() <= recorded) {
        r.masks.emplace_back(Shape{height, width});
        r.scores.emplace_back();
        r.classes.emplace_back();
      }
    }
    auto put = [&](std::size_t pool, std::size_t row) {
      RowSummary s = summarize_row(out.prediction, row, H, W, height, width);
      TrackRecord& r = result.tracks[record_of.at(pool)];
      r.masks[recorded] = std::move(s.mask);
      r.scores[recorded] = s.score;
      r.classes[recorded] = s.cls;
    };
    for (std::size_t r = 0; r < out.prediction.num_tracking; ++r) put(out.tracking_ids[r], r);
    for (std::size_t j = 0; j < out.admission.admitted.size(); ++j) {
      put(out.admission.admitted[j], out.prediction.num_tracking + out.detections[j].query_row);
    }
    ++result.frames;
  }
  return result;
}

}  // namespace ausm
