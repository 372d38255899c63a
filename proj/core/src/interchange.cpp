#include "ausm/interchange.hpp"

#include <json.hpp>

#include "ausm/error.hpp"

namespace ausm {

using nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& p) {
  const Bytes b = read_file(p);
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  write_file(p, std::span(reinterpret_cast<const std::byte*>(s.data()), s.size()));
}

json parse_or_throw(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string(what) + ": invalid JSON at byte " + std::to_string(e.byte));
  }
}

// Splits a [T, h, w, N] stack into per-channel, per-frame masks.
std::vector<std::vector<Tensor>> split_masks(const Tensor& stack) {
  const std::size_t T = stack.dim(0), h = stack.dim(1), w = stack.dim(2), n = stack.dim(3);
  std::vector<std::vector<Tensor>> out(n, std::vector<Tensor>(T, Tensor({h, w})));
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t p = 0; p < h * w; ++p)
      for (std::size_t i = 0; i < n; ++i) out[i][t][p] = stack[(t * h * w + p) * n + i];
  return out;
}

bool nonzero(const Tensor& m) {
  for (float v : m.data())
    if (v != 0.0f) return true;
  return false;
}

}  // namespace

GroundTruthSet ground_truth_of(const SyntheticVideo& v) {
  GroundTruthSet gt;
  gt.video_id = v.video_id;
  gt.seed = v.seed;
  gt.T = v.frames.size();
  gt.height = v.height;
  gt.width = v.width;
  gt.objects = v.objects;
  gt.tracks = v.tracks;
  return gt;
}

std::string ground_truth_json(const GroundTruthSet& gt) {
  json objects = json::array();
  for (std::size_t i = 0; i < gt.objects.size(); ++i) {
    const ObjectSpec& o = gt.objects[i];
    json visible = json::array();
    if (i < gt.tracks.size()) visible = gt.tracks[i].visible_frames();
    objects.push_back({{"instance_id", o.instance_id},
                       {"class", o.cls},
                       {"shape", o.shape == ShapeKind::Circle ? "circle" : "rectangle"},
                       {"cx", o.cx},
                       {"cy", o.cy},
                       {"vx", o.vx},
                       {"vy", o.vy},
                       {"half_w", o.half_w},
                       {"half_h", o.half_h},
                       {"color", o.color},
                       {"entry_frame", o.entry_frame},
                       {"visible_frames", visible}});
  }
  const json j{{"video_id", gt.video_id}, {"seed", gt.seed},     {"T", gt.T},
               {"height", gt.height},     {"width", gt.width},   {"video", kVideoFile},
               {"masks", kGroundTruthMasksFile}, {"objects", objects}};
  return j.dump(2) + "\n";
}

GroundTruthSet parse_ground_truth_json(const std::string& text) {
  const json j = parse_or_throw(text, "ground truth");
  GroundTruthSet gt;
  try {
    gt.video_id = j.at("video_id").get<std::string>();
    gt.seed = j.at("seed").get<std::uint64_t>();
    gt.T = j.at("T").get<std::size_t>();
    gt.height = j.at("height").get<std::size_t>();
    gt.width = j.at("width").get<std::size_t>();
    for (const json& o : j.at("objects")) {
      ObjectSpec s;
      s.instance_id = o.at("instance_id").get<std::size_t>();
      s.cls = o.at("class").get<std::size_t>();
      const std::string shape = o.at("shape").get<std::string>();
      if (shape != "circle" && shape != "rectangle") throw InputError("unknown shape '" + shape + "'");
      s.shape = shape == "circle" ? ShapeKind::Circle : ShapeKind::Rectangle;
      s.cx = o.at("cx").get<double>();
      s.cy = o.at("cy").get<double>();
      s.vx = o.at("vx").get<double>();
      s.vy = o.at("vy").get<double>();
      s.half_w = o.at("half_w").get<double>();
      s.half_h = o.at("half_h").get<double>();
      s.color = o.at("color").get<std::array<float, 3>>();
      s.entry_frame = o.at("entry_frame").get<std::size_t>();
      gt.objects.push_back(s);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("ground truth: ") + e.what());
  }
  return gt;
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticVideo& v) {
  std::filesystem::create_directories(dir);
  write_avr(dir / kVideoFile, video_from_frames(v.frames));
  const GroundTruthSet gt = ground_truth_of(v);
  write_text(dir / kGroundTruthFile, ground_truth_json(gt));
  write_avr(dir / kGroundTruthMasksFile, masks_tensor(v.tracks, gt.T, gt.height, gt.width));
}

GroundTruthSet read_ground_truth(const std::filesystem::path& gt_json) {
  const std::string text = read_text(gt_json);
  GroundTruthSet gt = parse_ground_truth_json(text);
  const std::string masks_name = parse_or_throw(text, "ground truth").value("masks", std::string(kGroundTruthMasksFile));
  const Tensor stack = read_avr(gt_json.parent_path() / masks_name);
  if (stack.dim(0) != gt.T || stack.dim(1) != gt.height || stack.dim(2) != gt.width ||
      stack.dim(3) != gt.objects.size()) {
    throw InputError("ground-truth masks " + shape_str(stack.shape()) + " disagree with gt.json");
  }
  auto per = split_masks(stack);
  for (std::size_t i = 0; i < gt.objects.size(); ++i) {
    GroundTruthTrack tr;
    tr.instance_id = gt.objects[i].instance_id;
    tr.cls = gt.objects[i].cls;
    for (Tensor& m : per[i]) {
      if (nonzero(m))
        tr.masks.emplace_back(std::move(m));
      else
        tr.masks.emplace_back();
    }
    gt.tracks.push_back(std::move(tr));
  }
  return gt;
}

PredictionSet prediction_set_of(const InferenceResult& r, const std::string& video_id) {
  PredictionSet p;
  p.video_id = video_id;
  p.T = r.frames;
  p.height = r.height;
  p.width = r.width;
  for (const TrackRecord& tr : r.tracks) {
    PredictedTrack t;
    t.track_id = tr.pool_index;
    t.prompt_index = tr.prompt_index;
    t.cls = tr.majority_class() + 1;
    t.score = tr.mean_score();
    for (const auto& s : tr.scores) t.frame_scores.push_back(s ? std::optional<double>(*s) : std::nullopt);
    for (const auto& c : tr.classes) t.frame_classes.push_back(c ? std::optional<std::size_t>(*c + 1) : std::nullopt);
    t.masks = tr.masks;
    p.tracks.push_back(std::move(t));
  }
  return p;
}

std::string prediction_json(const PredictionSet& p) {
  json tracks = json::array();
  for (const PredictedTrack& t : p.tracks) {
    json fs = json::array(), fc = json::array();
    for (const auto& s : t.frame_scores) fs.push_back(s ? json(*s) : json(nullptr));
    for (const auto& c : t.frame_classes) fc.push_back(c ? json(*c) : json(nullptr));
    tracks.push_back({{"track_id", t.track_id},
                      {"prompt_index", t.prompt_index ? json(*t.prompt_index) : json(nullptr)},
                      {"class", t.cls},
                      {"score", t.score},
                      {"frame_scores", fs},
                      {"frame_classes", fc}});
  }
  const json j{{"video_id", p.video_id}, {"T", p.T},         {"height", p.height},
               {"width", p.width},       {"masks", kPredictionMasksFile}, {"tracks", tracks}};
  return j.dump(2) + "\n";
}

void write_predictions(const std::filesystem::path& dir, const PredictionSet& p) {
  std::filesystem::create_directories(dir);
  write_text(dir / kPredictionFile, prediction_json(p));
  const std::size_t n = p.tracks.size();
  Tensor stack({p.T, p.height, p.width, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < p.T; ++t)
      for (std::size_t q = 0; q < p.height * p.width; ++q)
        stack[(t * p.height * p.width + q) * n + i] = p.tracks[i].masks[t][q];
  write_avr(dir / kPredictionMasksFile, stack);
}

PredictionSet read_predictions(const std::filesystem::path& pred_json) {
  const json j = parse_or_throw(read_text(pred_json), "predictions");
  PredictionSet p;
  std::string masks_name;
  try {
    p.video_id = j.at("video_id").get<std::string>();
    p.T = j.at("T").get<std::size_t>();
    p.height = j.at("height").get<std::size_t>();
    p.width = j.at("width").get<std::size_t>();
    masks_name = j.value("masks", std::string(kPredictionMasksFile));
    for (const json& t : j.at("tracks")) {
      PredictedTrack tr;
      tr.track_id = t.at("track_id").get<std::size_t>();
      if (!t.at("prompt_index").is_null()) tr.prompt_index = t["prompt_index"].get<std::size_t>();
      tr.cls = t.at("class").get<std::size_t>();
      tr.score = t.at("score").get<double>();
      for (const json& s : t.at("frame_scores"))
        tr.frame_scores.push_back(s.is_null() ? std::nullopt : std::optional<double>(s.get<double>()));
      for (const json& c : t.at("frame_classes"))
        tr.frame_classes.push_back(c.is_null() ? std::nullopt : std::optional<std::size_t>(c.get<std::size_t>()));
      p.tracks.push_back(std::move(tr));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("predictions: ") + e.what());
  }
  const Tensor stack = read_avr(pred_json.parent_path() / masks_name);
  if (stack.dim(0) != p.T || stack.dim(1) != p.height || stack.dim(2) != p.width || stack.dim(3) != p.tracks.size()) {
    throw InputError("prediction masks " + shape_str(stack.shape()) + " disagree with pred.json");
  }
  auto per = split_masks(stack);
  for (std::size_t i = 0; i < p.tracks.size(); ++i) p.tracks[i].masks = std::move(per[i]);
  return p;
}

}  // namespace ausm
