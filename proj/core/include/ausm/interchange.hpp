#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ausm/engine.hpp"
#include "ausm/synthetic.hpp"

namespace ausm {

/// Ground truth of one video: gt.json plus gt_masks.avr ([T, h, w, N],
/// channel i belongs to objects[i]).
struct GroundTruthSet {
  std::string video_id;
  std::uint64_t seed = 0;
  std::size_t T = 0, height = 0, width = 0;
  std::vector<ObjectSpec> objects;
  std::vector<GroundTruthTrack> tracks;  // pixel resolution
};

struct PredictedTrack {
  std::size_t track_id = 0;  // ID-pool index
  std::optional<std::size_t> prompt_index;
  std::size_t cls = 1;  // 1..K
  double score = 0.0;
  std::vector<std::optional<double>> frame_scores;
  std::vector<std::optional<std::size_t>> frame_classes;  // 1..K
  std::vector<Tensor> masks;                             // [h, w] per frame
};

/// pred.json plus pred_masks.avr ([T, h, w, N], channel i is tracks[i]).
struct PredictionSet {
  std::string video_id;
  std::size_t T = 0, height = 0, width = 0;
  std::vector<PredictedTrack> tracks;
};

inline constexpr const char* kVideoFile = "video.avr";
inline constexpr const char* kGroundTruthFile = "gt.json";
inline constexpr const char* kGroundTruthMasksFile = "gt_masks.avr";
inline constexpr const char* kPredictionFile = "pred.json";
inline constexpr const char* kPredictionMasksFile = "pred_masks.avr";
inline constexpr const char* kTimingFile = "timing.json";

GroundTruthSet ground_truth_of(const SyntheticVideo& video);
std::string ground_truth_json(const GroundTruthSet& gt);
/// Objects and header only; tracks come from the mask file.
GroundTruthSet parse_ground_truth_json(const std::string& text);

/// Writes video.avr, gt.json and gt_masks.avr into `dir`.
void write_synthetic(const std::filesystem::path& dir, const SyntheticVideo& video);
/// Reads gt.json and the mask file it names (relative to the JSON file).
GroundTruthSet read_ground_truth(const std::filesystem::path& gt_json);

PredictionSet prediction_set_of(const InferenceResult& result, const std::string& video_id);
std::string prediction_json(const PredictionSet& pred);
void write_predictions(const std::filesystem::path& dir, const PredictionSet& pred);
PredictionSet read_predictions(const std::filesystem::path& pred_json);

}  // namespace ausm
