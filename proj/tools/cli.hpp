#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ausm/engine.hpp"
#include "ausm/weights.hpp"

namespace ausm::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kInputError = 2 };

/// Settings shared by the commands. Loaded from a JSON file, then
/// overridden by flags.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t height = 64, width = 64;  // pixels
  ModelDims dims;
  float fg_threshold = 0.5f;
  std::size_t top_k = 0;  // 0 keeps every detection
  float eps = kMarkerEps;
  bool soft_masks = false;
  bool oracle_marks = false;
  bool admit_detections = true;
  std::size_t scan_chunk = kScanChunk;
  std::size_t threads = 0;  // 0 lets the scheduler decide

  void validate() const;
  EngineConfig engine() const;
  std::string to_json() const;
  static RunConfig from_json(const std::string& text, const RunConfig& defaults);
};

/// Small-model settings used by equiv.
RunConfig equivalence_defaults();
/// Desk-scale settings used by bench: 16x16 grid, D = 64.
RunConfig bench_defaults();

struct GenOptions {
  RunConfig config;
  std::size_t T = 8;
  std::size_t n_objects = 2;
  std::vector<std::size_t> entry_schedule;
  bool zero_velocity = false;
  bool grid_aligned = false;
  std::filesystem::path out;
};
int cmd_gen(const GenOptions& o, std::ostream& out);

struct WeightsInitOptions {
  RunConfig config;
  std::filesystem::path out;
};
int cmd_weights_init(const WeightsInitOptions& o, std::ostream& out);

struct InferOptions {
  RunConfig config;
  std::filesystem::path video;
  std::filesystem::path weights;
  std::optional<std::filesystem::path> prompt;  // AVR [T, h, w, N]
  std::optional<std::string> video_id;
  std::filesystem::path out;
};
int cmd_infer(const InferOptions& o, std::ostream& out);

struct ScaleOptions {
  InferOptions infer;
  std::size_t reps = 1;
  bool quadrant = false;
  double crop_fraction = 0.9;
  std::size_t frame = 0;  // quadrant mode: which input frame
};
int cmd_scale(const ScaleOptions& o, std::ostream& out);

struct EquivOptions {
  RunConfig config = equivalence_defaults();
  std::size_t T = 16;
  std::size_t n_objects = 3;
  double tolerance = 1e-4;
  std::optional<std::filesystem::path> report;
};
int cmd_equiv(const EquivOptions& o, std::ostream& out);

struct BenchCmdOptions {
  RunConfig config = bench_defaults();
  std::vector<std::size_t> seq_lens{1, 2, 4, 8, 16};
  std::size_t repeats = 20;
  std::size_t warmup = 2;
  std::size_t n_objects = 3;
  std::optional<std::filesystem::path> csv;
};
int cmd_bench(const BenchCmdOptions& o, std::ostream& out);

struct EvalOptions {
  std::filesystem::path pred;
  std::filesystem::path gt;
  std::string metric = "all";  // jf, g, ap or all
  std::optional<std::filesystem::path> report;
};
int cmd_eval(const EvalOptions& o, std::ostream& out);

/// Parses argv, runs one command and maps errors to exit codes.
int run(int argc, char** argv);

}  // namespace ausm::cli
