#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <memory>

#include "ausm/error.hpp"
#include "ausm/interchange.hpp"
#include "ausm/io.hpp"
#include "ausm/metrics.hpp"
#include "ausm/parallel.hpp"
#include "ausm/sequences.hpp"
#include "ausm/synthetic.hpp"
#include "ausm/training_bench.hpp"

namespace ausm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

void RunConfig::validate() const {
  dims.validate();
  engine().validate();
  if (height == 0 || width == 0 || height % dims.P != 0 || width % dims.P != 0) {
    throw ConfigError("frame size " + std::to_string(height) + "x" + std::to_string(width) +
                      " must be a positive multiple of P=" + std::to_string(dims.P));
  }
}

EngineConfig RunConfig::engine() const {
  EngineConfig e;
  e.fg_threshold = fg_threshold;
  if (top_k) e.top_k = top_k;
  e.eps = eps;
  e.mask_kind = soft_masks ? MaskKind::Soft : MaskKind::Hard;
  e.scan_chunk = scan_chunk;
  e.seed = seed;
  e.admit_detections = admit_detections;
  e.oracle_marks = oracle_marks;
  return e;
}

std::string RunConfig::to_json() const {
  const json j{{"seed", seed},
               {"height", height},
               {"width", width},
               {"D", dims.D},
               {"S", dims.S},
               {"P", dims.P},
               {"L_comp", dims.L_comp},
               {"L_dec", dims.L_dec},
               {"N_det", dims.N_det},
               {"N_id", dims.N_id},
               {"K", dims.K},
               {"fg_threshold", fg_threshold},
               {"top_k", top_k},
               {"eps", eps},
               {"soft_masks", soft_masks},
               {"oracle_marks", oracle_marks},
               {"admit_detections", admit_detections},
               {"scan_chunk", scan_chunk},
               {"threads", threads}};
  return j.dump();
}

RunConfig RunConfig::from_json(const std::string& text, const RunConfig& d) {
  RunConfig c = d;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON (byte " + std::to_string(e.byte) + ")");
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known{"seed",   "height",       "width",        "D",
                                              "S",      "P",            "L_comp",       "L_dec",
                                              "N_det",  "N_id",         "K",            "fg_threshold",
                                              "top_k",  "eps",          "soft_masks",   "oracle_marks",
                                              "admit_detections",       "scan_chunk",   "threads"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown config key '" + k + "'");
  }
  try {
    c.seed = j.value("seed", c.seed);
    c.height = j.value("height", c.height);
    c.width = j.value("width", c.width);
    c.dims.D = j.value("D", c.dims.D);
    c.dims.S = j.value("S", c.dims.S);
    c.dims.P = j.value("P", c.dims.P);
    c.dims.L_comp = j.value("L_comp", c.dims.L_comp);
    c.dims.L_dec = j.value("L_dec", c.dims.L_dec);
    c.dims.N_det = j.value("N_det", c.dims.N_det);
    c.dims.N_id = j.value("N_id", c.dims.N_id);
    c.dims.K = j.value("K", c.dims.K);
    c.fg_threshold = j.value("fg_threshold", c.fg_threshold);
    c.top_k = j.value("top_k", c.top_k);
    c.eps = j.value("eps", c.eps);
    c.soft_masks = j.value("soft_masks", c.soft_masks);
    c.oracle_marks = j.value("oracle_marks", c.oracle_marks);
    c.admit_detections = j.value("admit_detections", c.admit_detections);
    c.scan_chunk = j.value("scan_chunk", c.scan_chunk);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig equivalence_defaults() {
  RunConfig c;
  c.dims.D = 32;
  c.dims.S = 16;
  c.dims.L_comp = 2;
  c.dims.L_dec = 2;
  c.dims.N_det = 10;
  c.dims.N_id = 16;
  return c;
}

RunConfig bench_defaults() {
  RunConfig c;
  c.height = c.width = 128;
  c.dims.D = 64;
  c.dims.S = 16;
  c.dims.L_comp = 2;
  c.dims.L_dec = 2;
  c.dims.N_det = 20;
  c.dims.N_id = 32;
  return c;
}

namespace {

void write_text(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_file(p, std::span(reinterpret_cast<const std::byte*>(s.data()), s.size()));
}

std::string read_text(const fs::path& p) {
  const Bytes b = read_file(p);
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

// Frame k of a [T, h, w, N] mask stack, reduced to the feature grid.
MaskStack stack_frame(const Tensor& stack, std::size_t k, std::size_t P) {
  const std::size_t h = stack.dim(1), w = stack.dim(2), n = stack.dim(3);
  Tensor m({n, h, w});
  for (std::size_t p = 0; p < h * w; ++p)
    for (std::size_t i = 0; i < n; ++i) m[i * h * w + p] = stack[(k * h * w + p) * n + i] > 0.5f ? 1.0f : 0.0f;
  return downsample_masks(m, P, MaskKind::Hard);
}

std::shared_ptr<const WeightBundle> load_weights(const fs::path& p) {
  auto w = std::make_shared<WeightBundle>(decode_weights(read_file(p)));
  w->validate();
  return w;
}

std::vector<RawFrame> load_video(const fs::path& p) {
  const Tensor v = read_avr(p);
  if (v.dim(3) != 3) throw InputError("video '" + p.string() + "' has " + std::to_string(v.dim(3)) + " channels, need 3");
  if (v.dim(0) == 0) throw InputError("video '" + p.string() + "' has no frames");
  return frames_from_video(v);
}

std::string resolve_video_id(const InferOptions& o) {
  if (o.video_id) return *o.video_id;
  const fs::path gt = o.video.parent_path() / kGroundTruthFile;
  if (fs::exists(gt)) return parse_ground_truth_json(read_text(gt)).video_id;
  return o.video.stem().string();
}

struct PreparedInference {
  std::shared_ptr<const WeightBundle> weights;
  std::vector<RawFrame> frames;
  std::optional<Tensor> prompt_stack;
  std::string video_id;
};

PreparedInference prepare(const InferOptions& o) {
  PreparedInference p;
  p.weights = load_weights(o.weights);
  p.frames = load_video(o.video);
  if (o.prompt) {
    p.prompt_stack = read_avr(*o.prompt);
    if (p.prompt_stack->dim(1) != p.frames[0].height() || p.prompt_stack->dim(2) != p.frames[0].width()) {
      throw InputError("prompt masks do not match the video frame size");
    }
    if (p.prompt_stack->dim(0) == 0) throw InputError("prompt file has no frames");
  }
  if (o.config.oracle_marks && !o.prompt) throw InputError("--oracle-marks needs --prompt");
  p.video_id = resolve_video_id(o);
  return p;
}

// `order[k]` is the source frame of sequence position k.
InferenceResult infer_sequence(const PreparedInference& p, const RunConfig& cfg, std::span<const RawFrame> frames,
                               std::span<const std::size_t> order, std::size_t keep_begin) {
  InferenceOptions io;
  io.keep_begin = keep_begin;
  const std::size_t P = p.weights->dims().P;
  if (p.prompt_stack) io.prompt = stack_frame(*p.prompt_stack, 0, P);
  if (cfg.oracle_marks) {
    for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
      const std::size_t src = order[k];
      if (src >= p.prompt_stack->dim(0)) {
        throw InputError("--oracle-marks needs masks for every frame; the prompt file has " +
                         std::to_string(p.prompt_stack->dim(0)));
      }
      io.oracle_memory.push_back(stack_frame(*p.prompt_stack, src, P));
    }
  }
  EngineConfig e = cfg.engine();
  return run_inference(p.weights, frames, e, io);
}

// Model dimensions always come from the weights file.
void log_weights(const WeightBundle& w, std::ostream& out) {
  const ModelDims& d = w.dims();
  out << "weights: D=" << d.D << " S=" << d.S << " P=" << d.P << " L_comp=" << d.L_comp << " L_dec=" << d.L_dec
      << " N_det=" << d.N_det << " N_id=" << d.N_id << " K=" << d.K << "\n";
}

void write_outputs(const fs::path& dir, const InferenceResult& r, const std::string& video_id, std::ostream& out) {
  write_predictions(dir, prediction_set_of(r, video_id));
  double total = 0.0;
  for (double s : r.frame_seconds) total += s;
  write_text(dir / kTimingFile, json{{"frame_seconds", r.frame_seconds}, {"total_seconds", total}}.dump(2) + "\n");
  out << "wrote " << r.tracks.size() << " tracks over " << r.frames << " frames to " << dir.string() << " ("
      << r.frame_seconds.size() << " frames processed, " << r.dropped << " detections dropped)\n";
}

}  // namespace

int cmd_gen(const GenOptions& o, std::ostream& out) {
  SyntheticOptions s;
  s.seed = o.config.seed;
  s.T = o.T;
  s.height = o.config.height;
  s.width = o.config.width;
  s.n_objects = o.n_objects;
  s.patch = o.config.dims.P;
  s.num_classes = o.config.dims.K;
  s.entry_schedule = o.entry_schedule;
  s.zero_velocity = o.zero_velocity;
  s.grid_aligned = o.grid_aligned;
  const SyntheticVideo v = generate(s);
  write_synthetic(o.out, v);
  out << "wrote " << v.video_id << " (" << s.T << " frames, " << s.n_objects << " objects) to " << o.out.string()
      << "\n";
  return kOk;
}

int cmd_weights_init(const WeightsInitOptions& o, std::ostream& out) {
  const WeightBundle w = WeightBundle::initialize(o.config.dims, o.config.seed);
  const Bytes b = encode_weights(w);
  if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
  write_file(o.out, b);
  out << "wrote " << w.tensors().size() << " tensors (" << b.size() << " bytes) to " << o.out.string() << "\n";
  return kOk;
}

int cmd_infer(const InferOptions& o, std::ostream& out) {
  const PreparedInference p = prepare(o);
  log_weights(*p.weights, out);
  std::vector<std::size_t> order(p.frames.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  write_outputs(o.out, infer_sequence(p, o.config, p.frames, order, 0), p.video_id, out);
  return kOk;
}

int cmd_scale(const ScaleOptions& o, std::ostream& out) {
  const PreparedInference p = prepare(o.infer);
  log_weights(*p.weights, out);
  if (o.quadrant) {
    if (o.infer.config.oracle_marks) throw InputError("--oracle-marks is not available in quadrant mode");
    if (o.frame >= p.frames.size()) throw InputError("--frame is beyond the video");
    const AugmentedSequence seq = build_quadrant_sequence(p.frames[o.frame], o.crop_fraction);
    const std::vector<std::size_t> order(seq.frames.size(), o.frame);
    write_outputs(o.infer.out, infer_sequence(p, o.infer.config, seq.frames, order, seq.keep_begin), p.video_id, out);
    return kOk;
  }
  const AugmentedSequence seq = build_repetition_sequence(p.frames, o.reps);
  const std::vector<std::size_t> order = repetition_indices(p.frames.size(), o.reps);
  write_outputs(o.infer.out, infer_sequence(p, o.infer.config, seq.frames, order, seq.keep_begin), p.video_id, out);
  return kOk;
}

int cmd_equiv(const EquivOptions& o, std::ostream& out) {
  const WeightBundle w = WeightBundle::initialize(o.config.dims, o.config.seed);
  const TeacherForcingCase c =
      make_teacher_forcing_case(w, o.config.seed, o.T, o.config.height, o.config.width, o.n_objects);
  const EngineConfig e = o.config.engine();
  const TeacherForcedResult rec = run_recurrent_teacher_forced(c.video.frames, c.plan, w, e);
  const TeacherForcedResult par = run_parallel(c.video.frames, c.plan, w, e);
  const std::vector<Deviation> dev = compare_results(rec, par);
  const double worst = dev.empty() ? 0.0 : dev.front().max_abs;
  const bool ok = worst <= o.tolerance;
  out << "instances in plan: " << c.plan.instances() << ", frames: " << o.T << "\n";
  out << "L_total recurrent " << rec.losses.total << " parallel " << par.losses.total << "\n";
  const std::size_t shown = std::min<std::size_t>(dev.size(), 8);
  out << "largest deviations (" << shown << " of " << dev.size() << " tensors):\n";
  for (std::size_t i = 0; i < shown; ++i) out << "  " << dev[i].path << " " << dev[i].max_abs << "\n";
  out << "worst: " << (dev.empty() ? "-" : dev.front().path) << " " << worst << " (tolerance " << o.tolerance
      << ") " << (ok ? "OK" : "FAIL") << "\n";
  if (o.report) {
    json rows = json::array();
    for (const Deviation& d : dev) rows.push_back({{"path", d.path}, {"max_abs", d.max_abs}});
    write_text(*o.report, json{{"worst", worst}, {"tolerance", o.tolerance}, {"ok", ok}, {"tensors", rows}}.dump(2) +
                              "\n");
  }
  return ok ? kOk : kFailure;
}

int cmd_bench(const BenchCmdOptions& o, std::ostream& out) {
  const WeightBundle w = WeightBundle::initialize(o.config.dims, o.config.seed);
  BenchOptions b;
  b.seq_lens = o.seq_lens;
  b.repeats = o.repeats;
  b.warmup = o.warmup;
  b.height = o.config.height;
  b.width = o.config.width;
  b.n_objects = o.n_objects;
  b.seed = o.config.seed;
  const std::vector<BenchRow> rows = benchmark_training_forms(w, b);
  const std::string csv = bench_csv(rows);
  out << csv;
  if (o.csv) write_text(*o.csv, csv);
  if (!rows.empty()) {
    out << "speedup at T=" << rows.back().seq_len << ": " << rows.back().speedup_vs_iterative << "x ("
        << max_threads() << " worker threads)\n";
  }
  return kOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  if (o.metric != "jf" && o.metric != "g" && o.metric != "ap" && o.metric != "all") {
    throw InputError("unknown metric '" + o.metric + "' (jf, g, ap, all)");
  }
  const PredictionSet pred = read_predictions(o.pred);
  const GroundTruthSet gt = read_ground_truth(o.gt);
  json report{{"video_id", gt.video_id}};
  if (o.metric != "ap") {
    const VosReport v = evaluate_vos(pred, gt);
    report["J"] = v.J;
    report["F"] = v.F;
    report["J_mean"] = v.summary.j_mean;
    report["F_mean"] = v.summary.f_mean;
    if (o.metric != "g") report["JF"] = v.summary.jf;
    if (o.metric != "jf") report["G"] = v.summary.g;
  }
  if (o.metric == "ap" || o.metric == "all") report["AP"] = evaluate_track_ap(pred, gt);
  const std::string text = report.dump(2) + "\n";
  out << text;
  if (o.report) write_text(*o.report, text);
  return kOk;
}

namespace {

// Flags that override the JSON config only when given.
class ConfigFlags {
 public:
  ConfigFlags(CLI::App* app, const RunConfig& defaults) : flags_(defaults), defaults_(defaults) {
    app->add_option("--config", path_, "JSON config file");
    bind(app, "--seed", [](RunConfig& c) -> auto& { return c.seed; }, "random seed");
    bind(app, "--height", [](RunConfig& c) -> auto& { return c.height; }, "frame height in pixels");
    bind(app, "--width", [](RunConfig& c) -> auto& { return c.width; }, "frame width in pixels");
    bind(app, "--D", [](RunConfig& c) -> auto& { return c.dims.D; }, "channel width");
    bind(app, "--S", [](RunConfig& c) -> auto& { return c.dims.S; }, "SSM state width");
    bind(app, "--P", [](RunConfig& c) -> auto& { return c.dims.P; }, "patch size");
    bind(app, "--L-comp", [](RunConfig& c) -> auto& { return c.dims.L_comp; }, "compressor layers");
    bind(app, "--L-dec", [](RunConfig& c) -> auto& { return c.dims.L_dec; }, "decoder layers");
    bind(app, "--N-det", [](RunConfig& c) -> auto& { return c.dims.N_det; }, "detection queries");
    bind(app, "--N-id", [](RunConfig& c) -> auto& { return c.dims.N_id; }, "ID pool size");
    bind(app, "--K", [](RunConfig& c) -> auto& { return c.dims.K; }, "foreground classes");
    bind(app, "--fg-threshold", [](RunConfig& c) -> auto& { return c.fg_threshold; }, "foreground threshold");
    bind(app, "--top-k", [](RunConfig& c) -> auto& { return c.top_k; }, "max detections per frame (0: no cap)");
    bind(app, "--eps", [](RunConfig& c) -> auto& { return c.eps; }, "marker epsilon");
    bind(app, "--scan-chunk", [](RunConfig& c) -> auto& { return c.scan_chunk; }, "scan chunk length");
    bind(app, "--threads", [](RunConfig& c) -> auto& { return c.threads; }, "worker threads (0: default)");
    flag(app, "--soft-masks", [](RunConfig& c) -> auto& { return c.soft_masks; }, "feed back soft masks");
    flag(app, "--oracle-marks", [](RunConfig& c) -> auto& { return c.oracle_marks; },
         "feed ground-truth marks and echo them as tracking masks");
    no_flag(app, "--no-admit", [](RunConfig& c) -> auto& { return c.admit_detections; }, "never admit detections");
  }

  RunConfig resolve(std::ostream& log) const {
    RunConfig c = path_.empty() ? defaults_ : RunConfig::from_json(read_text(path_), defaults_);
    for (const auto& [opt, apply] : overrides_)
      if (opt->count() > 0) apply(c);
    c.validate();
    if (c.threads) set_max_threads(c.threads);
    log << "# config " << c.to_json() << "\n";
    return c;
  }

 private:
  template <class F>
  void bind(CLI::App* app, const std::string& name, F field, const std::string& desc) {
    CLI::Option* opt = app->add_option(name, field(flags_), desc)->capture_default_str();
    overrides_.emplace_back(opt, [this, field](RunConfig& c) { field(c) = field(flags_); });
  }
  template <class F>
  void flag(CLI::App* app, const std::string& name, F field, const std::string& desc) {
    CLI::Option* opt = app->add_flag(name, field(flags_), desc);
    overrides_.emplace_back(opt, [field](RunConfig& c) { field(c) = true; });
  }
  template <class F>
  void no_flag(CLI::App* app, const std::string& name, F field, const std::string& desc) {
    CLI::Option* opt = app->add_flag(name, desc);
    overrides_.emplace_back(opt, [field](RunConfig& c) { field(c) = false; });
  }

  RunConfig flags_;
  RunConfig defaults_;
  std::string path_;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides_;
};

std::vector<std::size_t> parse_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t next = s.find(',', pos);
    const std::string item = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw InputError("bad list item '" + item + "'");
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Autoregressive video segmentation: streaming inference, teacher-forced forms and evaluation"};
  app.require_subcommand(1);

  GenOptions gen;
  std::string entry;
  auto* g = app.add_subcommand("gen", "write a synthetic video with ground truth");
  ConfigFlags gen_cfg(g, RunConfig{});
  g->add_option("--T", gen.T, "frames")->capture_default_str();
  g->add_option("--objects", gen.n_objects, "number of objects")->capture_default_str();
  g->add_option("--entry", entry, "comma-separated 1-based entry frame per object");
  g->add_flag("--zero-velocity", gen.zero_velocity, "static objects");
  g->add_flag("--grid-aligned", gen.grid_aligned, "static rectangles on the patch grid");
  g->add_option("--out", gen.out, "output directory")->required();

  WeightsInitOptions wi;
  auto* w = app.add_subcommand("weights-init", "write deterministic initial weights");
  ConfigFlags wi_cfg(w, RunConfig{});
  w->add_option("--out", wi.out, "output .atb file")->required();

  InferOptions inf;
  std::string inf_prompt, inf_id;
  auto* in = app.add_subcommand("infer", "streaming inference over a video");
  ConfigFlags inf_cfg(in, RunConfig{});
  in->add_option("--video", inf.video, "video .avr")->required();
  in->add_option("--weights", inf.weights, "weights .atb")->required();
  in->add_option("--prompt", inf_prompt, "prompt masks .avr; enables prompted mode");
  in->add_option("--video-id", inf_id, "video id written to pred.json");
  in->add_option("--out", inf.out, "output directory")->required();

  ScaleOptions sc;
  std::string sc_prompt, sc_id;
  auto* s = app.add_subcommand("scale", "inference over a repeated or quadrant-augmented sequence");
  ConfigFlags sc_cfg(s, RunConfig{});
  s->add_option("--video", sc.infer.video, "video .avr")->required();
  s->add_option("--weights", sc.infer.weights, "weights .atb")->required();
  s->add_option("--prompt", sc_prompt, "prompt masks .avr");
  s->add_option("--video-id", sc_id, "video id written to pred.json");
  s->add_option("--out", sc.infer.out, "output directory")->required();
  s->add_option("--reps", sc.reps, "repetitions")->capture_default_str();
  s->add_flag("--quadrant", sc.quadrant, "quadrant sequence of one frame");
  s->add_option("--crop-fraction", sc.crop_fraction, "quadrant crop fraction")->capture_default_str();
  s->add_option("--frame", sc.frame, "frame used in quadrant mode")->capture_default_str();

  EquivOptions eq;
  std::string eq_report;
  auto* e = app.add_subcommand("equiv", "compare recurrent and parallel teacher-forced forms");
  ConfigFlags eq_cfg(e, equivalence_defaults());
  e->add_option("--T", eq.T, "frames")->capture_default_str();
  e->add_option("--objects", eq.n_objects, "number of objects")->capture_default_str();
  e->add_option("--tolerance", eq.tolerance, "max allowed deviation")->capture_default_str();
  e->add_option("--report", eq_report, "write a JSON report");

  BenchCmdOptions be;
  std::string seq_lens = "1,2,4,8,16", be_csv;
  auto* b = app.add_subcommand("bench", "time both teacher-forced forms over sequence lengths");
  ConfigFlags be_cfg(b, bench_defaults());
  b->add_option("--seq-lens", seq_lens, "comma-separated lengths")->capture_default_str();
  b->add_option("--repeats", be.repeats, "timed repetitions")->capture_default_str();
  b->add_option("--warmup", be.warmup, "untimed repetitions")->capture_default_str();
  b->add_option("--objects", be.n_objects, "number of objects")->capture_default_str();
  b->add_option("--csv", be_csv, "also write the CSV here");

  EvalOptions ev;
  std::string ev_report;
  auto* v = app.add_subcommand("eval", "score predictions against ground truth");
  v->add_option("--pred", ev.pred, "pred.json")->required();
  v->add_option("--gt", ev.gt, "gt.json")->required();
  v->add_option("--metric", ev.metric, "jf, g, ap or all")->capture_default_str();
  v->add_option("--report", ev_report, "write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    std::ostream& out = std::cout;
    std::ostream& log = std::cerr;
    if (g->parsed()) {
      gen.config = gen_cfg.resolve(log);
      if (!entry.empty()) gen.entry_schedule = parse_list(entry);
      return cmd_gen(gen, out);
    }
    if (w->parsed()) {
      wi.config = wi_cfg.resolve(log);
      return cmd_weights_init(wi, out);
    }
    if (in->parsed()) {
      inf.config = inf_cfg.resolve(log);
      if (!inf_prompt.empty()) inf.prompt = inf_prompt;
      if (!inf_id.empty()) inf.video_id = inf_id;
      return cmd_infer(inf, out);
    }
    if (s->parsed()) {
      sc.infer.config = sc_cfg.resolve(log);
      if (!sc_prompt.empty()) sc.infer.prompt = sc_prompt;
      if (!sc_id.empty()) sc.infer.video_id = sc_id;
      return cmd_scale(sc, out);
    }
    if (e->parsed()) {
      eq.config = eq_cfg.resolve(log);
      if (!eq_report.empty()) eq.report = eq_report;
      return cmd_equiv(eq, out);
    }
    if (b->parsed()) {
      be.config = be_cfg.resolve(log);
      be.seq_lens = parse_list(seq_lens);
      if (!be_csv.empty()) be.csv = be_csv;
      return cmd_bench(be, out);
    }
    if (v->parsed()) {
      if (!ev_report.empty()) ev.report = ev_report;
      return cmd_eval(ev, out);
    }
  } catch (const ContractError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kFailure;
  } catch (const PoolExhaustedError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kFailure;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kInputError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kFailure;
  }
  return kInputError;
}

}  // namespace ausm::cli
