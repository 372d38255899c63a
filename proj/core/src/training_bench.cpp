#include "ausm/training_bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "ausm/engine.hpp"
#include "ausm/error.hpp"
#include "ausm/synthetic.hpp"

namespace ausm {

namespace {

struct Stats {
  double mean = 0.0, stdev = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.stdev += (x - s.mean) * (x - s.mean);
  s.stdev = v.size() > 1 ? std::sqrt(s.stdev / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

template <class F>
double time_once(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TeacherForcingCase make_teacher_forcing_case(const WeightBundle& w, std::uint64_t seed, std::size_t T,
                                             std::size_t height, std::size_t width, std::size_t n_objects) {
  SyntheticOptions so;
  so.seed = seed;
  so.T = T;
  so.height = height;
  so.width = width;
  so.n_objects = n_objects;
  so.patch = w.dims().P;
  so.num_classes = w.dims().K;
  TeacherForcingCase c{generate(so), {}};
  std::vector<GroundTruthTrack> tracks = to_feature_tracks(c.video.tracks, w.dims().P);
  Rng rng(splitmix64(seed ^ 0x7465616368ULL));
  std::vector<std::size_t> ts = sample_timesteps(tracks, T, rng);
  IdentityRegistry reg(w.get(param::kIdPool), height / w.dims().P, width / w.dims().P, seed);
  c.plan = build_plan(std::move(tracks), std::move(ts), reg, T);
  return c;
}

std::vector<BenchRow> benchmark_training_forms(const WeightBundle& w, const BenchOptions& o) {
  if (o.repeats == 0) throw ConfigError("bench repeats must be >= 1");
  std::vector<BenchRow> rows;
  for (std::size_t T : o.seq_lens) {
    if (T == 0) throw ConfigError("sequence lengths must be >= 1");
    const TeacherForcingCase c = make_teacher_forcing_case(w, o.seed, T, o.height, o.width, o.n_objects);
    const auto& video = c.video;
    const auto& plan = c.plan;

    std::vector<double> it, par;
    for (std::size_t r = 0; r < o.warmup + o.repeats; ++r) {
      const double a = time_once([&] { (void)run_recurrent_teacher_forced(video.frames, plan, w); });
      const double b = time_once([&] { (void)run_parallel(video.frames, plan, w); });
      if (r >= o.warmup) {
        it.push_back(a);
        par.push_back(b);
      }
    }
    const Stats si = stats(it), sp = stats(par);
    rows.push_back({"iterative", T, si.mean, si.stdev, 1.0});
    rows.push_back({"parallel", T, sp.mean, sp.stdev, si.mean / sp.mean});
  }
  return rows;
}

std::string bench_csv(std::span<const BenchRow> rows) {
  std::string out = std::string(kBenchCsvHeader) + "\n";
  char buf[256];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%.4f\n", r.mode.c_str(), r.seq_len, r.mean_s, r.std_s,
                  r.speedup_vs_iterative);
    out += buf;
  }
  return out;
}

}  // namespace ausm
