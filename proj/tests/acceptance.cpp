// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Tolerances are pinned here and nowhere else.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "flamegan/cli.hpp"
#include "flamegan/eval.hpp"
#include "flamegan/nn/grad_check.hpp"
#include "support.hpp"

using namespace flamegan;
namespace fs = std::filesystem;

namespace {

constexpr double kBijectionBudgetS = 5.0;
constexpr double kGradBound = 1e-4;
constexpr double kLinearGradBound = 1e-8;
constexpr double kGradBudgetS = 60.0;
constexpr double kInitLossTolerance = 0.15;
constexpr double kToyMinTnr = 90.0;
constexpr double kToyMinTpr = 85.0;
constexpr double kToyBudgetS = 15 * 60.0;
constexpr double kCubeBudgetMs = 50.0;
constexpr double kSimulatedSecondS = 1.0;
constexpr std::uint64_t kSeeds[] = {41, 42, 43};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

std::size_t cube_mismatches(std::size_t t, std::size_t s, std::uint64_t seed) {
  nn::Rng rng(seed);
  Block b;
  b.frames = testing::random_frames(t, s, rng);
  const SliceCube cube = build_cube(b);
  const auto raw = cube.raw();
  std::size_t bad = 0;
  for (std::size_t ti = 0; ti < t; ++ti)
    for (std::size_t y = 0; y < s; ++y)
      for (std::size_t x = 0; x < s; ++x)
        for (std::size_t c = 0; c < 3; ++c)
          bad += raw[(ti * s + y) * 3 * s + 3 * x + c] != b.frames[ti].at(y, x, c);
  return bad + (raw.size() != t * s * 3 * s);
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  std::size_t bad = cube_mismatches(64, 128, 1);
  for (auto [t, s] : {std::pair<std::size_t, std::size_t>{4, 4}, {16, 32}, {64, 128}})
    bad += cube_mismatches(t, s, 100 + t);
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < kBijectionBudgetS, fmt("%zu mismatches, %.2f s", bad, secs)};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  double worst = 0.0, linear = 1.0;
  std::string worst_name;
  auto take = [&](const std::vector<nn::GradCheckResult>& rs) {
    for (const auto& r : rs) {
      if (r.name.rfind("dense", 0) == 0) linear = r.max_relative_error;
      if (r.max_relative_error > worst) worst = r.max_relative_error, worst_name = r.name;
    }
  };
  take(nn::check_layers(1e-6));
  take(check_discriminator(NetSpec::toy()));
  const double secs = seconds_since(t0);
  return {worst < kGradBound && linear < kLinearGradBound && secs < kGradBudgetS,
          fmt("max %.2e (%s), dense %.2e, %.1f s", worst, worst_name.c_str(), linear, secs)};
}

Outcome criterion3(const std::vector<Sample>& flame) {
  nn::Rng rng(42);
  const Generator g(NetSpec::toy(), rng);
  const Discriminator d(NetSpec::toy(), rng);
  const TrainConfig cfg;
  const std::size_t m = cfg.batch_flame;
  double dl = 0, gl = 0;
  for (std::size_t b = 0; b < 10; ++b) {
    std::vector<const Sample*> batch;
    for (std::size_t i = 0; i < m; ++i) batch.push_back(&flame[(b * m + i) % flame.size()]);
    dl += sg1_loss(d, g, make_batch(batch), sample_noise(m, 100, rng), cfg, rng).disc_loss;
    gl += gen_loss(d, g, sample_noise(m, 100, rng), cfg, rng);
  }
  dl /= 10, gl /= 10;
  const bool ok = std::abs(dl - 2 * std::numbers::ln2) <= kInitLossTolerance &&
                  std::abs(gl - std::numbers::ln2) <= kInitLossTolerance;
  return {ok, fmt("D loss %.4f (2 ln 2 = %.4f), G loss %.4f (ln 2 = %.4f)", dl, 2 * std::numbers::ln2,
                  gl, std::numbers::ln2)};
}

// Refined and unrefined toy runs for one seed.
struct SeedRun {
  std::vector<AblationRun> runs;  // dcgan_slices, dcgan_norefine
  double seconds = 0;
};

SeedRun slices_run(std::uint64_t seed) {
  ToyDatasetSpec ds;
  ds.seed = seed;
  TrainConfig cfg;
  cfg.seed = seed;
  const auto t0 = Clock::now();
  const DatasetSplit split = split_dataset(build_toy_dataset(ds), SplitSpec{3, 1, 1, seed});
  const AblationMode modes[] = {AblationMode::dcgan_slices, AblationMode::dcgan_norefine};
  SeedRun r{run_ablations(modes, split, NetSpec::toy(), cfg), 0};
  r.seconds = seconds_since(t0);
  return r;
}

Outcome criterion4(const SeedRun& r) {
  const auto& c = r.runs[0].row.counts;
  const double tnr = c.tnr().value_or(0), tpr = c.tpr().value_or(0);
  return {tnr >= kToyMinTnr && tpr >= kToyMinTpr && r.seconds <= kToyBudgetS,
          fmt("TNR %.2f%%, TPR %.2f%% (TP %llu FN %llu TN %llu FP %llu), %.0f s incl. unrefined eval",
              tnr, tpr, (unsigned long long)c.tp, (unsigned long long)c.fn, (unsigned long long)c.tn,
              (unsigned long long)c.fp, r.seconds)};
}

Outcome criterion5(const std::map<std::uint64_t, SeedRun>& runs) {
  int wins = 0;
  double refined = 0, unrefined = 0;
  std::string detail;
  for (const auto& [seed, r] : runs) {
    const double a = r.runs[0].row.counts.tnr().value_or(0), b = r.runs[1].row.counts.tnr().value_or(0);
    wins += a >= b;
    refined += a, unrefined += b;
    detail += fmt("seed %llu %.2f vs %.2f; ", (unsigned long long)seed, a, b);
  }
  refined /= double(runs.size()), unrefined /= double(runs.size());
  return {wins >= 2 && refined > unrefined,
          detail + fmt("mean TNR refined %.2f vs unrefined %.2f", refined, unrefined)};
}

Outcome criterion6() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    ToyDatasetSpec ds;
    ds.seed = seed;
    ds.chromatic_negatives = true;
    TrainConfig cfg;
    cfg.seed = seed;
    const DatasetSplit split = split_dataset(build_toy_dataset(ds), SplitSpec{3, 1, 1, seed});
    const AblationMode modes[] = {AblationMode::dcgan_slices, AblationMode::dcgan_frames};
    const auto runs = run_ablations(modes, split, NetSpec::toy(), cfg);
    const double slices = 100 - runs[0].row.counts.tnr().value_or(0);
    const double frames = 100 - runs[1].row.counts.tnr().value_or(0);
    wins += slices < frames;
    detail += fmt("seed %llu FPR slices %.2f vs frames %.2f; ", (unsigned long long)seed, slices, frames);
  }
  return {wins >= 2, detail + fmt("slices lower in %d of 3", wins)};
}

Outcome criterion7(const Discriminator& toy_model) {
  nn::Rng rng(7);
  Block b;
  b.frames = testing::random_frames(kFullBlockFrames, kFullFrameSize, rng);
  std::vector<double> ms;
  for (int i = 0; i < 5; ++i) {
    const auto t0 = Clock::now();
    const SliceCube cube = normalize_cube(build_cube(b));
    ms.push_back(seconds_since(t0) * 1e3);
    if (cube.values().size() != 64 * 128 * 384) ms.back() = 1e9;
  }
  std::sort(ms.begin(), ms.end());
  const double cube_ms = ms[ms.size() / 2];

  // 30 s toy clip; each 16-frame block covers 1.6 simulated seconds.
  testing::TempDir dir("accept_detect");
  SynthSpec s;
  s.duration_s = 30;
  s.width = s.height = 32;
  s.block_frames = 16;
  s.seed = 7;
  write_frame_sequence(synth_video(s), dir / "clip");
  std::size_t blocks = 0;
  double worst_latency = 0;
  const auto t0 = Clock::now();
  detect_stream(toy_model, dir / "clip", kDefaultThreshold, [&](const DetectionEvent& e) {
    ++blocks;
    worst_latency = std::max(worst_latency, e.latency_ms);
  });
  const double wall = seconds_since(t0);
  const double per_block = blocks ? wall / double(blocks) : 1e9;
  const bool ok = cube_ms < kCubeBudgetMs && blocks == 18 && per_block < kSimulatedSecondS;
  return {ok, fmt("cube build+normalize %.1f ms (median of 5); detect %zu blocks in %.2f s, %.1f ms per "
                  "block, worst decision latency %.1f ms",
                  cube_ms, blocks, wall, per_block * 1e3, worst_latency)};
}

Outcome criterion8(const SeedRun& first) {
  const SeedRun second = slices_run(42);
  testing::TempDir dir("accept_det");
  const TrainConfig cfg;
  save_discriminator(first.runs[0].disc, cfg, dir / "a.ckpt");
  save_discriminator(second.runs[0].disc, cfg, dir / "b.ckpt");
  const bool same_ckpt = testing::file_bytes(dir / "a.ckpt") == testing::file_bytes(dir / "b.ckpt");
  const std::string ja = to_json(first.runs[0].row).dump(), jb = to_json(second.runs[0].row).dump();
  return {same_ckpt && ja == jb,
          fmt("checkpoint %s, metrics JSON %s", same_ckpt ? "identical" : "DIFFERS",
              ja == jb ? "identical" : "DIFFERS")};
}

Outcome criterion9() {
  auto cube = [](double score) {
    std::vector<std::uint8_t> raw(64 * 2 * 6, 0);
    raw[0] = std::uint8_t(std::lround(score * 255));
    return SliceCube(64, 2, raw);
  };
  DatasetManifest m;
  m.clips.push_back({"a", Label::flame, {}, {cube(0.9)}});
  m.clips.push_back({"b", Label::flame, {}, {cube(0.2)}});
  m.clips.push_back({"c", Label::nonflame, {}, {cube(0.1)}});
  m.clips.push_back({"d", Label::nonflame, {}, {cube(0.8)}});
  const Scorer byte = [](std::span<const Sample* const> batch) {
    std::vector<double> p;
    for (const Sample* s : batch) p.push_back(s->pixels[0] / 255.0);
    return p;
  };
  const ConfusionCounts c = evaluate(byte, m);
  const std::string tnr = fmt("%.2f", *c.tnr()), tpr = fmt("%.2f", *c.tpr());
  const bool ok = c == ConfusionCounts{64, 64, 64, 64} && tnr == "50.00" && tpr == "50.00";
  return {ok, fmt("TP %llu FN %llu TN %llu FP %llu, TNR %s%%, TPR %s%%", (unsigned long long)c.tp,
                  (unsigned long long)c.fn, (unsigned long long)c.tn, (unsigned long long)c.fp,
                  tnr.c_str(), tpr.c_str())};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const char* name, const std::function<Outcome()>& f) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d %s [%s] %s (%.1f s)\n", n, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  };

  report(9, "evaluation accounting", criterion9);
  report(1, "slice-cube bijection", criterion1);
  report(2, "gradient verification", criterion2);
  report(3, "loss at initialization", [] {
    ToyDatasetSpec ds;
    ds.flame_clips = 20;
    ds.nonflame_clips = 0;
    return criterion3(collect_samples(build_toy_dataset(ds), InputForm::slices).samples);
  });

  std::map<std::uint64_t, SeedRun> runs;
  report(4, "toy end-to-end", [&] {
    runs[42] = slices_run(42);
    return criterion4(runs[42]);
  });
  report(5, "refinement direction", [&] {
    for (std::uint64_t s : kSeeds)
      if (!runs.count(s)) runs[s] = slices_run(s);
    return criterion5(runs);
  });
  report(6, "temporal direction", criterion6);
  report(7, "real-time budget", [&] {
    if (!runs.count(42)) runs[42] = slices_run(42);
    return criterion7(runs[42].runs[0].disc);
  });
  report(8, "determinism", [&] {
    if (!runs.count(42)) runs[42] = slices_run(42);
    return criterion8(runs[42]);
  });
  std::printf("%d of 9 criteria failed\n", failures);
  return failures ? 1 : 0;
}
