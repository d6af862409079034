#include "flamegan/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "flamegan/error.hpp"
#include "flamegan/eval.hpp"

namespace flamegan {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const DetectionEvent& e) {
  return {{"source_id", e.source_id},
          {"start_time_s", e.start_time_s},
          {"score", e.score},
          {"decision", to_string(e.decision)},
          {"latency_ms", e.latency_ms}};
}

std::size_t detect_stream(const Discriminator& disc, const fs::path& frame_dir, double threshold,
                          const std::function<void(const DetectionEvent&)>& emit) {
  const FrameDirectory fd = open_frame_directory(frame_dir);
  const GridShape in = disc.spec().input;
  if (in.channels != 3 * in.width || fd.width != in.width || fd.height != in.width) {
    throw ConfigError("model expects " + std::to_string(in.height) + "x" + std::to_string(in.width) +
                      "x" + std::to_string(in.channels) + " cubes, frames are " +
                      std::to_string(fd.width) + "x" + std::to_string(fd.height));
  }
  using clock = std::chrono::steady_clock;
  const std::size_t block_frames = in.height;
  std::size_t blocks = 0;
  Block block;
  block.source_id = fd.source_id;
  for (std::size_t index : temporal_sample_indices(fd.frame_count(), fd.fps)) {
    block.frames.push_back(fd.read(index));
    if (block.frames.size() < block_frames) continue;
    const auto ready = clock::now();
    block.start_time_s = double(blocks * block_frames) / double(kSamplesPerSecond);
    const Classification c = classify(disc, normalize_cube(build_cube(block)), threshold);
    const double latency =
        std::chrono::duration<double, std::milli>(clock::now() - ready).count();
    emit({fd.source_id, block.start_time_s, c.score, c.decision, latency});
    block.frames.clear();
    ++blocks;
  }
  return blocks;
}

namespace {

struct ModelFlags {
  std::string spec_file;
  std::string config_file;
  bool toy = false;
  bool deterministic = false;
  std::optional<std::uint64_t> seed;
};

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

NetSpec resolve_spec(const ModelFlags& f) {
  NetSpec spec = !f.spec_file.empty() ? net_spec_from_json(read_text_file(f.spec_file))
                 : f.toy              ? NetSpec::toy()
                                      : NetSpec::full();
  spec.validate();
  return spec;
}

TrainConfig apply_overrides(TrainConfig c, const ModelFlags& f) {
  if (!f.config_file.empty()) c = train_config_from_json(read_text_file(f.config_file));
  if (f.seed) c.seed = *f.seed;
  if (f.deterministic) c.deterministic = true;
  c.validate();
  return c;
}

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  auto* spec = cmd->add_option("--spec", f.spec_file, "NetSpec JSON file")->check(CLI::ExistingFile);
  cmd->add_flag("--toy", f.toy, "toy-scale network (T=16, S=32)")->excludes(spec);
  cmd->add_option("--config", f.config_file, "TrainConfig JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "training seed");
  cmd->add_flag("--deterministic", f.deterministic, "disable input noise and dropout");
}

DatasetManifest select_partition(const DatasetManifest& all, const std::string& partition,
                                 std::uint64_t seed) {
  if (partition == "all") return all;
  SplitSpec s;
  s.seed = seed;
  const DatasetSplit split = split_dataset(all, s);
  if (partition == "train") return split.train;
  if (partition == "val") return split.val;
  return split.test;
}

void print_rows(std::ostream& out, std::span<const MetricsRow> rows, const std::string& format) {
  if (format == "json") {
    for (const auto& r : rows) out << to_json(r).dump() << '\n';
  } else {
    out << format_table(rows);
  }
}

// ---------------------------------------------------------------------------

struct SynthFlags {
  std::string kind = "flicker_blob";
  std::uint64_t seed = 42;
  double fps = 30.0;
  std::optional<double> duration;
  std::optional<std::size_t> size;
  std::optional<std::size_t> block;
  double band = 10.0;
  bool flame_hued = false;
  bool toy = false;
  bool corpus = false;
  std::size_t flame_clips = 120;
  std::size_t nonflame_clips = 80;
  bool chromatic = false;
  std::string output;
};

int cmd_synth(const SynthFlags& f, std::ostream&, std::ostream& err) {
  const double duration = f.duration.value_or(f.toy ? 5.0 : 10.0);
  const std::size_t size = f.size.value_or(f.toy ? 32 : kFullFrameSize);
  const std::size_t block = f.block.value_or(f.toy ? 16 : kFullBlockFrames);
  const fs::path out = f.output;

  if (!f.corpus) {
    SynthSpec s;
    s.kind = parse_synth_kind(f.kind);
    s.seed = f.seed;
    s.fps = f.fps;
    s.duration_s = duration;
    s.width = s.height = size;
    s.flicker_band_hz = f.band;
    s.flame_hued_light = f.flame_hued;
    s.block_frames = block;
    s.validate();
    VideoSequence v = synth_video(s);
    write_frame_sequence(v, out);
    err << "wrote " << v.frames.size() << " frames (" << to_string(v.label) << ") to " << out << '\n';
    return kExitOk;
  }

  ToyDatasetSpec ds;
  ds.flame_clips = f.flame_clips;
  ds.nonflame_clips = f.nonflame_clips;
  ds.duration_s = duration;
  ds.fps = f.fps;
  ds.size = size;
  ds.block_frames = block;
  ds.seed = f.seed;
  ds.chromatic_negatives = f.chromatic;
  const std::size_t total = ds.flame_clips + ds.nonflame_clips;
  if (total == 0) throw ParamError("corpus needs at least one clip");
  toy_positive_spec(ds, 0).validate();
  std::vector<std::string> errors(total);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(total); ++i) {
    try {
      const bool positive = std::size_t(i) < ds.flame_clips;
      const std::size_t k = positive ? std::size_t(i) : std::size_t(i) - ds.flame_clips;
      const SynthSpec s = positive ? toy_positive_spec(ds, k) : toy_negative_spec(ds, k);
      const std::string id = (positive ? "flame_" : "nonflame_") + std::to_string(k);
      write_frame_sequence(synth_video(s), out / id);
    } catch (const std::exception& e) {
      errors[std::size_t(i)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw IoError(e);
  err << "wrote " << total << " clips to " << out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SliceFlags {
  std::string input;
  std::string output;
  std::optional<std::size_t> block;
  std::optional<std::size_t> size;
  bool toy = false;
};

int cmd_slice(const SliceFlags& f, std::ostream&, std::ostream& err) {
  const std::size_t block = f.block.value_or(f.toy ? 16 : kFullBlockFrames);
  const std::size_t size = f.size.value_or(f.toy ? 32 : kFullFrameSize);
  if (block == 0 || size == 0) throw ParamError("block and size must be positive");

  std::vector<fs::path> dirs;
  if (fs::is_regular_file(fs::path(f.input) / kManifestName)) {
    dirs.push_back(f.input);
  } else {
    if (!fs::is_directory(f.input)) throw ManifestError("no frame directories under " + f.input);
    for (const auto& e : fs::directory_iterator(f.input))
      if (e.is_directory() && fs::is_regular_file(e.path() / kManifestName)) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw ManifestError("no frame directories under " + f.input);
  }

  const fs::path out = f.output;
  fs::create_directories(out / "cubes");
  DatasetManifest manifest;
  manifest.root = out;
  std::size_t cubes = 0;
  for (const fs::path& d : dirs) {
    const VideoSequence v = read_frame_sequence(d);
    if (v.label == Label::unlabeled) throw ManifestError(d.string() + " has no label");
    ClipEntry entry{v.source_id, v.label, {}, {}};
    const auto clip = clip_cubes(v, block, size);
    for (std::size_t k = 0; k < clip.size(); ++k) {
      const std::string name = "cubes/" + v.source_id + "_" + std::to_string(k) + ".scub";
      write_cube(clip[k], out / name);
      entry.cube_files.push_back(name);
    }
    if (clip.empty()) err << "warning: " << d << " is too short for one block\n";
    cubes += clip.size();
    manifest.clips.push_back(std::move(entry));
  }
  write_dataset(manifest, out);
  err << "sliced " << dirs.size() << " clips into " << cubes << " cubes (" << block << "x" << size
      << "x" << 3 * size << ") at " << out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

std::vector<Sample> label_samples(const DatasetManifest& m, Label label) {
  return collect_samples(m, InputForm::slices).with_label(label);
}

struct TrainFlags {
  std::string input;
  std::string output;
  ModelFlags model;
};

int cmd_train(const TrainFlags& f, std::ostream&, std::ostream& err) {
  const NetSpec spec = resolve_spec(f.model);
  const TrainConfig config = apply_overrides(TrainConfig{}, f.model);
  const DatasetManifest train = select_partition(read_dataset(f.input), "train", config.seed);
  const auto flame = label_samples(train, Label::flame);
  const Stage1Result r = train_stage1(flame, spec, config);
  const fs::path out = f.output;
  fs::create_directories(out);
  save_generator(r.gen, config, out / "generator.ckpt");
  save_discriminator(r.disc, config, out / "discriminator.ckpt");
  if (!r.history.empty()) {
    const auto& last = r.history.back();
    err << "stage 1: " << r.history.size() << " steps on " << flame.size()
        << " flame cubes, final D loss " << last.disc_loss << ", G loss " << last.gen_loss << '\n';
  }
  return kExitOk;
}

struct RefineFlags {
  std::string model;
  std::string gan_model;
  std::string input;
  std::string output;
  std::string config_file;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

int cmd_refine(const RefineFlags& f, std::ostream&, std::ostream& err) {
  LoadedDiscriminator loaded = load_discriminator(f.model);
  ModelFlags mf;
  mf.config_file = f.config_file;
  mf.seed = f.seed;
  mf.deterministic = f.deterministic;
  const TrainConfig config = apply_overrides(loaded.config, mf);
  if (!f.gan_model.empty()) err << "note: the generator is frozen during refinement and not read\n";
  const DatasetManifest train = select_partition(read_dataset(f.input), "train", config.seed);
  const Stage2Result r = train_stage2(std::move(loaded.disc), label_samples(train, Label::flame),
                                      label_samples(train, Label::nonflame), config);
  save_discriminator(r.disc, config, f.output);
  if (!r.history.empty())
    err << "stage 2: " << r.history.size() << " steps, final loss " << r.history.back() << '\n';
  return kExitOk;
}

struct EvalFlags {
  std::string model;
  std::string input;
  std::string output;
  std::string format = "text";
  std::string partition = "test";
  std::string mode = "dcgan_slices";
  double threshold = kDefaultThreshold;
  std::optional<std::uint64_t> seed;
  bool per_block = false;
};

int cmd_eval(const EvalFlags& f, std::ostream& out, std::ostream&) {
  const LoadedDiscriminator loaded = load_discriminator(f.model);
  const std::uint64_t seed = f.seed.value_or(loaded.config.seed);
  const DatasetManifest test = select_partition(read_dataset(f.input), f.partition, seed);
  EvalOptions opts;
  opts.threshold = f.threshold;
  opts.per_block = f.per_block;
  opts.form = loaded.disc.spec().input.channels == 3 ? InputForm::frames : InputForm::slices;
  const MetricsRow row{f.mode, f.threshold, evaluate(loaded.disc, test, opts), seed,
                       config_hash(loaded.disc.spec(), loaded.config)};
  print_rows(out, std::span(&row, 1), f.format);
  if (!f.output.empty()) write_text(f.output, to_json(row).dump(2) + "\n");
  return kExitOk;
}

struct AblateFlags {
  std::string input;
  std::string output;
  std::vector<std::string> modes;
  std::string format = "text";
  double threshold = kDefaultThreshold;
  ModelFlags model;
};

int cmd_ablate(const AblateFlags& f, std::ostream& out, std::ostream&) {
  const NetSpec spec = resolve_spec(f.model);
  const TrainConfig config = apply_overrides(TrainConfig{}, f.model);
  std::vector<AblationMode> modes;
  for (const auto& m : f.modes) {
    if (m == "all") {
      modes.assign(std::begin(kAllAblationModes), std::end(kAllAblationModes));
    } else {
      modes.push_back(parse_ablation_mode(m));
    }
  }
  if (modes.empty()) modes.assign(std::begin(kAllAblationModes), std::end(kAllAblationModes));
  SplitSpec s;
  s.seed = config.seed;
  const DatasetSplit split = split_dataset(read_dataset(f.input).materialized(), s);
  std::vector<MetricsRow> rows;
  for (auto& r : run_ablations(modes, split, spec, config, f.threshold)) rows.push_back(r.row);
  print_rows(out, rows, f.format);
  if (!f.output.empty()) {
    json j = json::array();
    for (const auto& r : rows) j.push_back(to_json(r));
    write_text(f.output, j.dump(2) + "\n");
  }
  return kExitOk;
}

struct DetectFlags {
  std::string model;
  std::string input;
  std::string format = "json";
  double threshold = kDefaultThreshold;
};

int cmd_detect(const DetectFlags& f, std::ostream& out, std::ostream& err) {
  const LoadedDiscriminator loaded = load_discriminator(f.model);
  std::size_t flames = 0;
  double worst = 0.0;
  const std::size_t blocks =
      detect_stream(loaded.disc, f.input, f.threshold, [&](const DetectionEvent& e) {
        if (e.decision == Label::flame) ++flames;
        worst = std::max(worst, e.latency_ms);
        if (f.format == "json") {
          out << to_json(e).dump() << '\n';
        } else {
          out << e.source_id << " t=" << e.start_time_s << "s score=" << e.score << ' '
              << to_string(e.decision) << '\n';
        }
        out.flush();
      });
  err << blocks << " blocks, " << flames << " flagged as flame, worst latency " << worst << " ms\n";
  return kExitOk;
}

struct GradFlags {
  std::string format = "text";
  std::uint64_t seed = 17;
};

int cmd_gradcheck(const GradFlags& f, std::ostream& out, std::ostream&) {
  constexpr double kBound = 1e-4;
  std::vector<std::pair<std::string, nn::GradCheckResult>> rows;
  for (auto& r : nn::check_layers(1e-6, f.seed)) rows.emplace_back("layer", r);
  for (auto& r : check_discriminator(NetSpec::toy(), 1e-5, f.seed)) rows.emplace_back("disc", r);
  for (auto& r : check_generator(NetSpec::toy(), 1e-5, f.seed)) rows.emplace_back("gen", r);
  bool ok = true;
  json report = json::array();
  for (const auto& [group, r] : rows) {
    const bool pass = r.max_relative_error < kBound;
    ok = ok && pass;
    if (f.format == "json") {
      report.push_back({{"group", group}, {"name", r.name}, {"max_relative_error", r.max_relative_error},
                        {"probes", r.probes}, {"pass", pass}});
    } else {
      out << (pass ? "ok   " : "FAIL ") << group << ' ' << r.name << "  " << r.max_relative_error
          << " (" << r.probes << " probes)\n";
    }
  }
  if (f.format == "json") out << report.dump(2) << '\n';
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flame detection on temporal-slice cubes with a two-stage DCGAN"};
  app.require_subcommand(1);
  const auto formats = CLI::IsMember({"json", "text"});

  SynthFlags synth;
  auto* c_synth = app.add_subcommand("synth", "write a synthetic clip (or corpus) as a frame directory");
  c_synth->add_option("--output", synth.output, "target directory")->required();
  c_synth->add_option("--kind", synth.kind, "flicker_blob | static_scene | moving_object | periodic_light");
  c_synth->add_option("--seed", synth.seed);
  c_synth->add_option("--fps", synth.fps);
  c_synth->add_option("--duration", synth.duration, "seconds");
  c_synth->add_option("--size", synth.size, "frame width and height");
  c_synth->add_option("--block", synth.block, "block length the clip must fill after sampling");
  c_synth->add_option("--band", synth.band, "flicker band in Hz");
  c_synth->add_flag("--flame-hued", synth.flame_hued, "periodic_light with a flame-coloured lamp");
  c_synth->add_flag("--toy", synth.toy, "toy defaults: 5 s, 32 px, 16-frame blocks");
  c_synth->add_flag("--corpus", synth.corpus, "write a labelled corpus of clips");
  c_synth->add_option("--flame-clips", synth.flame_clips);
  c_synth->add_option("--nonflame-clips", synth.nonflame_clips);
  c_synth->add_flag("--chromatic", synth.chromatic, "corpus negatives dominated by flame-coloured lights");

  SliceFlags slice;
  auto* c_slice = app.add_subcommand("slice", "cut frame directories into slice cubes");
  c_slice->add_option("--input", slice.input, "frame directory or a directory of them")->required();
  c_slice->add_option("--output", slice.output, "dataset directory")->required();
  c_slice->add_option("--block", slice.block, "frames per block (T)");
  c_slice->add_option("--size", slice.size, "frame size (S)");
  c_slice->add_flag("--toy", slice.toy, "T=16, S=32");

  TrainFlags train;
  auto* c_train = app.add_subcommand("train", "stage 1: adversarial training on flame cubes");
  c_train->add_option("--input", train.input, "dataset directory")->required();
  c_train->add_option("--output", train.output, "checkpoint directory")->required();
  add_model_flags(c_train, train.model);

  RefineFlags refine;
  auto* c_refine = app.add_subcommand("refine", "stage 2: flame vs non-flame refinement");
  c_refine->add_option("--model", refine.model, "stage-1 discriminator checkpoint")->required()->check(CLI::ExistingFile);
  c_refine->add_option("--gan-model", refine.gan_model, "generator checkpoint (unused, generator stays frozen)");
  c_refine->add_option("--input", refine.input, "dataset directory")->required();
  c_refine->add_option("--output", refine.output, "refined checkpoint path")->required();
  c_refine->add_option("--config", refine.config_file)->check(CLI::ExistingFile);
  c_refine->add_option("--seed", refine.seed);
  c_refine->add_flag("--deterministic", refine.deterministic);

  EvalFlags eval;
  auto* c_eval = app.add_subcommand("eval", "frame-based TNR/TPR of a discriminator");
  c_eval->add_option("--model", eval.model)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--input", eval.input, "dataset directory")->required();
  c_eval->add_option("--output", eval.output, "JSON report path");
  c_eval->add_option("--threshold", eval.threshold)->check(CLI::Range(0.0, 1.0));
  c_eval->add_option("--format", eval.format)->check(formats);
  c_eval->add_option("--partition", eval.partition)->check(CLI::IsMember({"train", "val", "test", "all"}));
  c_eval->add_option("--mode", eval.mode, "row label");
  c_eval->add_option("--seed", eval.seed, "split seed (default: training seed)");
  c_eval->add_flag("--per-block", eval.per_block, "count blocks instead of frames");

  AblateFlags ablate;
  auto* c_ablate = app.add_subcommand("ablate", "train and evaluate the four ablation modes");
  c_ablate->add_option("--input", ablate.input, "dataset directory")->required();
  c_ablate->add_option("--output", ablate.output, "JSON report path");
  c_ablate->add_option("--mode", ablate.modes, "dcgan_slices | cnn_slices | dcgan_frames | dcgan_norefine | all")
      ->check(CLI::IsMember({"all", "dcgan_slices", "cnn_slices", "dcgan_frames", "dcgan_norefine"}));
  c_ablate->add_option("--format", ablate.format)->check(formats);
  c_ablate->add_option("--threshold", ablate.threshold)->check(CLI::Range(0.0, 1.0));
  add_model_flags(c_ablate, ablate.model);

  DetectFlags detect;
  auto* c_detect = app.add_subcommand("detect", "stream a frame directory, one decision per block");
  c_detect->add_option("--model", detect.model)->required()->check(CLI::ExistingFile);
  c_detect->add_option("--input", detect.input, "frame directory")->required();
  c_detect->add_option("--threshold", detect.threshold)->check(CLI::Range(0.0, 1.0));
  c_detect->add_option("--format", detect.format)->check(formats);

  GradFlags grad;
  auto* c_grad = app.add_subcommand("gradcheck", "finite-difference verification of every layer");
  c_grad->add_option("--format", grad.format)->check(formats);
  c_grad->add_option("--seed", grad.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    if (app.get_subcommands().empty()) {
      err << app.help();
    } else {
      err << app.get_subcommands().front()->help();
    }
    return kExitUsage;
  }

  try {
    if (c_synth->parsed()) return cmd_synth(synth, out, err);
    if (c_slice->parsed()) return cmd_slice(slice, out, err);
    if (c_train->parsed()) return cmd_train(train, out, err);
    if (c_refine->parsed()) return cmd_refine(refine, out, err);
    if (c_eval->parsed()) return cmd_eval(eval, out, err);
    if (c_ablate->parsed()) return cmd_ablate(ablate, out, err);
    if (c_detect->parsed()) return cmd_detect(detect, out, err);
    if (c_grad->parsed()) return cmd_gradcheck(grad, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace flamegan
