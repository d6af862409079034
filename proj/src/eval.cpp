#include "flamegan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "flamegan/error.hpp"

namespace flamegan {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Manifest

std::size_t DatasetManifest::clip_count(Label label) const {
  return std::size_t(std::count_if(clips.begin(), clips.end(),
                                   [&](const ClipEntry& c) { return c.label == label; }));
}

std::size_t DatasetManifest::cube_count(Label label) const {
  std::size_t n = 0;
  for (const auto& c : clips)
    if (c.label == label) n += c.cube_count();
  return n;
}

std::vector<SliceCube> DatasetManifest::load_cubes(const ClipEntry& clip) const {
  if (!clip.cubes.empty()) return clip.cubes;
  std::vector<SliceCube> out;
  out.reserve(clip.cube_files.size());
  for (const auto& f : clip.cube_files) out.push_back(read_cube(root / f));
  return out;
}

DatasetManifest DatasetManifest::materialized() const {
  DatasetManifest out;
  out.root = root;
  for (const auto& clip : clips) {
    ClipEntry c = clip;
    c.cubes = load_cubes(clip);
    out.clips.push_back(std::move(c));
  }
  return out;
}

json to_json(const DatasetManifest& manifest) {
  json clips = json::array();
  for (const auto& c : manifest.clips) {
    if (c.cube_files.empty() && !c.cubes.empty()) {
      throw ConfigError("clip " + c.source_id + " has in-memory cubes only");
    }
    clips.push_back({{"source_id", c.source_id}, {"label", to_string(c.label)}, {"cubes", c.cube_files}});
  }
  return {{"clips", clips},
          {"counts",
           {{"flame_clips", manifest.clip_count(Label::flame)},
            {"nonflame_clips", manifest.clip_count(Label::nonflame)},
            {"flame_cubes", manifest.cube_count(Label::flame)},
            {"nonflame_cubes", manifest.cube_count(Label::nonflame)}}}};
}

DatasetManifest dataset_from_json(const json& j, const fs::path& root) {
  DatasetManifest m;
  m.root = root;
  try {
    for (const auto& c : j.at("clips")) {
      ClipEntry e;
      e.source_id = c.at("source_id").get<std::string>();
      e.label = parse_label(c.at("label").get<std::string>());
      if (e.label == Label::unlabeled) throw ManifestError("clip " + e.source_id + " is unlabeled");
      e.cube_files = c.at("cubes").get<std::vector<std::string>>();
      m.clips.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ManifestError(std::string("bad dataset manifest: ") + e.what());
  }
  return m;
}

void write_dataset(const DatasetManifest& manifest, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / kDatasetFileName);
  if (!out) throw IoError("cannot write " + (dir / kDatasetFileName).string());
  out << to_json(manifest).dump(2) << '\n';
  if (!out) throw IoError("write failed: " + (dir / kDatasetFileName).string());
}

DatasetManifest read_dataset(const fs::path& dir) {
  const fs::path path = dir / kDatasetFileName;
  std::ifstream in(path);
  if (!in) throw ManifestError("missing " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
  return dataset_from_json(j, dir);
}

// ---------------------------------------------------------------------------
// Split

void SplitSpec::validate() const {
  for (double r : {train, val, test}) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ParamError("split ratios must be positive");
  }
}

std::array<std::size_t, 3> split_counts(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 3) throw SplitError("need at least 3 clips per label, got " + std::to_string(n));
  const std::array<double, 3> ratio{spec.train, spec.val, spec.test};
  const double total = ratio[0] + ratio[1] + ratio[2];
  std::array<std::size_t, 3> count{};
  std::array<double, 3> rem{};
  std::size_t used = 0;
  for (int i = 0; i < 3; ++i) {
    const double share = double(n) * ratio[i] / total;
    count[i] = std::size_t(std::floor(share));
    rem[i] = share - double(count[i]);
    used += count[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++count[order[k % 3]];
  for (int i = 0; i < 3; ++i) {
    if (count[i] == 0) {
      const int big = int(std::max_element(count.begin(), count.end()) - count.begin());
      --count[big];
      ++count[i];
    }
  }
  return count;
}

DatasetSplit split_dataset(const DatasetManifest& manifest, const SplitSpec& spec) {
  if (manifest.empty()) throw EmptyInput("cannot split an empty dataset");
  spec.validate();
  std::vector<int> part(manifest.clips.size(), -1);
  nn::Rng root(spec.seed);
  for (Label label : {Label::flame, Label::nonflame}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < manifest.clips.size(); ++i)
      if (manifest.clips[i].label == label) idx.push_back(i);
    if (idx.empty()) continue;
    const auto counts = split_counts(idx.size(), spec);
    nn::Rng rng = root.fork(label == Label::flame ? 1 : 2);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    std::size_t k = 0;
    for (int p = 0; p < 3; ++p)
      for (std::size_t j = 0; j < counts[p]; ++j) part[idx[k++]] = p;
  }
  DatasetSplit out;
  for (auto* m : {&out.train, &out.val, &out.test}) m->root = manifest.root;
  for (std::size_t i = 0; i < manifest.clips.size(); ++i) {
    if (part[i] < 0) throw SplitError("clip " + manifest.clips[i].source_id + " has no label");
    DatasetManifest& dst = part[i] == 0 ? out.train : part[i] == 1 ? out.val : out.test;
    dst.clips.push_back(manifest.clips[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Counts

std::optional<double> ConfusionCounts::tnr() const {
  if (tn + fp == 0) return std::nullopt;
  return 100.0 * double(tn) / double(tn + fp);
}

std::optional<double> ConfusionCounts::tpr() const {
  if (tp + fn == 0) return std::nullopt;
  return 100.0 * double(tp) / double(tp + fn);
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

void tally(ConfusionCounts& counts, Label truth, Label decision, std::uint64_t weight) {
  if (truth == Label::flame) {
    (decision == Label::flame ? counts.tp : counts.fn) += weight;
  } else if (truth == Label::nonflame) {
    (decision == Label::flame ? counts.fp : counts.tn) += weight;
  } else {
    throw ParamError("cannot score an unlabeled sample");
  }
}

std::string to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::dcgan_slices: return "dcgan_slices";
    case AblationMode::cnn_slices: return "cnn_slices";
    case AblationMode::dcgan_frames: return "dcgan_frames";
    case AblationMode::dcgan_norefine: return "dcgan_norefine";
  }
  return "?";
}

AblationMode parse_ablation_mode(const std::string& text) {
  for (AblationMode m : kAllAblationModes)
    if (to_string(m) == text) return m;
  throw ParamError("unknown ablation mode '" + text + "'");
}

InputForm input_form(AblationMode mode) {
  return mode == AblationMode::dcgan_frames ? InputForm::frames : InputForm::slices;
}

json to_json(const MetricsRow& row) {
  const auto rate = [](std::optional<double> r) { return r ? json(*r) : json(nullptr); };
  return {{"mode", row.mode},
          {"threshold", row.threshold},
          {"TP", row.counts.tp},
          {"TN", row.counts.tn},
          {"FP", row.counts.fp},
          {"FN", row.counts.fn},
          {"TNR", rate(row.counts.tnr())},
          {"TPR", rate(row.counts.tpr())},
          {"seed", row.seed},
          {"config_hash", row.config_hash}};
}

std::string format_table(std::span<const MetricsRow> rows) {
  const auto rate = [](std::optional<double> r) {
    if (!r) return std::string("n/a");
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << *r;
    return s.str();
  };
  std::ostringstream out;
  out << std::left << std::setw(16) << "mode" << std::right << std::setw(8) << "TNR%"
      << std::setw(8) << "TPR%" << std::setw(8) << "TP" << std::setw(8) << "TN" << std::setw(8)
      << "FP" << std::setw(8) << "FN" << std::setw(7) << "thr" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(16) << r.mode << std::right << std::setw(8)
        << rate(r.counts.tnr()) << std::setw(8) << rate(r.counts.tpr()) << std::setw(8)
        << r.counts.tp << std::setw(8) << r.counts.tn << std::setw(8) << r.counts.fp
        << std::setw(8) << r.counts.fn << std::setw(7) << std::setprecision(3) << r.threshold
        << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<Sample> SampleSet::with_label(Label label) const {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (labels[i] == label) out.push_back(samples[i]);
  return out;
}

SampleSet collect_samples(const DatasetManifest& manifest, InputForm form) {
  SampleSet set;
  for (const auto& clip : manifest.clips) {
    for (const SliceCube& cube : manifest.load_cubes(clip)) {
      if (form == InputForm::slices) {
        set.samples.push_back(Sample::from_cube(cube));
        set.labels.push_back(clip.label);
        set.weights.push_back(cube.steps());
        continue;
      }
      // Cube row t holds frame t verbatim.
      const auto raw = cube.raw();
      const std::size_t per = cube.size() * cube.channels();
      for (std::size_t t = 0; t < cube.steps(); ++t) {
        set.samples.push_back({cube.size(), cube.size(), 3,
                               {raw.begin() + std::ptrdiff_t(t * per),
                                raw.begin() + std::ptrdiff_t((t + 1) * per)}});
        set.labels.push_back(clip.label);
        set.weights.push_back(1);
      }
    }
  }
  return set;
}

ConfusionCounts evaluate_scores(std::span<const double> scores, std::span<const Label> labels,
                                std::span<const std::uint64_t> weights, double threshold) {
  if (scores.size() != labels.size() || scores.size() != weights.size()) {
    throw DimensionError("scores, labels and weights differ in length");
  }
  ConfusionCounts counts;
  for (std::size_t i = 0; i < scores.size(); ++i)
    tally(counts, labels[i], decide(scores[i], threshold), weights[i]);
  return counts;
}

ConfusionCounts evaluate(const Scorer& scorer, const DatasetManifest& test,
                         const EvalOptions& options) {
  if (test.empty()) throw EmptyInput("empty test set");
  const SampleSet set = collect_samples(test, options.form);
  if (set.samples.empty()) throw EmptyInput("test set has no cubes");
  std::vector<double> scores;
  scores.reserve(set.samples.size());
  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  std::vector<const Sample*> ptrs;
  for (std::size_t start = 0; start < set.samples.size(); start += batch) {
    ptrs.clear();
    for (std::size_t i = start; i < std::min(start + batch, set.samples.size()); ++i)
      ptrs.push_back(&set.samples[i]);
    const auto s = scorer(ptrs);
    if (s.size() != ptrs.size()) throw DimensionError("scorer returned the wrong number of scores");
    scores.insert(scores.end(), s.begin(), s.end());
  }
  std::vector<std::uint64_t> weights = set.weights;
  if (options.per_block) {
    if (options.form == InputForm::frames) {
      throw ConfigError("per-block counting needs slice inputs");
    }
    std::fill(weights.begin(), weights.end(), 1);
  }
  return evaluate_scores(scores, set.labels, weights, options.threshold);
}

ConfusionCounts evaluate(const Discriminator& disc, const DatasetManifest& test,
                         const EvalOptions& options) {
  const GridShape in = disc.spec().input;
  const bool frames_net = in.channels == 3;
  if (frames_net != (options.form == InputForm::frames)) {
    throw ConfigError("model input " + std::to_string(in.height) + "x" + std::to_string(in.width) +
                      "x" + std::to_string(in.channels) + " does not match the evaluation form");
  }
  const Scorer scorer = [&](std::span<const Sample* const> batch) {
    for (const Sample* s : batch) {
      if (s->shape() != in) throw ConfigError("test sample shape does not match the model input");
    }
    return disc.probabilities(make_batch(batch));
  };
  return evaluate(scorer, test, options);
}

// ---------------------------------------------------------------------------
// Ablation

NetSpec frame_spec_for(const NetSpec& slice_spec) {
  NetSpec s = slice_spec;
  s.input = {slice_spec.input.width, slice_spec.input.width, 3};
  s.gen_layers.back().channels = 3;
  s.validate();
  return s;
}

namespace {

void check_split_shapes(const DatasetSplit& split, const NetSpec& spec) {
  for (const auto* m : {&split.train, &split.test}) {
    if (m->empty()) throw EmptyInput("ablation needs train and test clips");
    for (const auto& clip : m->clips) {
      for (const auto& cube : m->load_cubes(clip)) {
        if (GridShape{cube.steps(), cube.size(), cube.channels()} != spec.input) {
          throw ConfigError("cube of clip " + clip.source_id + " does not match the network input");
        }
      }
    }
  }
}

}  // namespace

std::vector<AblationRun> run_ablations(std::span<const AblationMode> modes,
                                       const DatasetSplit& split, const NetSpec& slice_spec,
                                       const TrainConfig& config, double threshold) {
  slice_spec.validate();
  config.validate();
  check_split_shapes(split, slice_spec);

  const SampleSet slice_train = collect_samples(split.train, InputForm::slices);
  const std::vector<Sample> flame = slice_train.with_label(Label::flame);
  const std::vector<Sample> nonflame = slice_train.with_label(Label::nonflame);

  std::optional<Stage1Result> slice_stage1;
  const auto stage1 = [&]() -> const Stage1Result& {
    if (!slice_stage1) slice_stage1.emplace(train_stage1(flame, slice_spec, config));
    return *slice_stage1;
  };

  std::vector<AblationRun> runs;
  for (AblationMode mode : modes) {
    NetSpec spec = slice_spec;
    std::optional<Discriminator> disc;
    switch (mode) {
      case AblationMode::dcgan_slices:
        disc.emplace(train_stage2(stage1().disc, flame, nonflame, config).disc);
        break;
      case AblationMode::dcgan_norefine:
        disc.emplace(stage1().disc);
        break;
      case AblationMode::cnn_slices:
        disc.emplace(train_supervised(flame, nonflame, slice_spec, config).disc);
        break;
      case AblationMode::dcgan_frames: {
        spec = frame_spec_for(slice_spec);
        const SampleSet frames = collect_samples(split.train, InputForm::frames);
        const auto f_flame = frames.with_label(Label::flame);
        const auto f_nonflame = frames.with_label(Label::nonflame);
        Stage1Result s1 = train_stage1(f_flame, spec, config);
        disc.emplace(train_stage2(std::move(s1.disc), f_flame, f_nonflame, config).disc);
        break;
      }
    }
    EvalOptions opts;
    opts.threshold = threshold;
    opts.form = input_form(mode);
    MetricsRow row{to_string(mode), threshold, evaluate(*disc, split.test, opts), config.seed,
                   config_hash(spec, config)};
    runs.push_back({std::move(row), std::move(*disc)});
  }
  return runs;
}

MetricsRow run_ablation(AblationMode mode, const DatasetSplit& split, const NetSpec& slice_spec,
                        const TrainConfig& config, double threshold) {
  const AblationMode one[] = {mode};
  return run_ablations(one, split, slice_spec, config, threshold).front().row;
}

// ---------------------------------------------------------------------------
// Toy corpus

namespace {

std::uint64_t clip_seed(std::uint64_t seed, std::uint64_t stream, std::size_t index) {
  nn::Rng r = nn::Rng(seed).fork(stream).fork(index);
  return r.next_u64();
}

SynthSpec base_synth(const ToyDatasetSpec& spec) {
  SynthSpec s;
  s.duration_s = spec.duration_s;
  s.fps = spec.fps;
  s.width = s.height = spec.size;
  s.block_frames = spec.block_frames;
  return s;
}

}  // namespace

SynthSpec toy_positive_spec(const ToyDatasetSpec& spec, std::size_t index) {
  SynthSpec s = base_synth(spec);
  s.kind = SynthKind::flicker_blob;
  s.seed = clip_seed(spec.seed, 1, index);
  return s;
}

SynthSpec toy_negative_spec(const ToyDatasetSpec& spec, std::size_t index) {
  SynthSpec s = base_synth(spec);
  s.seed = clip_seed(spec.seed, 2, index);
  if (spec.chromatic_negatives) {
    // 3 of every 5 negatives are flame-coloured lamps.
    switch (index % 5) {
      case 1: s.kind = SynthKind::static_scene; break;
      case 3: s.kind = SynthKind::moving_object; break;
      default:
        s.kind = SynthKind::periodic_light;
        s.flame_hued_light = true;
    }
  } else {
    constexpr SynthKind kinds[] = {SynthKind::static_scene, SynthKind::moving_object,
                                   SynthKind::periodic_light};
    s.kind = kinds[index % 3];
  }
  return s;
}

std::vector<SliceCube> clip_cubes(const VideoSequence& video, std::size_t block_frames,
                                  std::size_t frame_size) {
  const std::vector<Frame> sampled = temporal_sample(video);
  std::vector<SliceCube> cubes;
  for (const Block& b : assemble_blocks(sampled, block_frames, frame_size, video.source_id))
    cubes.push_back(build_cube(b));
  return cubes;
}

DatasetManifest build_toy_dataset(const ToyDatasetSpec& spec) {
  const std::size_t total = spec.flame_clips + spec.nonflame_clips;
  if (total == 0) throw EmptyInput("toy dataset needs clips");
  DatasetManifest m;
  m.clips.resize(total);
  std::vector<std::string> errors(total);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(total); ++i) {
    try {
      const bool positive = std::size_t(i) < spec.flame_clips;
      const std::size_t k = positive ? std::size_t(i) : std::size_t(i) - spec.flame_clips;
      const SynthSpec s = positive ? toy_positive_spec(spec, k) : toy_negative_spec(spec, k);
      VideoSequence video = synth_video(s);
      video.source_id = (positive ? "flame_" : "nonflame_") + std::to_string(k);
      ClipEntry& e = m.clips[std::size_t(i)];
      e.source_id = video.source_id;
      e.label = video.label;
      e.cubes = clip_cubes(video, spec.block_frames, spec.size);
    } catch (const std::exception& e) {
      errors[std::size_t(i)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw ParamError("toy dataset: " + e);
  return m;
}

}  // namespace flamegan
