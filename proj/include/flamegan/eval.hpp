#pragma once

// Dataset splitting, frame-based confusion counts and the four-way ablation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "flamegan/gan.hpp"
#include "flamegan/slicing.hpp"
#include "flamegan/video_io.hpp"

namespace flamegan {

/// One source clip. Cubes are either held in memory or listed as files
/// relative to the manifest directory.
struct ClipEntry {
  std::string source_id;
  Label label = Label::nonflame;
  std::vector<std::string> cube_files;
  std::vector<SliceCube> cubes;

  std::size_t cube_count() const { return cubes.empty() ? cube_files.size() : cubes.size(); }
};

struct DatasetManifest {
  std::vector<ClipEntry> clips;
  std::filesystem::path root;  // base for cube_files

  std::size_t clip_count(Label label) const;
  std::size_t cube_count(Label label) const;
  bool empty() const { return clips.empty(); }

  /// Raw cubes of one clip, read from disk when not held in memory.
  std::vector<SliceCube> load_cubes(const ClipEntry& clip) const;
  /// Same manifest with every cube read into memory.
  DatasetManifest materialized() const;
};

inline constexpr const char* kDatasetFileName = "dataset.json";

nlohmann::json to_json(const DatasetManifest& manifest);
/// `root` becomes the base directory for cube file paths.
DatasetManifest dataset_from_json(const nlohmann::json& j, const std::filesystem::path& root);
void write_dataset(const DatasetManifest& manifest, const std::filesystem::path& dir);
DatasetManifest read_dataset(const std::filesystem::path& dir);

struct SplitSpec {
  double train = 3.0;
  double val = 1.0;
  double test = 1.0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct DatasetSplit {
  DatasetManifest train;
  DatasetManifest val;
  DatasetManifest test;
};

/// Per-label clip counts for `n` clips: floor shares, leftover clips to the
/// largest remainders, then at least one clip per partition.
std::array<std::size_t, 3> split_counts(std::size_t n, const SplitSpec& spec);

/// Clip-level split; every cube of a clip lands in one partition. Throws
/// SplitError when a label has fewer clips than partitions.
DatasetSplit split_dataset(const DatasetManifest& manifest, const SplitSpec& spec);

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  /// Percentages; absent when the denominator is zero.
  std::optional<double> tnr() const;
  std::optional<double> tpr() const;

  ConfusionCounts& operator+=(const ConfusionCounts& other);
  bool operator==(const ConfusionCounts&) const = default;
};

/// Adds `weight` frames to the cell picked by (truth, decision).
void tally(ConfusionCounts& counts, Label truth, Label decision, std::uint64_t weight);

enum class InputForm { slices, frames };

enum class AblationMode { dcgan_slices, cnn_slices, dcgan_frames, dcgan_norefine };
std::string to_string(AblationMode mode);
AblationMode parse_ablation_mode(const std::string& text);
inline constexpr AblationMode kAllAblationModes[] = {
    AblationMode::dcgan_slices, AblationMode::cnn_slices, AblationMode::dcgan_frames,
    AblationMode::dcgan_norefine};
InputForm input_form(AblationMode mode);

struct MetricsRow {
  std::string mode;
  double threshold = kDefaultThreshold;
  ConfusionCounts counts;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

nlohmann::json to_json(const MetricsRow& row);
std::string format_table(std::span<const MetricsRow> rows);

struct EvalOptions {
  double threshold = kDefaultThreshold;
  InputForm form = InputForm::slices;
  /// Count each block once instead of once per frame.
  bool per_block = false;
  std::size_t batch = 32;
};

/// Scores a batch of samples with probabilities in [0, 1].
using Scorer = std::function<std::vector<double>(std::span<const Sample* const>)>;

/// Training / evaluation samples. Slices: one sample per cube, worth T
/// frames. Frames: every frame of every cube, worth one frame each.
struct SampleSet {
  std::vector<Sample> samples;
  std::vector<Label> labels;
  std::vector<std::uint64_t> weights;

  std::vector<Sample> with_label(Label label) const;
};

SampleSet collect_samples(const DatasetManifest& manifest, InputForm form);

ConfusionCounts evaluate_scores(std::span<const double> scores, std::span<const Label> labels,
                                std::span<const std::uint64_t> weights, double threshold);

/// Throws EmptyInput on an empty test set.
ConfusionCounts evaluate(const Scorer& scorer, const DatasetManifest& test,
                         const EvalOptions& options = {});
/// Throws ConfigError when the model input does not match the chosen form.
ConfusionCounts evaluate(const Discriminator& disc, const DatasetManifest& test,
                         const EvalOptions& options = {});

/// Network for whole frames with the same depth as `slice_spec`.
NetSpec frame_spec_for(const NetSpec& slice_spec);

struct AblationRun {
  MetricsRow row;
  Discriminator disc;
};

/// Trains and evaluates the requested modes on `split`. Modes sharing
/// stage-1 training (dcgan_slices, dcgan_norefine) train it once.
std::vector<AblationRun> run_ablations(std::span<const AblationMode> modes,
                                       const DatasetSplit& split, const NetSpec& slice_spec,
                                       const TrainConfig& config,
                                       double threshold = kDefaultThreshold);

MetricsRow run_ablation(AblationMode mode, const DatasetSplit& split, const NetSpec& slice_spec,
                        const TrainConfig& config, double threshold = kDefaultThreshold);

/// Synthetic corpus for end-to-end runs.
struct ToyDatasetSpec {
  std::size_t flame_clips = 120;
  std::size_t nonflame_clips = 80;
  double duration_s = 5.0;
  double fps = 30.0;
  std::size_t size = 32;
  std::size_t block_frames = 16;
  std::uint64_t seed = 42;
  /// Negatives dominated by flame-coloured periodic lights.
  bool chromatic_negatives = false;
};

/// Kind of the i-th negative clip.
SynthSpec toy_negative_spec(const ToyDatasetSpec& spec, std::size_t index);
SynthSpec toy_positive_spec(const ToyDatasetSpec& spec, std::size_t index);

/// Synthesizes, samples at 10 fps, blocks and slices every clip. Parallel
/// over clips; deterministic in `spec`.
DatasetManifest build_toy_dataset(const ToyDatasetSpec& spec);

/// Cubes of one clip: sample, block, slice.
std::vector<SliceCube> clip_cubes(const VideoSequence& video, std::size_t block_frames,
                                  std::size_t frame_size);

}  // namespace flamegan
