#pragma once

// Generator / discriminator networks, the two training stages and the
// flame classifier built on the trained discriminator.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flamegan/nn/adam.hpp"
#include "flamegan/nn/grad_check.hpp"
#include "flamegan/nn/checkpoint.hpp"
#include "flamegan/nn/layers.hpp"
#include "flamegan/nn/rng.hpp"
#include "flamegan/nn/tensor.hpp"
#include "flamegan/slicing.hpp"
#include "flamegan/video_io.hpp"

namespace flamegan {

struct LayerSpec {
  std::size_t kernel = 5;
  std::size_t stride = 2;
  std::size_t padding = 2;
  std::size_t channels = 0;

  bool operator==(const LayerSpec&) const = default;
};

/// Spatial extents plus channel count of one activation map.
struct GridShape {
  std::size_t height = 0, width = 0, channels = 0;
  bool operator==(const GridShape&) const = default;
};

/// Both network graphs. The network input (and generator output) is an
/// H x W x C map; for slice cubes that is T x S x 3S.
struct NetSpec {
  GridShape input;
  std::size_t z_dim = 100;
  /// Channels of the grid the generator's dense layer emits.
  std::size_t gen_seed_channels = 512;
  /// Transposed convolutions; the last one must emit input.channels.
  std::vector<LayerSpec> gen_layers;
  std::vector<LayerSpec> disc_layers;
  double leaky_slope = 0.2;

  /// 64 x 128 x 384 cubes, five layers per network.
  static NetSpec full();
  /// 16 x 32 x 96 cubes, four layers per network.
  static NetSpec toy();
  /// Single S x S RGB frames with the toy depth (no temporal axis).
  static NetSpec toy_frames(std::size_t frame_size = 32);

  /// Throws SpecError when either graph cannot be built.
  void validate() const;
  GridShape generator_seed() const;
  /// Activation shapes after the seed and after every transposed conv.
  std::vector<GridShape> generator_shapes() const;
  /// Activation shapes after every conv.
  std::vector<GridShape> discriminator_shapes() const;

  bool operator==(const NetSpec&) const = default;
};

struct TrainConfig {
  std::size_t batch_flame = 16;   // M, stage 1 minibatch
  std::size_t batch_refine = 8;   // L, stage 2 minibatch per class
  std::size_t stage1_steps = 300;
  std::size_t stage2_steps = 200;
  double gen_dropout = 0.3;
  double disc_dropout = 0.4;
  double input_noise_std = 0.05;
  double bn_momentum = 0.99;
  double bn_epsilon = 1e-5;
  nn::AdamConfig adam{};
  /// Turns input noise and dropout off during training.
  bool deterministic = false;
  std::uint64_t seed = 42;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

std::string to_json(const NetSpec& spec);
NetSpec net_spec_from_json(const std::string& text);
std::string to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);
std::uint64_t config_hash(const NetSpec& spec, const TrainConfig& config);

// ---------------------------------------------------------------------------

/// Raw network input: H x W x C bytes (a slice cube or a single frame).
struct Sample {
  std::size_t height = 0, width = 0, channels = 0;
  std::vector<std::uint8_t> pixels;

  static Sample from_cube(const SliceCube& cube);
  static Sample from_frame(const Frame& frame);
  GridShape shape() const { return {height, width, channels}; }
};

/// Normalizes the samples into one NHWC batch in [-1, 1].
nn::Tensor<float> make_batch(std::span<const Sample* const> samples);

struct ForwardOptions {
  nn::Mode mode = nn::Mode::infer;
  /// Noise and dropout draw from the rng only when set (and mode is train).
  bool stochastic = false;
  double noise_std = 0.0;
  double dropout = 0.0;
  /// Batch-norm epsilon (generator only).
  double bn_epsilon = 1e-5;
};

template <typename Real>
class BasicDiscriminator {
 public:
  using Tensor = nn::Tensor<Real>;

  struct ConvStage {
    Tensor input;  // after noise
    Tensor pre;    // conv output
    Tensor post;   // after activation
    nn::DropoutResult<Real> drop;
  };
  struct Pass {
    std::vector<ConvStage> convs;
    Tensor head_input;
    Tensor logits;
  };

  BasicDiscriminator() = default;
  /// Conv weights MSRA, dense head N(0, 0.02^2), biases zero.
  BasicDiscriminator(NetSpec spec, nn::Rng& rng);

  const NetSpec& spec() const { return spec_; }

  /// Logits [N, 1]. `pass` (optional) records what backward needs.
  Tensor forward(const Tensor& input, const ForwardOptions& opts, nn::Rng* rng,
                 Pass* pass = nullptr) const;

  /// Returns d loss / d input. Parameter gradients are written to `grads`
  /// (ordered like parameters()) unless it is null.
  Tensor backward(const Pass& pass, const Tensor& grad_logits, std::vector<Tensor>* grads) const;

  /// Sigmoid of forward() in infer mode.
  std::vector<double> probabilities(const Tensor& input) const;

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;

  nn::AdamState<Real>& optimizer() { return adam_; }
  const nn::AdamState<Real>& optimizer() const { return adam_; }

  template <typename Other>
  BasicDiscriminator<Other> cast() const;

 private:
  template <typename>
  friend class BasicDiscriminator;

  NetSpec spec_;
  std::vector<nn::ConvParams<Real>> convs_;
  nn::DenseParams<Real> head_;
  nn::AdamState<Real> adam_;
};

template <typename Real>
class BasicGenerator {
 public:
  using Tensor = nn::Tensor<Real>;

  struct Stage {
    Tensor input;  // input of the linear op
    Tensor pre;    // linear op output
    nn::BatchNormResult<Real> bn;
    Tensor post;   // after activation
    nn::DropoutResult<Real> drop;
  };
  struct Pass {
    std::vector<Stage> stages;  // stage 0 is the dense seed layer
    Tensor output;
  };

  BasicGenerator() = default;
  /// Dense and transposed-conv weights MSRA, batch-norm scale 1 / shift 0.
  BasicGenerator(NetSpec spec, nn::Rng& rng);

  const NetSpec& spec() const { return spec_; }

  /// z is [N, z_dim]; the result is [N, H, W, C] in (-1, 1).
  Tensor forward(const Tensor& z, const ForwardOptions& opts, nn::Rng* rng,
                 Pass* pass = nullptr) const;

  Tensor backward(const Pass& pass, const Tensor& grad_output, std::vector<Tensor>* grads) const;

  /// Folds the batch statistics recorded in `pass` into the running stats.
  void update_running_stats(const Pass& pass, double momentum);

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;
  /// Running statistics, saved with the parameters.
  std::vector<Tensor*> buffers();
  std::vector<std::string> buffer_names() const;

  nn::AdamState<Real>& optimizer() { return adam_; }
  const nn::AdamState<Real>& optimizer() const { return adam_; }

 private:
  NetSpec spec_;
  nn::DenseParams<Real> seed_;
  std::vector<nn::ConvParams<Real>> deconvs_;
  std::vector<nn::BatchNormParams<Real>> norms_;  // one per layer except the last
  nn::AdamState<Real> adam_;
};

using Discriminator = BasicDiscriminator<float>;
using Generator = BasicGenerator<float>;

/// Finite-difference check of a whole network in 64-bit with noise and
/// dropout off: the input and every parameter tensor, at most
/// `max_per_tensor` coordinates each. Discriminator loss is BCE on alternating
/// targets; the generator is probed through a random projection of its output.
std::vector<nn::GradCheckResult> check_discriminator(const NetSpec& spec, double eps = 1e-5,
                                                     std::uint64_t seed = 17,
                                                     std::size_t max_per_tensor = 24);
std::vector<nn::GradCheckResult> check_generator(const NetSpec& spec, double eps = 1e-5,
                                                 std::uint64_t seed = 17,
                                                 std::size_t max_per_tensor = 24);

// ---------------------------------------------------------------------------
// checkpoints

std::vector<nn::NamedTensor> to_tensors(const Discriminator& disc, bool with_optimizer);
std::vector<nn::NamedTensor> to_tensors(const Generator& gen, bool with_optimizer);
void load_tensors(Discriminator& disc, const std::vector<nn::NamedTensor>& tensors);
void load_tensors(Generator& gen, const std::vector<nn::NamedTensor>& tensors);

/// FNV-1a of the parameter-only checkpoint encoding.
std::uint64_t parameter_hash(const Discriminator& disc);
std::uint64_t parameter_hash(const Generator& gen);

/// Sidecar with NetSpec and TrainConfig lives next to the checkpoint.
std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

void save_discriminator(const Discriminator& disc, const TrainConfig& config,
                        const std::filesystem::path& path, bool with_optimizer = true);
void save_generator(const Generator& gen, const TrainConfig& config,
                    const std::filesystem::path& path, bool with_optimizer = true);

struct LoadedDiscriminator {
  Discriminator disc;
  TrainConfig config;
};
struct LoadedGenerator {
  Generator gen;
  TrainConfig config;
};
LoadedDiscriminator load_discriminator(const std::filesystem::path& path);
LoadedGenerator load_generator(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// training

struct Sg1Result {
  double disc_loss = 0.0;
  double mean_real = 0.0;  // mean D(x)
  double mean_fake = 0.0;  // mean D(G(z))
};

/// One discriminator update on flame cubes (target 1) against generated
/// cubes (target 0). The generator is read only.
Sg1Result sg1_step(Discriminator& disc, const Generator& gen, const nn::Tensor<float>& flame_batch,
                   const nn::Tensor<float>& z_batch, const TrainConfig& config, nn::Rng& rng);

/// One generator update on the non-saturating loss -mean log D(G(z)). The
/// discriminator is read only. Returns the loss before the update.
double gen_step(const Discriminator& disc, Generator& gen, const nn::Tensor<float>& z_batch,
                const TrainConfig& config, nn::Rng& rng);

/// Discriminator update with real non-flame cubes in the negative slot.
double refine_step(Discriminator& disc, const nn::Tensor<float>& flame_batch,
                   const nn::Tensor<float>& nonflame_batch, const TrainConfig& config,
                   nn::Rng& rng);

/// Stage-1 discriminator loss and mean outputs on fixed batches, without
/// updating anything.
Sg1Result sg1_loss(const Discriminator& disc, const Generator& gen,
                   const nn::Tensor<float>& flame_batch, const nn::Tensor<float>& z_batch,
                   const TrainConfig& config, nn::Rng& rng);
double gen_loss(const Discriminator& disc, const Generator& gen, const nn::Tensor<float>& z_batch,
                const TrainConfig& config, nn::Rng& rng);

nn::Tensor<float> sample_noise(std::size_t count, std::size_t z_dim, nn::Rng& rng);

struct Stage1Record {
  double disc_loss = 0.0;
  double gen_loss = 0.0;
  double mean_real = 0.0;
  double mean_fake = 0.0;
};

struct Stage1Result {
  Generator gen;
  Discriminator disc;
  std::vector<Stage1Record> history;
};

/// Adversarial training on flame samples only.
Stage1Result train_stage1(std::span<const Sample> flame, const NetSpec& spec,
                          const TrainConfig& config);

struct Stage2Result {
  Discriminator disc;
  std::vector<double> history;
};

/// Fine-tunes the discriminator on flame (target 1) vs non-flame (target 0)
/// samples. The generator plays no part.
Stage2Result train_stage2(Discriminator disc, std::span<const Sample> flame,
                          std::span<const Sample> nonflame, const TrainConfig& config);

/// Plain supervised training of a freshly initialized discriminator for
/// stage1_steps + stage2_steps refinement steps.
Stage2Result train_supervised(std::span<const Sample> flame, std::span<const Sample> nonflame,
                              const NetSpec& spec, const TrainConfig& config);

// ---------------------------------------------------------------------------
// classification

inline constexpr double kDefaultThreshold = 0.5;

struct Classification {
  Label decision = Label::nonflame;
  double score = 0.0;
};

/// Flame iff score > threshold (a tie goes to nonflame).
Label decide(double score, double threshold = kDefaultThreshold);

/// Scores one normalized cube in inference mode. Throws StateError on a raw
/// cube and ConfigError when the cube does not match the network input.
Classification classify(const Discriminator& disc, const SliceCube& cube,
                        double threshold = kDefaultThreshold);

/// Inference-mode scores for raw samples, in batches of `batch`.
std::vector<double> score_samples(const Discriminator& disc, std::span<const Sample* const> samples,
                                  std::size_t batch = 32);

}  // namespace flamegan
