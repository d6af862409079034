#include <algorithm>
#include <cmath>
#include <cstring>

#include "flamegan/error.hpp"
#include "flamegan/gan.hpp"

namespace flamegan {

namespace {

using FTensor = nn::Tensor<float>;

double sigmoid(double l) {
  return l >= 0 ? 1.0 / (1.0 + std::exp(-l)) : std::exp(l) / (1.0 + std::exp(l));
}

double mean_probability(const FTensor& logits) {
  double s = 0.0;
  for (float l : logits.values()) s += sigmoid(l);
  return s / double(logits.size());
}

ForwardOptions disc_options(const TrainConfig& c) {
  ForwardOptions o;
  o.mode = nn::Mode::train;
  o.stochastic = !c.deterministic;
  o.noise_std = c.input_noise_std;
  o.dropout = c.disc_dropout;
  return o;
}

ForwardOptions gen_options(const TrainConfig& c) {
  ForwardOptions o;
  o.mode = nn::Mode::train;
  o.stochastic = !c.deterministic;
  o.dropout = c.gen_dropout;
  o.bn_epsilon = c.bn_epsilon;
  return o;
}

std::vector<float> constant_targets(std::size_t n, float v) { return std::vector<float>(n, v); }

void add_into(std::vector<FTensor>& acc, const std::vector<FTensor>& more) {
  for (std::size_t i = 0; i < acc.size(); ++i) {
    float* a = acc[i].raw();
    const float* b = more[i].raw();
    for (std::size_t j = 0; j < acc[i].size(); ++j) a[j] += b[j];
  }
}

template <typename Net>
void apply_adam(Net& net, const std::vector<FTensor>& grads, const TrainConfig& config) {
  std::vector<const FTensor*> gptr;
  for (const auto& g : grads) gptr.push_back(&g);
  net.optimizer().config = config.adam;
  nn::adam_step(net.parameters(), gptr, net.optimizer());
}

/// Discriminator update on a positive batch (target 1) and a negative batch
/// (target 0). Returns the summed loss and mean outputs.
Sg1Result two_class_step(Discriminator& disc, const FTensor& positive, const FTensor& negative,
                         const TrainConfig& config, nn::Rng& rng) {
  const ForwardOptions opts = disc_options(config);
  Discriminator::Pass pos_pass, neg_pass;
  const FTensor pos_logits = disc.forward(positive, opts, &rng, &pos_pass);
  const FTensor neg_logits = disc.forward(negative, opts, &rng, &neg_pass);
  const auto pos_loss = nn::bce_with_logits(pos_logits, constant_targets(pos_logits.size(), 1.0f));
  const auto neg_loss = nn::bce_with_logits(neg_logits, constant_targets(neg_logits.size(), 0.0f));

  std::vector<FTensor> grads, neg_grads;
  disc.backward(pos_pass, pos_loss.grad, &grads);
  disc.backward(neg_pass, neg_loss.grad, &neg_grads);
  add_into(grads, neg_grads);
  apply_adam(disc, grads, config);
  return {pos_loss.loss + neg_loss.loss, mean_probability(pos_logits), mean_probability(neg_logits)};
}

std::vector<const Sample*> draw(std::span<const Sample> pool, std::size_t count, nn::Rng& rng) {
  std::vector<const Sample*> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(&pool[rng.below(pool.size())]);
  return out;
}

void check_samples(std::span<const Sample> samples, const NetSpec& spec, const char* what) {
  for (const Sample& s : samples) {
    if (s.shape() != spec.input) {
      throw ConfigError(std::string(what) + " sample is " + std::to_string(s.height) + "x" +
                        std::to_string(s.width) + "x" + std::to_string(s.channels) +
                        ", network expects " + std::to_string(spec.input.height) + "x" +
                        std::to_string(spec.input.width) + "x" + std::to_string(spec.input.channels));
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Sample Sample::from_cube(const SliceCube& cube) {
  const auto raw = cube.raw();
  return {cube.steps(), cube.size(), cube.channels(), {raw.begin(), raw.end()}};
}

Sample Sample::from_frame(const Frame& frame) {
  frame.validate();
  return {frame.height, frame.width, 3, frame.pixels};
}

nn::Tensor<float> make_batch(std::span<const Sample* const> samples) {
  if (samples.empty()) throw EmptyInput("empty batch");
  const Sample& first = *samples.front();
  FTensor batch({samples.size(), first.height, first.width, first.channels});
  const std::size_t per = batch.stride0();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = *samples[i];
    if (s.shape() != first.shape() || s.pixels.size() != per) {
      throw DimensionError("batch samples have mixed shapes");
    }
    normalize_into(s.pixels, std::span<float>(batch.raw() + i * per, per));
  }
  return batch;
}

nn::Tensor<float> sample_noise(std::size_t count, std::size_t z_dim, nn::Rng& rng) {
  FTensor z({count, z_dim});
  for (float& v : z.values()) v = float(rng.normal());
  return z;
}

Sg1Result sg1_step(Discriminator& disc, const Generator& gen, const FTensor& flame_batch,
                   const FTensor& z_batch, const TrainConfig& config, nn::Rng& rng) {
  if (flame_batch.rank() != 4 || flame_batch.dim(0) != z_batch.dim(0)) {
    throw DimensionError("sg1_step needs equally sized flame and noise batches");
  }
  const FTensor fake = gen.forward(z_batch, gen_options(config), &rng);
  return two_class_step(disc, flame_batch, fake, config, rng);
}

double gen_step(const Discriminator& disc, Generator& gen, const FTensor& z_batch,
                const TrainConfig& config, nn::Rng& rng) {
  Generator::Pass gpass;
  const FTensor fake = gen.forward(z_batch, gen_options(config), &rng, &gpass);
  Discriminator::Pass dpass;
  const FTensor logits = disc.forward(fake, disc_options(config), &rng, &dpass);
  const auto loss = nn::bce_with_logits(logits, constant_targets(logits.size(), 1.0f));
  const FTensor grad_fake = disc.backward(dpass, loss.grad, nullptr);
  std::vector<FTensor> grads;
  gen.backward(gpass, grad_fake, &grads);
  gen.update_running_stats(gpass, config.bn_momentum);
  apply_adam(gen, grads, config);
  return loss.loss;
}

double refine_step(Discriminator& disc, const FTensor& flame_batch, const FTensor& nonflame_batch,
                   const TrainConfig& config, nn::Rng& rng) {
  return two_class_step(disc, flame_batch, nonflame_batch, config, rng).disc_loss;
}

Sg1Result sg1_loss(const Discriminator& disc, const Generator& gen, const FTensor& flame_batch,
                   const FTensor& z_batch, const TrainConfig& config, nn::Rng& rng) {
  const FTensor fake = gen.forward(z_batch, gen_options(config), &rng);
  const ForwardOptions opts = disc_options(config);
  const FTensor real_logits = disc.forward(flame_batch, opts, &rng);
  const FTensor fake_logits = disc.forward(fake, opts, &rng);
  const double loss =
      nn::bce_with_logits(real_logits, constant_targets(real_logits.size(), 1.0f)).loss +
      nn::bce_with_logits(fake_logits, constant_targets(fake_logits.size(), 0.0f)).loss;
  return {loss, mean_probability(real_logits), mean_probability(fake_logits)};
}

double gen_loss(const Discriminator& disc, const Generator& gen, const FTensor& z_batch,
                const TrainConfig& config, nn::Rng& rng) {
  const FTensor fake = gen.forward(z_batch, gen_options(config), &rng);
  const FTensor logits = disc.forward(fake, disc_options(config), &rng);
  return nn::bce_with_logits(logits, constant_targets(logits.size(), 1.0f)).loss;
}

// ---------------------------------------------------------------------------

Stage1Result train_stage1(std::span<const Sample> flame, const NetSpec& spec,
                          const TrainConfig& config) {
  config.validate();
  spec.validate();
  if (flame.empty()) throw EmptyInput("stage 1 needs flame samples");
  check_samples(flame, spec, "flame");

  nn::Rng root(config.seed);
  nn::Rng init = root.fork(1);
  nn::Rng data = root.fork(2);
  nn::Rng noise = root.fork(3);

  Stage1Result result{Generator(spec, init), Discriminator(spec, init), {}};
  result.history.reserve(config.stage1_steps);
  for (std::size_t step = 0; step < config.stage1_steps; ++step) {
    const auto picks = draw(flame, config.batch_flame, data);
    const FTensor real = make_batch(picks);
    const FTensor z = sample_noise(config.batch_flame, spec.z_dim, data);
    const Sg1Result d = sg1_step(result.disc, result.gen, real, z, config, noise);
    const FTensor z2 = sample_noise(config.batch_flame, spec.z_dim, data);
    const double g = gen_step(result.disc, result.gen, z2, config, noise);
    result.history.push_back({d.disc_loss, g, d.mean_real, d.mean_fake});
  }
  return result;
}

namespace {

Stage2Result refine_loop(Discriminator disc, std::span<const Sample> flame,
                         std::span<const Sample> nonflame, const TrainConfig& config,
                         std::size_t steps, std::uint64_t stream) {
  nn::Rng root(config.seed);
  nn::Rng data = root.fork(stream);
  nn::Rng noise = root.fork(stream + 1);
  Stage2Result result{std::move(disc), {}};
  result.history.reserve(steps);
  for (std::size_t step = 0; step < steps; ++step) {
    const auto pos = draw(flame, config.batch_refine, data);
    const auto neg = draw(nonflame, config.batch_refine, data);
    result.history.push_back(
        refine_step(result.disc, make_batch(pos), make_batch(neg), config, noise));
  }
  return result;
}

}  // namespace

Stage2Result train_stage2(Discriminator disc, std::span<const Sample> flame,
                          std::span<const Sample> nonflame, const TrainConfig& config) {
  config.validate();
  if (nonflame.empty()) throw EmptyInput("stage 2 needs non-flame samples");
  if (flame.empty()) throw EmptyInput("stage 2 needs flame samples");
  check_samples(flame, disc.spec(), "flame");
  check_samples(nonflame, disc.spec(), "non-flame");
  return refine_loop(std::move(disc), flame, nonflame, config, config.stage2_steps, 4);
}

Stage2Result train_supervised(std::span<const Sample> flame, std::span<const Sample> nonflame,
                              const NetSpec& spec, const TrainConfig& config) {
  config.validate();
  if (nonflame.empty() || flame.empty()) throw EmptyInput("supervised training needs both classes");
  check_samples(flame, spec, "flame");
  check_samples(nonflame, spec, "non-flame");
  nn::Rng init = nn::Rng(config.seed).fork(1);
  return refine_loop(Discriminator(spec, init), flame, nonflame, config,
                     config.stage1_steps + config.stage2_steps, 6);
}

// ---------------------------------------------------------------------------

Label decide(double score, double threshold) {
  return score > threshold ? Label::flame : Label::nonflame;
}

Classification classify(const Discriminator& disc, const SliceCube& cube, double threshold) {
  if (!cube.normalized()) throw StateError("classify needs a normalized cube");
  const GridShape expected = disc.spec().input;
  if (GridShape{cube.steps(), cube.size(), cube.channels()} != expected) {
    throw ConfigError("cube is " + std::to_string(cube.steps()) + "x" + std::to_string(cube.size()) +
                      "x" + std::to_string(cube.channels()) + " but the model expects " +
                      std::to_string(expected.height) + "x" + std::to_string(expected.width) + "x" +
                      std::to_string(expected.channels));
  }
  const auto values = cube.values();
  FTensor input({1, expected.height, expected.width, expected.channels},
                std::vector<float>(values.begin(), values.end()));
  const double score = disc.probabilities(input).front();
  return {decide(score, threshold), score};
}

std::vector<double> score_samples(const Discriminator& disc, std::span<const Sample* const> samples,
                                  std::size_t batch) {
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch) {
    const std::size_t count = std::min(batch, samples.size() - start);
    const auto probs = disc.probabilities(make_batch(samples.subspan(start, count)));
    scores.insert(scores.end(), probs.begin(), probs.end());
  }
  return scores;
}

}  // namespace flamegan
