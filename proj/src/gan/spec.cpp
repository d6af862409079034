#include <json.hpp>

#include "flamegan/error.hpp"
#include "flamegan/gan.hpp"

namespace flamegan {

using nlohmann::json;

namespace {

std::vector<LayerSpec> layers(std::initializer_list<std::size_t> channels, std::size_t kernel,
                              std::size_t stride, std::size_t padding) {
  std::vector<LayerSpec> out;
  for (std::size_t c : channels) out.push_back({kernel, stride, padding, c});
  return out;
}

// Generator layers: 4x4 kernels, stride 2, padding 1 double each extent.
// Discriminator layers: 5x5 kernels, stride 2, padding 2 halve each extent.
constexpr std::size_t kGenKernel = 4, kGenPadding = 1;
constexpr std::size_t kDiscKernel = 5, kDiscPadding = 2;

}  // namespace

NetSpec NetSpec::full() {
  NetSpec s;
  s.input = {kFullBlockFrames, kFullFrameSize, 3 * kFullFrameSize};
  s.z_dim = 100;
  s.gen_seed_channels = 512;
  s.gen_layers = layers({512, 256, 128, 64, 3 * kFullFrameSize}, kGenKernel, 2, kGenPadding);
  s.disc_layers = layers({64, 128, 256, 512, 512}, kDiscKernel, 2, kDiscPadding);
  return s;
}

NetSpec NetSpec::toy() {
  NetSpec s;
  s.input = {16, 32, 96};
  s.z_dim = 100;
  s.gen_seed_channels = 128;
  s.gen_layers = layers({64, 32, 16, 96}, kGenKernel, 2, kGenPadding);
  s.disc_layers = layers({16, 32, 64, 64}, kDiscKernel, 2, kDiscPadding);
  return s;
}

NetSpec NetSpec::toy_frames(std::size_t frame_size) {
  NetSpec s = toy();
  s.input = {frame_size, frame_size, 3};
  s.gen_layers.back().channels = 3;
  return s;
}

GridShape NetSpec::generator_seed() const {
  if (gen_layers.empty()) throw SpecError("generator needs at least one transposed conv");
  std::size_t h = input.height, w = input.width;
  for (auto it = gen_layers.rbegin(); it != gen_layers.rend(); ++it) {
    const auto invert = [&](std::size_t out) {
      // out = (in - 1) * stride - 2 * pad + kernel
      const long long num = static_cast<long long>(out) + 2 * static_cast<long long>(it->padding) -
                            static_cast<long long>(it->kernel);
      if (it->stride == 0 || num < 0 || num % static_cast<long long>(it->stride) != 0) {
        throw SpecError("generator geometry cannot reach " + std::to_string(input.height) + "x" +
                        std::to_string(input.width));
      }
      return static_cast<std::size_t>(num / static_cast<long long>(it->stride)) + 1;
    };
    h = invert(h);
    w = invert(w);
  }
  return {h, w, gen_seed_channels};
}

std::vector<GridShape> NetSpec::generator_shapes() const {
  std::vector<GridShape> shapes{generator_seed()};
  for (const LayerSpec& l : gen_layers) {
    const GridShape& prev = shapes.back();
    shapes.push_back({nn::conv_transpose_output_extent(prev.height, l.kernel, l.stride, l.padding),
                      nn::conv_transpose_output_extent(prev.width, l.kernel, l.stride, l.padding),
                      l.channels});
  }
  return shapes;
}

std::vector<GridShape> NetSpec::discriminator_shapes() const {
  if (disc_layers.empty()) throw SpecError("discriminator needs at least one conv");
  std::vector<GridShape> shapes;
  GridShape cur = input;
  for (const LayerSpec& l : disc_layers) {
    if (l.stride == 0 || l.kernel == 0 || l.channels == 0) throw SpecError("bad discriminator layer");
    if (cur.height + 2 * l.padding < l.kernel || cur.width + 2 * l.padding < l.kernel) {
      throw SpecError("discriminator input too small for its kernels");
    }
    cur = {nn::conv_output_extent(cur.height, l.kernel, l.stride, l.padding),
           nn::conv_output_extent(cur.width, l.kernel, l.stride, l.padding), l.channels};
    shapes.push_back(cur);
  }
  return shapes;
}

void NetSpec::validate() const {
  if (input.height == 0 || input.width == 0 || input.channels == 0) {
    throw SpecError("input shape must be positive");
  }
  if (z_dim == 0 || gen_seed_channels == 0) throw SpecError("z_dim and seed channels must be positive");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw SpecError("leaky slope must be in [0, 1)");
  for (const LayerSpec& l : gen_layers) {
    if (l.stride == 0 || l.kernel == 0 || l.channels == 0) throw SpecError("bad generator layer");
  }
  if (gen_layers.empty() || gen_layers.back().channels != input.channels) {
    throw SpecError("generator must end with " + std::to_string(input.channels) + " channels");
  }
  const auto shapes = generator_shapes();
  if (shapes.back() != input) throw SpecError("generator output does not match the input shape");
  discriminator_shapes();
}

void TrainConfig::validate() const {
  if (batch_flame < 2) throw ConfigError("stage-1 batch M must be >= 2");
  if (batch_refine < 1) throw ConfigError("stage-2 batch L must be >= 1");
  if (!(gen_dropout >= 0 && gen_dropout < 1) || !(disc_dropout >= 0 && disc_dropout < 1)) {
    throw ConfigError("dropout rates must be in [0, 1)");
  }
  if (input_noise_std < 0) throw ConfigError("noise std must be >= 0");
  if (!(bn_momentum >= 0 && bn_momentum <= 1)) throw ConfigError("bn momentum must be in [0, 1]");
  if (!(adam.learning_rate > 0)) throw ConfigError("learning rate must be positive");
}

// ---------------------------------------------------------------------------

namespace {

json layers_json(const std::vector<LayerSpec>& layers) {
  json arr = json::array();
  for (const LayerSpec& l : layers) {
    arr.push_back({{"kernel", l.kernel}, {"stride", l.stride}, {"padding", l.padding},
                   {"channels", l.channels}});
  }
  return arr;
}

std::vector<LayerSpec> layers_from(const json& arr) {
  std::vector<LayerSpec> out;
  for (const json& j : arr) {
    out.push_back({j.at("kernel").get<std::size_t>(), j.at("stride").get<std::size_t>(),
                   j.at("padding").get<std::size_t>(), j.at("channels").get<std::size_t>()});
  }
  return out;
}

json spec_json(const NetSpec& s) {
  return {{"input", {s.input.height, s.input.width, s.input.channels}},
          {"z_dim", s.z_dim},
          {"gen_seed_channels", s.gen_seed_channels},
          {"gen_layers", layers_json(s.gen_layers)},
          {"disc_layers", layers_json(s.disc_layers)},
          {"leaky_slope", s.leaky_slope}};
}

json config_json(const TrainConfig& c) {
  return {{"batch_flame", c.batch_flame},
          {"batch_refine", c.batch_refine},
          {"stage1_steps", c.stage1_steps},
          {"stage2_steps", c.stage2_steps},
          {"gen_dropout", c.gen_dropout},
          {"disc_dropout", c.disc_dropout},
          {"input_noise_std", c.input_noise_std},
          {"bn_momentum", c.bn_momentum},
          {"bn_epsilon", c.bn_epsilon},
          {"adam",
           {{"learning_rate", c.adam.learning_rate},
            {"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},
            {"epsilon", c.adam.epsilon}}},
          {"deterministic", c.deterministic},
          {"seed", c.seed}};
}

}  // namespace

std::string to_json(const NetSpec& spec) { return spec_json(spec).dump(2); }

NetSpec net_spec_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    NetSpec s;
    const auto in = j.at("input").get<std::vector<std::size_t>>();
    if (in.size() != 3) throw SpecError("input must have three extents");
    s.input = {in[0], in[1], in[2]};
    s.z_dim = j.at("z_dim").get<std::size_t>();
    s.gen_seed_channels = j.at("gen_seed_channels").get<std::size_t>();
    s.gen_layers = layers_from(j.at("gen_layers"));
    s.disc_layers = layers_from(j.at("disc_layers"));
    s.leaky_slope = j.value("leaky_slope", 0.2);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed NetSpec: ") + e.what());
  }
}

std::string to_json(const TrainConfig& config) { return config_json(config).dump(2); }

TrainConfig train_config_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    TrainConfig c;
    c.batch_flame = j.value("batch_flame", c.batch_flame);
    c.batch_refine = j.value("batch_refine", c.batch_refine);
    c.stage1_steps = j.value("stage1_steps", c.stage1_steps);
    c.stage2_steps = j.value("stage2_steps", c.stage2_steps);
    c.gen_dropout = j.value("gen_dropout", c.gen_dropout);
    c.disc_dropout = j.value("disc_dropout", c.disc_dropout);
    c.input_noise_std = j.value("input_noise_std", c.input_noise_std);
    c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
    c.bn_epsilon = j.value("bn_epsilon", c.bn_epsilon);
    if (j.contains("adam")) {
      const json& a = j.at("adam");
      c.adam.learning_rate = a.value("learning_rate", c.adam.learning_rate);
      c.adam.beta1 = a.value("beta1", c.adam.beta1);
      c.adam.beta2 = a.value("beta2", c.adam.beta2);
      c.adam.epsilon = a.value("epsilon", c.adam.epsilon);
    }
    c.deterministic = j.value("deterministic", c.deterministic);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed TrainConfig: ") + e.what());
  }
}

std::uint64_t config_hash(const NetSpec& spec, const TrainConfig& config) {
  return nn::fnv1a(spec_json(spec).dump() + config_json(config).dump());
}

}  // namespace flamegan
