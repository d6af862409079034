#include <fstream>
#include <iterator>
#include <map>

#include <json.hpp>

#include "flamegan/error.hpp"
#include "flamegan/gan.hpp"

namespace flamegan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename Net>
std::vector<nn::NamedTensor> collect(const Net& net, bool with_optimizer, const std::string& prefix) {
  std::vector<nn::NamedTensor> out;
  const auto names = net.parameter_names();
  const auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) out.push_back({names[i], *params[i]});
  if constexpr (requires { const_cast<Net&>(net).buffers(); }) {
    auto& mut = const_cast<Net&>(net);
    const auto bnames = mut.buffer_names();
    const auto bufs = mut.buffers();
    for (std::size_t i = 0; i < bufs.size(); ++i) out.push_back({bnames[i], *bufs[i]});
  }
  const auto& adam = net.optimizer();
  if (with_optimizer && !adam.m.empty()) {
    out.push_back({prefix + ".adam.step", nn::Tensor<float>({1}, float(adam.step))});
    for (std::size_t i = 0; i < adam.m.size(); ++i) {
      out.push_back({names[i] + ".adam_m", adam.m[i]});
      out.push_back({names[i] + ".adam_v", adam.v[i]});
    }
  }
  return out;
}

template <typename Net>
void restore(Net& net, const std::vector<nn::NamedTensor>& tensors, const std::string& prefix) {
  std::map<std::string, const nn::Tensor<float>*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.value;

  auto fetch = [&](const std::string& name, nn::Tensor<float>& dst) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigError("checkpoint lacks tensor " + name);
    if (it->second->shape() != dst.shape()) {
      throw ConfigError("checkpoint tensor " + name + " has shape " +
                        nn::shape_string(it->second->shape()) + ", network expects " +
                        nn::shape_string(dst.shape()));
    }
    dst = *it->second;
  };

  const auto names = net.parameter_names();
  const auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) fetch(names[i], *params[i]);
  if constexpr (requires { net.buffers(); }) {
    const auto bnames = net.buffer_names();
    const auto bufs = net.buffers();
    for (std::size_t i = 0; i < bufs.size(); ++i) fetch(bnames[i], *bufs[i]);
  }
  auto& adam = net.optimizer();
  adam.m.clear();
  adam.v.clear();
  adam.step = 0;
  if (const auto it = by_name.find(prefix + ".adam.step"); it != by_name.end()) {
    adam.step = static_cast<std::uint64_t>((*it->second)[0]);
    for (std::size_t i = 0; i < params.size(); ++i) {
      adam.m.emplace_back(params[i]->shape());
      adam.v.emplace_back(params[i]->shape());
      fetch(names[i] + ".adam_m", adam.m.back());
      fetch(names[i] + ".adam_v", adam.v.back());
    }
  }
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_sidecar(const fs::path& checkpoint, const char* network, const NetSpec& spec,
                   const TrainConfig& config) {
  const json j = {{"network", network},
                  {"spec", json::parse(to_json(spec))},
                  {"config", json::parse(to_json(config))}};
  std::ofstream out(sidecar_path(checkpoint), std::ios::trunc);
  if (!out) throw IoError("cannot write " + sidecar_path(checkpoint).string());
  out << j.dump(2) << "\n";
}

std::pair<NetSpec, TrainConfig> read_sidecar(const fs::path& checkpoint, const char* network) {
  const fs::path side = sidecar_path(checkpoint);
  if (!fs::exists(side)) throw ConfigError("missing sidecar " + side.string());
  json j;
  try {
    j = json::parse(slurp(side));
  } catch (const json::exception& e) {
    throw ConfigError(side.string() + ": " + e.what());
  }
  if (j.value("network", std::string{}) != network) {
    throw ConfigError(checkpoint.string() + " is not a " + network + " checkpoint");
  }
  return {net_spec_from_json(j.at("spec").dump()), train_config_from_json(j.at("config").dump())};
}

}  // namespace

std::vector<nn::NamedTensor> to_tensors(const Discriminator& disc, bool with_optimizer) {
  return collect(disc, with_optimizer, "disc");
}

std::vector<nn::NamedTensor> to_tensors(const Generator& gen, bool with_optimizer) {
  return collect(gen, with_optimizer, "gen");
}

void load_tensors(Discriminator& disc, const std::vector<nn::NamedTensor>& tensors) {
  restore(disc, tensors, "disc");
}

void load_tensors(Generator& gen, const std::vector<nn::NamedTensor>& tensors) {
  restore(gen, tensors, "gen");
}

std::uint64_t parameter_hash(const Discriminator& disc) {
  return nn::fnv1a(nn::encode_checkpoint(to_tensors(disc, false)));
}

std::uint64_t parameter_hash(const Generator& gen) {
  return nn::fnv1a(nn::encode_checkpoint(to_tensors(gen, false)));
}

fs::path sidecar_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p += ".json";
  return p;
}

void save_discriminator(const Discriminator& disc, const TrainConfig& config, const fs::path& path,
                        bool with_optimizer) {
  nn::save_checkpoint(path, to_tensors(disc, with_optimizer));
  write_sidecar(path, "discriminator", disc.spec(), config);
}

void save_generator(const Generator& gen, const TrainConfig& config, const fs::path& path,
                    bool with_optimizer) {
  nn::save_checkpoint(path, to_tensors(gen, with_optimizer));
  write_sidecar(path, "generator", gen.spec(), config);
}

LoadedDiscriminator load_discriminator(const fs::path& path) {
  auto [spec, config] = read_sidecar(path, "discriminator");
  nn::Rng rng(0);
  LoadedDiscriminator out{Discriminator(spec, rng), config};
  load_tensors(out.disc, nn::load_checkpoint(path));
  out.disc.optimizer().config = config.adam;
  return out;
}

LoadedGenerator load_generator(const fs::path& path) {
  auto [spec, config] = read_sidecar(path, "generator");
  nn::Rng rng(0);
  LoadedGenerator out{Generator(spec, rng), config};
  load_tensors(out.gen, nn::load_checkpoint(path));
  out.gen.optimizer().config = config.adam;
  return out;
}

}  // namespace flamegan
