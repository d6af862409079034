#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flamegan/nn/tensor.hpp"

namespace flamegan::nn {

struct NamedTensor {
  std::string name;
  Tensor<float> value;
};

inline constexpr char kCheckpointMagic[] = "FDGAN1";
inline constexpr std::uint8_t kCheckpointVersion = 1;

// Layout: "FDGAN1", version byte, then until end of data, per tensor:
//   u32 name length, UTF-8 name, u32 rank, rank x u32 dims, float32 values.
// All integers and floats are little-endian.
std::string encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over the encoded checkpoint bytes.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace flamegan::nn
