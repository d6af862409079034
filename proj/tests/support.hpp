#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "flamegan/nn/rng.hpp"
#include "flamegan/video_io.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("flamegan_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline flamegan::Frame random_frame(std::size_t w, std::size_t h, flamegan::nn::Rng& rng) {
  flamegan::Frame f(w, h);
  for (auto& p : f.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return f;
}

inline std::vector<flamegan::Frame> random_frames(std::size_t n, std::size_t size,
                                                  flamegan::nn::Rng& rng) {
  std::vector<flamegan::Frame> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_frame(size, size, rng));
  return out;
}

inline std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace testing
