#pragma once

// Temporal-slice cubes. A block of T frames (S x S, RGB) becomes a
// T x S x 3S cube with cube[t][y][3x + c] == frame[t](y, x, c): for every
// image column x, the S x T temporal slice of that column occupies the
// channel group [3x, 3x + 2].

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flamegan/video_io.hpp"

namespace flamegan {

inline constexpr std::size_t kFullBlockFrames = 64;
inline constexpr std::size_t kFullFrameSize = 128;

struct Block {
  std::vector<Frame> frames;
  double start_time_s = 0.0;
  std::string source_id;

  std::size_t length() const { return frames.size(); }
  std::size_t size() const { return frames.empty() ? 0 : frames.front().width; }
};

/// Splits a sampled frame stream into consecutive non-overlapping blocks of
/// `block_frames` frames; a trailing remainder is dropped. Start times assume
/// the stream carries `stream_fps` frames per second.
std::vector<Block> assemble_blocks(std::span<const Frame> stream, std::size_t block_frames,
                                   std::size_t frame_size, const std::string& source_id = {},
                                   double stream_fps = double(kSamplesPerSecond));

/// Column x of a block traced through time: rows are y, columns are t.
struct SliceImage {
  std::size_t column = 0;
  std::size_t rows = 0;   // S
  std::size_t steps = 0;  // T
  std::vector<std::uint8_t> pixels;  // [y][t][c]

  std::uint8_t at(std::size_t y, std::size_t t, std::size_t c) const {
    return pixels[(y * steps + t) * 3 + c];
  }
};

SliceImage extract_slice(const Block& block, std::size_t column);

class SliceCube {
 public:
  SliceCube() = default;

  /// Raw cube from bytes in (t, y, 3x + c) order.
  SliceCube(std::size_t steps, std::size_t size, std::vector<std::uint8_t> raw);

  std::size_t steps() const { return steps_; }  // T
  std::size_t size() const { return size_; }    // S
  std::size_t channels() const { return 3 * size_; }
  std::size_t element_count() const { return steps_ * size_ * 3 * size_; }
  bool normalized() const { return normalized_; }

  std::size_t offset(std::size_t t, std::size_t y, std::size_t x, std::size_t c) const {
    return (t * size_ + y) * 3 * size_ + 3 * x + c;
  }

  /// Throws StateError on a normalized cube.
  std::span<const std::uint8_t> raw() const;
  /// Values in [-1, 1]; throws StateError on a raw cube.
  std::span<const float> values() const;

  bool operator==(const SliceCube&) const = default;

 private:
  friend SliceCube normalize_cube(const SliceCube& cube);
  friend SliceCube denormalize_cube(const SliceCube& cube);

  std::size_t steps_ = 0;
  std::size_t size_ = 0;
  bool normalized_ = false;
  std::vector<std::uint8_t> raw_;
  std::vector<float> values_;
};

/// Stacks every temporal slice of the block along the channel axis.
SliceCube build_cube(const Block& block);

/// v -> v / 127.5 - 1. Throws StateError when the cube is already normalized.
SliceCube normalize_cube(const SliceCube& cube);

/// Inverse of normalize_cube with rounding to the nearest byte.
SliceCube denormalize_cube(const SliceCube& cube);

inline float normalize_byte(std::uint8_t v) { return float(v) / 127.5f - 1.0f; }

/// Writes normalized bytes into `out` (length must match).
void normalize_into(std::span<const std::uint8_t> raw, std::span<float> out);

namespace reference {
/// Index-by-index construction of the cube; the parallel build must agree.
SliceCube build_cube(const Block& block);
void normalize_into(std::span<const std::uint8_t> raw, std::span<float> out);
}  // namespace reference

// Cube dump: "SCUB", u32 T, u32 S (little-endian), then T*S*3S raw bytes in
// (t, y, 3x + c) order.
std::string encode_cube(const SliceCube& cube);
SliceCube decode_cube(const std::string& bytes);
void write_cube(const SliceCube& cube, const std::filesystem::path& path);
SliceCube read_cube(const std::filesystem::path& path);

}  // namespace flamegan
