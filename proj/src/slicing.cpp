#include "flamegan/slicing.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "flamegan/error.hpp"

namespace flamegan {

namespace {

using Index = std::ptrdiff_t;

void check_block(const Block& block) {
  if (block.frames.empty()) throw DimensionError("block has no frames");
  const std::size_t s = block.frames.front().width;
  for (const Frame& f : block.frames) {
    f.validate();
    if (f.width != s || f.height != s) {
      throw DimensionError("block frames must all be " + std::to_string(s) + "x" +
                           std::to_string(s));
    }
  }
}

}  // namespace

std::vector<Block> assemble_blocks(std::span<const Frame> stream, std::size_t block_frames,
                                   std::size_t frame_size, const std::string& source_id,
                                   double stream_fps) {
  if (block_frames == 0) throw ParamError("block length must be positive");
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (stream[i].width != frame_size || stream[i].height != frame_size) {
      throw DimensionError("stream frame " + std::to_string(i) + " is " +
                           std::to_string(stream[i].width) + "x" +
                           std::to_string(stream[i].height) + ", expected " +
                           std::to_string(frame_size) + "x" + std::to_string(frame_size));
    }
  }
  std::vector<Block> blocks;
  for (std::size_t start = 0; start + block_frames <= stream.size(); start += block_frames) {
    Block b;
    b.frames.assign(stream.begin() + static_cast<Index>(start),
                    stream.begin() + static_cast<Index>(start + block_frames));
    b.start_time_s = double(start) / stream_fps;
    b.source_id = source_id;
    blocks.push_back(std::move(b));
  }
  return blocks;
}

SliceImage extract_slice(const Block& block, std::size_t column) {
  check_block(block);
  const std::size_t s = block.size();
  if (column >= s) {
    throw IndexError("column " + std::to_string(column) + " outside [0, " + std::to_string(s) + ")");
  }
  SliceImage slice;
  slice.column = column;
  slice.rows = s;
  slice.steps = block.length();
  slice.pixels.resize(s * slice.steps * 3);
  for (std::size_t y = 0; y < s; ++y) {
    for (std::size_t t = 0; t < slice.steps; ++t) {
      for (std::size_t c = 0; c < 3; ++c) {
        slice.pixels[(y * slice.steps + t) * 3 + c] = block.frames[t].at(y, column, c);
      }
    }
  }
  return slice;
}

SliceCube::SliceCube(std::size_t steps, std::size_t size, std::vector<std::uint8_t> raw)
    : steps_(steps), size_(size), raw_(std::move(raw)) {
  if (steps == 0 || size == 0) throw DimensionError("cube extents must be positive");
  if (raw_.size() != element_count()) {
    throw DimensionError("cube payload holds " + std::to_string(raw_.size()) + " bytes, expected " +
                         std::to_string(element_count()));
  }
}

std::span<const std::uint8_t> SliceCube::raw() const {
  if (normalized_) throw StateError("cube is normalized; raw bytes are gone");
  return raw_;
}

std::span<const float> SliceCube::values() const {
  if (!normalized_) throw StateError("cube is not normalized");
  return values_;
}

// With the (t, y, 3x + c) layout, row t of the cube is frame t's row-major
// RGB buffer, so stacking the slices is one contiguous copy per frame.
SliceCube build_cube(const Block& block) {
  check_block(block);
  const std::size_t t_count = block.length();
  const std::size_t s = block.size();
  const std::size_t plane = s * s * 3;
  std::vector<std::uint8_t> raw(t_count * plane);
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < static_cast<Index>(t_count); ++t) {
    std::memcpy(raw.data() + t * plane, block.frames[t].pixels.data(), plane);
  }
  return SliceCube(t_count, s, std::move(raw));
}

void normalize_into(std::span<const std::uint8_t> raw, std::span<float> out) {
  if (raw.size() != out.size()) throw DimensionError("normalize_into length mismatch");
  const std::uint8_t* src = raw.data();
  float* dst = out.data();
#pragma omp parallel for simd schedule(static)
  for (Index i = 0; i < static_cast<Index>(raw.size()); ++i) {
    dst[i] = float(src[i]) / 127.5f - 1.0f;
  }
}

SliceCube normalize_cube(const SliceCube& cube) {
  if (cube.normalized_) throw StateError("cube is already normalized");
  SliceCube out;
  out.steps_ = cube.steps_;
  out.size_ = cube.size_;
  out.normalized_ = true;
  out.values_.resize(cube.raw_.size());
  normalize_into(cube.raw_, out.values_);
  return out;
}

SliceCube denormalize_cube(const SliceCube& cube) {
  if (!cube.normalized_) throw StateError("cube is not normalized");
  std::vector<std::uint8_t> raw(cube.values_.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const long v = std::lround((double(cube.values_[i]) + 1.0) * 127.5);
    raw[i] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
  }
  return SliceCube(cube.steps_, cube.size_, std::move(raw));
}

namespace reference {

SliceCube build_cube(const Block& block) {
  check_block(block);
  const std::size_t t_count = block.length();
  const std::size_t s = block.size();
  std::vector<std::uint8_t> raw(t_count * s * 3 * s);
  for (std::size_t x = 0; x < s; ++x) {
    const SliceImage slice = extract_slice(block, x);
    for (std::size_t t = 0; t < t_count; ++t) {
      for (std::size_t y = 0; y < s; ++y) {
        for (std::size_t c = 0; c < 3; ++c) {
          raw[(t * s + y) * 3 * s + 3 * x + c] = slice.at(y, t, c);
        }
      }
    }
  }
  return SliceCube(t_count, s, std::move(raw));
}

void normalize_into(std::span<const std::uint8_t> raw, std::span<float> out) {
  if (raw.size() != out.size()) throw DimensionError("normalize_into length mismatch");
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = float(raw[i]) / 127.5f - 1.0f;
}

}  // namespace reference

// ---------------------------------------------------------------------------

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& bytes, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= std::uint32_t(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string encode_cube(const SliceCube& cube) {
  const auto raw = cube.raw();
  std::string out = "SCUB";
  put_u32(out, static_cast<std::uint32_t>(cube.steps()));
  put_u32(out, static_cast<std::uint32_t>(cube.size()));
  out.append(reinterpret_cast<const char*>(raw.data()), raw.size());
  return out;
}

SliceCube decode_cube(const std::string& bytes) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "SCUB") != 0) throw FormatError("not a SCUB cube");
  const std::size_t steps = get_u32(bytes, 4);
  const std::size_t size = get_u32(bytes, 8);
  const std::size_t expected = steps * size * 3 * size;
  if (bytes.size() - 12 != expected) {
    throw FormatError("SCUB payload is " + std::to_string(bytes.size() - 12) + " bytes, expected " +
                      std::to_string(expected));
  }
  std::vector<std::uint8_t> raw(bytes.begin() + 12, bytes.end());
  return SliceCube(steps, size, std::move(raw));
}

void write_cube(const SliceCube& cube, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_cube(cube);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

SliceCube read_cube(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_cube(bytes);
}

}  // namespace flamegan
