#include <doctest.h>

#include <array>

#include "flamegan/error.hpp"
#include "flamegan/slicing.hpp"
#include "support.hpp"

using namespace flamegan;

namespace {

Block random_block(std::size_t t, std::size_t s, nn::Rng& rng) {
  Block b;
  b.frames = testing::random_frames(t, s, rng);
  return b;
}

}  // namespace

TEST_CASE("130 frames make 2 blocks of 64 and drop 2") {
  nn::Rng rng(1);
  const auto frames = testing::random_frames(130, 4, rng);
  const auto blocks = assemble_blocks(frames, 64, 4, "clip");
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[1].frames.back() == frames[127]);
  CHECK(blocks[0].start_time_s == 0.0);
  CHECK(blocks[1].start_time_s == doctest::Approx(6.4));
  CHECK(blocks[1].source_id == "clip");
}

TEST_CASE("63 frames make no block") {
  nn::Rng rng(2);
  CHECK(assemble_blocks(testing::random_frames(63, 4, rng), 64, 4).empty());
}

TEST_CASE("blocks are disjoint and cover a prefix of the stream") {
  nn::Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t t = 1 + rng.below(20);
    const std::size_t n = rng.below(100);
    const auto frames = testing::random_frames(n, 3, rng);
    const auto blocks = assemble_blocks(frames, t, 3);
    CHECK(blocks.size() == n / t);
    std::vector<Frame> joined;
    for (const auto& b : blocks) {
      CHECK(b.frames.size() == t);
      joined.insert(joined.end(), b.frames.begin(), b.frames.end());
    }
    REQUIRE(joined.size() == (n / t) * t);
    for (std::size_t i = 0; i < joined.size(); ++i) CHECK(joined[i] == frames[i]);
  }
}

TEST_CASE("assemble_blocks rejects frames of the wrong size") {
  nn::Rng rng(3);
  auto frames = testing::random_frames(8, 4, rng);
  frames[5] = testing::random_frame(4, 5, rng);
  CHECK_THROWS_AS(assemble_blocks(frames, 4, 4), DimensionError);
  CHECK_THROWS_AS(assemble_blocks(testing::random_frames(8, 4, rng), 4, 8), DimensionError);
}

TEST_CASE("constant block gives a constant cube") {
  Block b;
  for (int t = 0; t < 5; ++t) b.frames.emplace_back(6, 6, 77);
  const SliceCube c = build_cube(b);
  CHECK(c.steps() == 5);
  CHECK(c.size() == 6);
  CHECK(c.channels() == 18);
  for (auto v : c.raw()) CHECK(v == 77);
}

TEST_CASE("T=4, S=4 with frame t filled with t: brute-force index map") {
  Block b;
  for (std::uint8_t t = 0; t < 4; ++t) b.frames.emplace_back(4, 4, t);
  const SliceCube c = build_cube(b);
  std::size_t checked = 0;
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t ch = 0; ch < 12; ++ch) {
        CHECK(c.raw()[(t * 4 + y) * 12 + ch] == t);
        ++checked;
      }
  CHECK(checked == 4 * 4 * 4 * 3);
}

TEST_CASE("cube holds the same multiset of values as the block") {
  nn::Rng rng(13);
  const Block b = random_block(16, 32, rng);
  std::array<std::size_t, 256> from_block{}, from_cube{};
  for (const auto& f : b.frames)
    for (auto v : f.pixels) ++from_block[v];
  const SliceCube cube = build_cube(b);
  for (auto v : cube.raw()) ++from_cube[v];
  CHECK(from_block == from_cube);
}

TEST_CASE("property: exhaustive bijection at small sizes") {
  nn::Rng rng(14);
  for (auto [t, s] : {std::pair<std::size_t, std::size_t>{4, 4}, {3, 7}, {16, 32}, {1, 1}}) {
    const Block b = random_block(t, s, rng);
    const SliceCube c = build_cube(b);
    std::size_t mismatches = 0;
    for (std::size_t ti = 0; ti < t; ++ti)
      for (std::size_t y = 0; y < s; ++y)
        for (std::size_t x = 0; x < s; ++x)
          for (std::size_t ch = 0; ch < 3; ++ch)
            if (c.raw()[c.offset(ti, y, x, ch)] != b.frames[ti].at(y, x, ch)) ++mismatches;
    CHECK(mismatches == 0);
    CHECK(c == reference::build_cube(b));
  }
}

TEST_CASE("property: distinct blocks give distinct cubes") {
  nn::Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    Block a = random_block(4, 5, rng);
    Block b = a;
    auto& px = b.frames[rng.below(4)].pixels;
    px[rng.below(px.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
    CHECK(build_cube(a) != build_cube(b));
  }
}

TEST_CASE("normalization endpoints and midpoint") {
  CHECK(normalize_byte(0) == -1.0f);
  CHECK(normalize_byte(255) == 1.0f);
  CHECK(normalize_byte(127) == doctest::Approx(-1.0 / 255.0).epsilon(1e-6));
  CHECK(normalize_byte(128) == doctest::Approx(1.0 / 255.0).epsilon(1e-6));
}

TEST_CASE("raw to normalized to raw is the identity on all byte values") {
  // 16 x 4 x 12 = 768 bytes: every value 0..255 three times.
  std::vector<std::uint8_t> raw(16 * 4 * 12);
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = std::uint8_t(i % 256);
  const SliceCube c(16, 4, raw);
  const SliceCube n = normalize_cube(c);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    CHECK(n.values()[i] >= -1.0f);
    CHECK(n.values()[i] <= 1.0f);
  }
  CHECK(denormalize_cube(n) == c);
}

TEST_CASE("cube normalization state is enforced") {
  const SliceCube c(2, 2, std::vector<std::uint8_t>(24, 10));
  const SliceCube n = normalize_cube(c);
  CHECK(n.normalized());
  CHECK_THROWS_AS(normalize_cube(n), StateError);
  CHECK_THROWS_AS(c.values(), StateError);
  CHECK_THROWS_AS(n.raw(), StateError);
  CHECK_THROWS_AS(SliceCube(2, 2, std::vector<std::uint8_t>(23)), DimensionError);
}

TEST_CASE("parallel normalization matches the reference") {
  nn::Rng rng(16);
  std::vector<std::uint8_t> raw(10007);
  for (auto& v : raw) v = std::uint8_t(rng.below(256));
  std::vector<float> a(raw.size()), b(raw.size());
  normalize_into(raw, a);
  reference::normalize_into(raw, b);
  CHECK(a == b);
}

TEST_CASE("slice at t=0 is column x of the first frame") {
  nn::Rng rng(17);
  const Block b = random_block(6, 5, rng);
  for (std::size_t x = 0; x < 5; ++x) {
    const SliceImage s = extract_slice(b, x);
    CHECK(s.rows == 5);
    CHECK(s.steps == 6);
    for (std::size_t y = 0; y < 5; ++y)
      for (std::size_t c = 0; c < 3; ++c) CHECK(s.at(y, 0, c) == b.frames[0].at(y, x, c));
  }
}

TEST_CASE("constant block gives constant slices") {
  Block b;
  for (int t = 0; t < 3; ++t) b.frames.emplace_back(4, 4, 200);
  for (auto v : extract_slice(b, 2).pixels) CHECK(v == 200);
}

TEST_CASE("slice agrees with cube channels 3x..3x+2") {
  nn::Rng rng(18);
  const Block b = random_block(7, 6, rng);
  const SliceCube c = build_cube(b);
  for (std::size_t x = 0; x < 6; ++x) {
    const SliceImage s = extract_slice(b, x);
    for (std::size_t t = 0; t < 7; ++t)
      for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t ch = 0; ch < 3; ++ch)
          CHECK(s.at(y, t, ch) == c.raw()[(t * 6 + y) * 18 + 3 * x + ch]);
  }
  CHECK_THROWS_AS(extract_slice(b, 6), IndexError);
}

TEST_CASE("cube files round trip") {
  testing::TempDir dir("cube");
  nn::Rng rng(19);
  const SliceCube c = build_cube(random_block(4, 3, rng));
  write_cube(c, dir / "a.scub");
  CHECK(read_cube(dir / "a.scub") == c);
  const std::string bytes = encode_cube(c);
  CHECK(bytes.substr(0, 4) == "SCUB");
  CHECK(bytes.size() == 12 + c.element_count());
  CHECK_THROWS_AS(decode_cube("SCUB"), FormatError);
  CHECK_THROWS_AS(decode_cube(bytes.substr(0, bytes.size() - 1)), FormatError);
}
