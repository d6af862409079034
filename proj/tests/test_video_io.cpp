#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include <json.hpp>

#include "flamegan/error.hpp"
#include "flamegan/video_io.hpp"
#include "support.hpp"

using namespace flamegan;
namespace fs = std::filesystem;

namespace {

VideoSequence random_sequence(std::size_t n, std::size_t w, std::size_t h, double fps,
                              nn::Rng& rng) {
  VideoSequence seq;
  seq.fps = fps;
  seq.label = Label::flame;
  for (std::size_t i = 0; i < n; ++i) seq.frames.push_back(testing::random_frame(w, h, rng));
  return seq;
}

// Round half up on exact rationals: floor((2k*fps + 10) / 20) for integer fps.
std::size_t oracle_offset(std::size_t k, std::size_t fps) { return (2 * k * fps + 10) / 20; }

}  // namespace

TEST_CASE("ppm header is exact and comments are tolerated") {
  Frame f(2, 1);
  f.pixels = {1, 2, 3, 4, 5, 6};
  const std::string bytes = encode_ppm(f);
  CHECK(bytes.substr(0, 11) == "P6\n2 1\n255\n");
  CHECK(decode_ppm(bytes) == f);

  const std::string commented = "P6 # a comment\n  2\t1 # more\n255\n" + bytes.substr(11);
  CHECK(decode_ppm(commented) == f);
  CHECK_THROWS_AS(decode_ppm("P3\n1 1\n255\n0 0 0"), FormatError);
  CHECK_THROWS_AS(decode_ppm("P6\n2 2\n255\nabc"), FormatError);
}

TEST_CASE("frame directory with 30 frames of 128x128 reads back 30 frames") {
  testing::TempDir dir("seq30");
  nn::Rng rng(1);
  const VideoSequence seq = random_sequence(30, 128, 128, 30.0, rng);
  write_frame_sequence(seq, dir.path());
  const VideoSequence back = read_frame_sequence(dir.path());
  CHECK(back.frames.size() == 30);
  CHECK(back.fps == 30.0);
  CHECK(back.label == Label::flame);
}

TEST_CASE("a 4x4 all-zero frame has 48 zero bytes") {
  testing::TempDir dir("zero");
  VideoSequence seq;
  seq.fps = 10;
  seq.frames.emplace_back(4, 4);
  write_frame_sequence(seq, dir.path());
  const VideoSequence back = read_frame_sequence(dir.path());
  REQUIRE(back.frames.size() == 1);
  CHECK(back.frames[0].pixels == std::vector<std::uint8_t>(48, 0));
}

TEST_CASE("write then read is byte identical on random frames") {
  nn::Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    testing::TempDir dir("rt");
    const std::size_t w = 1 + rng.below(40), h = 1 + rng.below(40);
    const VideoSequence seq = random_sequence(1 + rng.below(12), w, h, 25.0, rng);
    write_frame_sequence(seq, dir.path());
    const VideoSequence back = read_frame_sequence(dir.path());
    REQUIRE(back.frames.size() == seq.frames.size());
    for (std::size_t i = 0; i < seq.frames.size(); ++i) CHECK(back.frames[i] == seq.frames[i]);
  }
}

TEST_CASE("write of a read directory reproduces every frame file") {
  testing::TempDir a("idem_a"), b("idem_b");
  nn::Rng rng(8);
  write_frame_sequence(random_sequence(7, 9, 5, 30.0, rng), a.path());
  write_frame_sequence(read_frame_sequence(a.path()), b.path());
  for (const auto& e : fs::directory_iterator(a.path())) {
    CHECK(testing::file_bytes(e.path()) == testing::file_bytes(b.path() / e.path().filename()));
  }
}

TEST_CASE("smallest sequence produces one frame file and the manifest") {
  testing::TempDir dir("small");
  VideoSequence seq;
  seq.fps = 12;
  seq.label = Label::nonflame;
  seq.frames.emplace_back(2, 2, 9);
  write_frame_sequence(seq, dir.path());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir.path())) names.push_back(e.path().filename());
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{"000001.ppm", "manifest.json"});

  const auto m = nlohmann::json::parse(testing::file_bytes(dir / "manifest.json"));
  CHECK(m.at("fps").get<double>() == 12.0);
  CHECK(m.at("label") == "nonflame");
  CHECK(m.at("width") == 2);
  CHECK(m.at("height") == 2);
  CHECK(m.at("frame_count") == 1);
}

TEST_CASE("frame directory errors") {
  nn::Rng rng(3);
  SUBCASE("empty sequence") {
    testing::TempDir dir("empty");
    VideoSequence seq;
    seq.fps = 30;
    CHECK_THROWS_AS(write_frame_sequence(seq, dir.path()), EmptyInput);
  }
  SUBCASE("missing manifest") {
    testing::TempDir dir("nomanifest");
    write_ppm(testing::random_frame(2, 2, rng), dir / "000001.ppm");
    CHECK_THROWS_AS(read_frame_sequence(dir.path()), ManifestError);
  }
  SUBCASE("dimension mismatch across frames") {
    testing::TempDir dir("mismatch");
    write_frame_sequence(random_sequence(3, 4, 4, 30.0, rng), dir.path());
    write_ppm(testing::random_frame(5, 4, rng), dir / "000002.ppm");
    CHECK_THROWS_AS(read_frame_sequence(dir.path()), FormatError);
  }
  SUBCASE("non-P6 frame") {
    testing::TempDir dir("p3");
    write_frame_sequence(random_sequence(2, 4, 4, 30.0, rng), dir.path());
    std::ofstream(dir / "000001.ppm") << "P3\n4 4\n255\n";
    CHECK_THROWS_AS(read_frame_sequence(dir.path()), FormatError);
  }
  SUBCASE("frame count disagrees with manifest") {
    testing::TempDir dir("count");
    write_frame_sequence(random_sequence(3, 4, 4, 30.0, rng), dir.path());
    fs::remove(dir / "000003.ppm");
    CHECK_THROWS_AS(read_frame_sequence(dir.path()), ManifestError);
  }
  SUBCASE("unwritable path") {
    testing::TempDir dir("unwritable");
    std::ofstream(dir / "plain_file") << "x";
    CHECK_THROWS_AS(write_frame_sequence(random_sequence(1, 2, 2, 30.0, rng), dir / "plain_file/sub"),
                    IoError);
  }
}

TEST_CASE("temporal sampling at 30 fps picks every third frame in second 0") {
  const auto idx = temporal_sample_indices(30, 30.0);
  CHECK(idx == std::vector<std::size_t>{0, 3, 6, 9, 12, 15, 18, 21, 24, 27});
}

TEST_CASE("temporal sampling at 10 fps is the identity") {
  for (std::size_t n : {10u, 37u, 100u}) {
    const auto idx = temporal_sample_indices(n, 10.0);
    REQUIRE(idx.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(idx[i] == i);
  }
}

TEST_CASE("6.4 s at 30 fps yields exactly 64 sampled frames") {
  CHECK(temporal_sample_indices(192, 30.0).size() == 64);
}

TEST_CASE("property: ten frames per whole second, non-decreasing, half-up rounding") {
  nn::Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t fps = 10 + rng.below(51);
    const std::size_t seconds = 1 + rng.below(8);
    const std::size_t n = seconds * fps;
    const auto idx = temporal_sample_indices(n, double(fps));
    REQUIRE(idx.size() == 10 * seconds);
    for (std::size_t s = 0; s < seconds; ++s) {
      for (std::size_t k = 0; k < 10; ++k) CHECK(idx[s * 10 + k] == s * fps + oracle_offset(k, fps));
    }
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(idx.back() < n);
  }
}

TEST_CASE("temporal sampling errors") {
  CHECK_THROWS_AS(temporal_sample_indices(29, 30.0), EmptyInput);
  CHECK_THROWS_AS(temporal_sample_indices(100, 9.0), ParamError);
}

TEST_CASE("temporal_sample returns the indexed frames") {
  nn::Rng rng(6);
  const VideoSequence seq = random_sequence(45, 3, 3, 30.0, rng);
  const auto frames = temporal_sample(seq);
  const auto idx = temporal_sample_indices(45, 30.0);
  REQUIRE(frames.size() == idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) CHECK(frames[i] == seq.frames[idx[i]]);
}

TEST_CASE("static scene varies only by sensor noise") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SynthSpec s;
    s.kind = SynthKind::static_scene;
    s.seed = seed;
    s.duration_s = 2;
    s.width = s.height = 24;
    s.block_frames = 16;
    const VideoSequence v = synth_video(s);
    CHECK(v.label == Label::nonflame);
    const std::size_t n = v.frames.size(), px = v.frames[0].pixels.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < px; ++i) {
      double mean = 0.0, sq = 0.0;
      for (const auto& f : v.frames) mean += f.pixels[i];
      mean /= double(n);
      for (const auto& f : v.frames) sq += (f.pixels[i] - mean) * (f.pixels[i] - mean);
      worst = std::max(worst, sq / double(n - 1));
    }
    // Per-pixel variance is sigma^2 plus 1/12 of rounding; allow sampling spread
    // over 60 frames and 1728 channels.
    CHECK(worst < 2.5 * (kSensorNoiseStd * kSensorNoiseStd + 1.0 / 12.0));
  }
}

TEST_CASE("flicker blob keeps at least 80 percent of its power below the band") {
  for (std::uint64_t seed : {42u, 43u, 44u}) {
    SynthSpec s;
    s.kind = SynthKind::flicker_blob;
    s.seed = seed;
    s.fps = 30;
    s.duration_s = 10;
    s.width = s.height = 64;
    s.flicker_band_hz = 10;
    const VideoSequence v = synth_video(s);
    CHECK(v.label == Label::flame);

    // Blob centre: centroid of flame-chroma pixels in frame 0.
    const Frame& f0 = v.frames[0];
    double sx = 0, sy = 0, count = 0;
    for (std::size_t y = 0; y < f0.height; ++y)
      for (std::size_t x = 0; x < f0.width; ++x)
        if (f0.at(y, x, 0) >= 180 && f0.at(y, x, 0) >= f0.at(y, x, 1) && f0.at(y, x, 1) >= f0.at(y, x, 2)) {
          sx += double(x);
          sy += double(y);
          ++count;
        }
    REQUIRE(count > 0);
    const std::size_t cx = std::size_t(std::lround(sx / count)), cy = std::size_t(std::lround(sy / count));

    std::vector<double> series;
    for (const auto& f : v.frames) series.push_back(double(f.at(cy, cx, 0)) + f.at(cy, cx, 1) + f.at(cy, cx, 2));
    double mean = 0;
    for (double x : series) mean += x;
    mean /= double(series.size());
    const std::size_t n = series.size();
    double low = 0, total = 0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
      std::complex<double> acc = 0;
      for (std::size_t t = 0; t < n; ++t)
        acc += (series[t] - mean) * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t) / double(n));
      const double power = std::norm(acc);
      const double hz = double(k) * s.fps / double(n);
      total += power;
      if (hz < s.flicker_band_hz) low += power;
    }
    REQUIRE(total > 0);
    CHECK(low / total >= 0.8);
  }
}

TEST_CASE("synth_video is a pure function of its spec") {
  for (SynthKind kind : {SynthKind::flicker_blob, SynthKind::static_scene, SynthKind::moving_object,
                         SynthKind::periodic_light}) {
    SynthSpec s;
    s.kind = kind;
    s.seed = 99;
    s.duration_s = 2;
    s.width = s.height = 16;
    s.block_frames = 16;
    const VideoSequence a = synth_video(s), b = synth_video(s);
    REQUIRE(a.frames.size() == b.frames.size());
    for (std::size_t i = 0; i < a.frames.size(); ++i) CHECK(a.frames[i] == b.frames[i]);
    s.seed = 100;
    CHECK(synth_video(s).frames[0] != a.frames[0]);
  }
}

TEST_CASE("flame-hued periodic light is flame coloured but non-flame") {
  SynthSpec s;
  s.kind = SynthKind::periodic_light;
  s.flame_hued_light = true;
  s.seed = 4;
  s.duration_s = 2;
  s.width = s.height = 32;
  s.block_frames = 16;
  const VideoSequence v = synth_video(s);
  CHECK(v.label == Label::nonflame);
  std::size_t flame_like = 0;
  const Frame& f = v.frames[0];
  for (std::size_t y = 0; y < f.height; ++y)
    for (std::size_t x = 0; x < f.width; ++x)
      if (f.at(y, x, 0) >= 180 && f.at(y, x, 0) >= f.at(y, x, 1) && f.at(y, x, 1) >= f.at(y, x, 2)) ++flame_like;
  CHECK(flame_like > 20);
}

TEST_CASE("synth spec validation") {
  SynthSpec s;
  s.fps = 8;
  CHECK_THROWS_AS(s.validate(), ParamError);
  s = SynthSpec{};
  s.duration_s = 3;  // 30 sampled frames cannot fill a 64-frame block
  CHECK_THROWS_AS(s.validate(), ParamError);
  CHECK(parse_synth_kind("moving_object") == SynthKind::moving_object);
  CHECK_THROWS_AS(parse_synth_kind("fire"), ParamError);
}
