#pragma once

// Frame-sequence ingestion: P6 frame directories with a JSON manifest,
// per-second temporal sampling, and a synthetic clip generator.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace flamegan {

enum class Label { flame, nonflame, unlabeled };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

/// Row-major RGB8 image.
struct Frame {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  Frame() = default;
  Frame(std::size_t w, std::size_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(w * h * 3, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * 3 + c];
  }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * 3 + c];
  }

  /// Throws FormatError when the pixel buffer does not match the extents.
  void validate() const;

  bool operator==(const Frame&) const = default;
};

struct VideoSequence {
  std::vector<Frame> frames;
  double fps = 0.0;
  Label label = Label::unlabeled;
  std::string source_id;

  double duration_s() const { return fps > 0 ? double(frames.size()) / fps : 0.0; }
  void validate() const;
};

// P6 codec. The writer always emits "P6\n<w> <h>\n255\n"; the reader also
// accepts arbitrary header whitespace and '#' comments.
std::string encode_ppm(const Frame& frame);
Frame decode_ppm(const std::string& bytes);
Frame read_ppm(const std::filesystem::path& path);
void write_ppm(const Frame& frame, const std::filesystem::path& path);

inline constexpr char kManifestName[] = "manifest.json";

/// Manifest fields and the sorted frame files of a directory; frames are
/// decoded on demand.
struct FrameDirectory {
  std::filesystem::path dir;
  std::string source_id;  // directory name
  double fps = 0.0;
  Label label = Label::unlabeled;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::filesystem::path> files;

  std::size_t frame_count() const { return files.size(); }
  /// Throws FormatError when the frame disagrees with the manifest size.
  Frame read(std::size_t index) const;
};

FrameDirectory open_frame_directory(const std::filesystem::path& dir);

/// Reads `<dir>/manifest.json` plus the numerically named .ppm frames.
VideoSequence read_frame_sequence(const std::filesystem::path& dir);

/// Writes 000001.ppm, 000002.ppm, ... and manifest.json into `dir`.
void write_frame_sequence(const VideoSequence& seq, const std::filesystem::path& dir);

/// Frames kept per second of video by temporal_sample.
inline constexpr std::size_t kSamplesPerSecond = 10;

/// Source indices chosen by temporal_sample. Second s contributes
/// floor(s*fps) + round_half_up(k*fps/10) for k = 0..9; in a trailing partial
/// second only indices inside the clip are kept.
std::vector<std::size_t> temporal_sample_indices(std::size_t frame_count, double fps);

std::vector<Frame> temporal_sample(const VideoSequence& seq);

// ---------------------------------------------------------------------------
// Synthetic clips

enum class SynthKind { flicker_blob, static_scene, moving_object, periodic_light };

std::string_view to_string(SynthKind kind);
SynthKind parse_synth_kind(std::string_view text);

struct SynthSpec {
  SynthKind kind = SynthKind::flicker_blob;
  double duration_s = 10.0;
  double fps = 30.0;
  std::size_t width = 128;
  std::size_t height = 128;
  double flicker_band_hz = 10.0;
  std::uint64_t seed = 0;
  /// periodic_light only: the scene holds a flame-coloured lamp whose
  /// brightness follows the periodic modulation.
  bool flame_hued_light = false;
  /// Block length the clip must fill after sampling.
  std::size_t block_frames = 64;

  void validate() const;
};

inline constexpr double kSensorNoiseStd = 2.0;

/// Deterministic in `spec`. flicker_blob clips are labeled flame, the rest
/// nonflame.
VideoSequence synth_video(const SynthSpec& spec);

}  // namespace flamegan
