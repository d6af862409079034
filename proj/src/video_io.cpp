#include "flamegan/video_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <numbers>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "flamegan/error.hpp"
#include "flamegan/nn/rng.hpp"

namespace flamegan {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Label label) {
  switch (label) {
    case Label::flame: return "flame";
    case Label::nonflame: return "nonflame";
    case Label::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

Label parse_label(std::string_view text) {
  if (text == "flame") return Label::flame;
  if (text == "nonflame") return Label::nonflame;
  if (text == "unlabeled") return Label::unlabeled;
  throw ManifestError("unknown label '" + std::string(text) + "'");
}

void Frame::validate() const {
  if (width == 0 || height == 0) throw FormatError("frame has zero extent");
  if (pixels.size() != width * height * 3) {
    throw FormatError("frame buffer holds " + std::to_string(pixels.size()) + " bytes, expected " +
                      std::to_string(width * height * 3));
  }
}

void VideoSequence::validate() const {
  for (const Frame& f : frames) {
    f.validate();
    if (f.width != frames.front().width || f.height != frames.front().height) {
      throw FormatError("frames in " + source_id + " have mixed dimensions");
    }
  }
}

// ---------------------------------------------------------------------------
// P6

std::string encode_ppm(const Frame& frame) {
  frame.validate();
  std::string out = "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(frame.pixels.data()), frame.pixels.size());
  return out;
}

namespace {

class HeaderParser {
 public:
  explicit HeaderParser(const std::string& bytes) : bytes_(bytes) {}

  std::size_t number() {
    skip_space_and_comments();
    std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + std::size_t(bytes_[pos_] - '0');
      ++pos_;
    }
    if (pos_ == start) throw FormatError("malformed P6 header");
    return value;
  }

  /// Consumes the single whitespace byte that ends the header.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("malformed P6 header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 2;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spill(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

bool numeric_stem(const fs::path& p) {
  const std::string stem = p.stem().string();
  return !stem.empty() &&
         std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string frame_file_name(std::size_t index) {
  std::ostringstream os;
  os << std::setw(6) << std::setfill('0') << index << ".ppm";
  return os.str();
}

std::string source_id_of(const fs::path& dir) {
  fs::path p = dir;
  if (!p.has_filename()) p = p.parent_path();
  return p.filename().string();
}

}  // namespace

Frame decode_ppm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("not a P6 file");
  HeaderParser header(bytes);
  const std::size_t width = header.number();
  const std::size_t height = header.number();
  const std::size_t maxval = header.number();
  if (maxval != 255) throw FormatError("only 8-bit P6 (maxval 255) is supported");
  if (width == 0 || height == 0) throw FormatError("P6 image with zero extent");
  const std::size_t offset = header.payload_offset();
  const std::size_t needed = width * height * 3;
  if (bytes.size() - offset < needed) throw FormatError("P6 payload truncated");
  Frame frame(width, height);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(offset), needed, frame.pixels.begin());
  return frame;
}

Frame read_ppm(const fs::path& path) {
  try {
    return decode_ppm(slurp(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_ppm(const Frame& frame, const fs::path& path) { spill(path, encode_ppm(frame)); }

// ---------------------------------------------------------------------------
// frame directories

FrameDirectory open_frame_directory(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  if (!fs::is_regular_file(manifest_path)) {
    throw ManifestError("missing " + manifest_path.string());
  }
  json manifest;
  try {
    manifest = json::parse(slurp(manifest_path));
  } catch (const json::exception& e) {
    throw ManifestError(manifest_path.string() + ": " + e.what());
  }
  for (const char* key : {"fps", "label", "width", "height", "frame_count"}) {
    if (!manifest.contains(key)) throw ManifestError(manifest_path.string() + ": missing key " + key);
  }

  FrameDirectory fd;
  fd.dir = dir;
  fd.source_id = source_id_of(dir);
  std::size_t frame_count = 0;
  try {
    fd.fps = manifest.at("fps").get<double>();
    fd.label = parse_label(manifest.at("label").get<std::string>());
    fd.width = manifest.at("width").get<std::size_t>();
    fd.height = manifest.at("height").get<std::size_t>();
    frame_count = manifest.at("frame_count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ManifestError(manifest_path.string() + ": " + e.what());
  }
  if (!(fd.fps > 0)) throw ManifestError("fps must be positive");

  std::vector<std::pair<unsigned long long, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".ppm") continue;
    if (!numeric_stem(entry.path())) continue;
    files.emplace_back(std::stoull(entry.path().stem().string()), entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.size() != frame_count) {
    throw ManifestError("manifest lists " + std::to_string(frame_count) + " frames, found " +
                        std::to_string(files.size()));
  }
  for (auto& f : files) fd.files.push_back(std::move(f.second));
  return fd;
}

Frame FrameDirectory::read(std::size_t index) const {
  const fs::path& path = files.at(index);
  Frame f = read_ppm(path);
  if (f.width != width || f.height != height) {
    throw FormatError(path.string() + " is " + std::to_string(f.width) + "x" +
                      std::to_string(f.height) + ", manifest says " + std::to_string(width) + "x" +
                      std::to_string(height));
  }
  return f;
}

VideoSequence read_frame_sequence(const fs::path& dir) {
  const FrameDirectory fd = open_frame_directory(dir);
  VideoSequence seq;
  seq.source_id = fd.source_id;
  seq.fps = fd.fps;
  seq.label = fd.label;
  seq.frames.reserve(fd.frame_count());
  for (std::size_t i = 0; i < fd.frame_count(); ++i) seq.frames.push_back(fd.read(i));
  return seq;
}

void write_frame_sequence(const VideoSequence& seq, const fs::path& dir) {
  if (seq.frames.empty()) throw EmptyInput("cannot write an empty frame sequence");
  seq.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    write_ppm(seq.frames[i], dir / frame_file_name(i + 1));
  }
  json manifest = {{"fps", seq.fps},
                   {"label", std::string(to_string(seq.label))},
                   {"width", seq.frames.front().width},
                   {"height", seq.frames.front().height},
                   {"frame_count", seq.frames.size()}};
  spill(dir / kManifestName, manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// sampling

std::vector<std::size_t> temporal_sample_indices(std::size_t frame_count, double fps) {
  if (fps < double(kSamplesPerSecond)) {
    throw ParamError("temporal sampling needs fps >= 10, got " + std::to_string(fps));
  }
  if (double(frame_count) < fps) throw EmptyInput("clip is shorter than one second");

  std::vector<std::size_t> indices;
  for (std::size_t second = 0;; ++second) {
    const auto base = static_cast<std::size_t>(std::floor(double(second) * fps));
    if (base >= frame_count) break;
    for (std::size_t k = 0; k < kSamplesPerSecond; ++k) {
      const double offset = double(k) * fps / double(kSamplesPerSecond);
      const auto idx = base + static_cast<std::size_t>(std::floor(offset + 0.5));
      if (idx >= frame_count) return indices;
      indices.push_back(idx);
    }
  }
  return indices;
}

std::vector<Frame> temporal_sample(const VideoSequence& seq) {
  const auto indices = temporal_sample_indices(seq.frames.size(), seq.fps);
  std::vector<Frame> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(seq.frames[i]);
  return out;
}

// ---------------------------------------------------------------------------
// synthesis

std::string_view to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::flicker_blob: return "flicker_blob";
    case SynthKind::static_scene: return "static_scene";
    case SynthKind::moving_object: return "moving_object";
    case SynthKind::periodic_light: return "periodic_light";
  }
  return "flicker_blob";
}

SynthKind parse_synth_kind(std::string_view text) {
  for (SynthKind k : {SynthKind::flicker_blob, SynthKind::static_scene, SynthKind::moving_object,
                      SynthKind::periodic_light}) {
    if (to_string(k) == text) return k;
  }
  throw ParamError("unknown synth kind '" + std::string(text) + "'");
}

void SynthSpec::validate() const {
  if (width == 0 || height == 0) throw ParamError("synth frame size must be positive");
  if (fps < double(kSamplesPerSecond)) throw ParamError("synth fps must be >= 10");
  if (!(flicker_band_hz > 0) || flicker_band_hz > fps / 2) {
    throw ParamError("flicker band must be in (0, fps/2]");
  }
  if (duration_s * double(kSamplesPerSecond) < double(block_frames)) {
    throw ParamError("clip of " + std::to_string(duration_s) + " s cannot fill a " +
                     std::to_string(block_frames) + "-frame block after sampling");
  }
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Sum of random sinusoids with frequencies in [low, band]; values lie in
/// [-1, 1] and the spectrum is confined to the band.
class BandLimitedProcess {
 public:
  BandLimitedProcess(nn::Rng& rng, double low_hz, double band_hz, std::size_t components = 6) {
    double total = 0.0;
    for (std::size_t i = 0; i < components; ++i) {
      Component c{rng.uniform(low_hz, band_hz), rng.uniform(0.4, 1.0), rng.uniform(0.0, kTwoPi)};
      total += c.amplitude;
      parts_.push_back(c);
    }
    for (Component& c : parts_) c.amplitude /= total;
  }

  double operator()(double t) const {
    double v = 0.0;
    for (const Component& c : parts_) v += c.amplitude * std::sin(kTwoPi * c.freq * t + c.phase);
    return v;
  }

 private:
  struct Component {
    double freq, amplitude, phase;
  };
  std::vector<Component> parts_;
};

/// Static background: tinted base colour, smooth texture and a few dull
/// rectangles. Stored as floating point RGB.
std::vector<double> make_background(const SynthSpec& spec, nn::Rng& rng) {
  const std::size_t w = spec.width, h = spec.height;
  std::vector<double> img(w * h * 3);
  double base[3];
  for (double& b : base) b = rng.uniform(25.0, 95.0);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 3; ++i) {
    waves.push_back({rng.uniform(0.5, 3.0) / double(w), rng.uniform(0.5, 3.0) / double(h),
                     rng.uniform(0.0, kTwoPi), rng.uniform(4.0, 12.0)});
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double tex = 0.0;
      for (const Wave& wv : waves) {
        tex += wv.amp * std::sin(kTwoPi * (wv.fx * double(x) + wv.fy * double(y)) + wv.phase);
      }
      for (int c = 0; c < 3; ++c) img[(y * w + x) * 3 + c] = base[c] + tex;
    }
  }
  const std::size_t rects = rng.below(4);
  for (std::size_t r = 0; r < rects; ++r) {
    const std::size_t rw = 1 + rng.below(std::max<std::size_t>(1, w / 3));
    const std::size_t rh = 1 + rng.below(std::max<std::size_t>(1, h / 3));
    const std::size_t x0 = rng.below(w), y0 = rng.below(h);
    double color[3];
    for (double& c : color) c = rng.uniform(30.0, 150.0);
    for (std::size_t y = y0; y < std::min(h, y0 + rh); ++y) {
      for (std::size_t x = x0; x < std::min(w, x0 + rw); ++x) {
        for (int c = 0; c < 3; ++c) img[(y * w + x) * 3 + c] = color[c];
      }
    }
  }
  return img;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

/// Irregular blob outline: radius as a function of angle.
struct BlobShape {
  double cx, cy, r0;
  double harmonic_amp[4];
  double harmonic_phase[4];

  BlobShape(const SynthSpec& spec, nn::Rng& rng) {
    cx = double(spec.width) * rng.uniform(0.35, 0.65);
    cy = double(spec.height) * rng.uniform(0.40, 0.65);
    r0 = double(std::min(spec.width, spec.height)) * rng.uniform(0.18, 0.28);
    for (int k = 0; k < 4; ++k) {
      harmonic_amp[k] = rng.uniform(0.0, 0.12);
      harmonic_phase[k] = rng.uniform(0.0, kTwoPi);
    }
  }

  /// Normalized radius (0 at centre, 1 on the outline) with the outline
  /// scaled by (1 + wobble). Flames are taller than wide, so the upper half
  /// is stretched.
  double rho(double x, double y, double wobble) const {
    const double dx = x - cx;
    double dy = y - cy;
    if (dy < 0) dy *= 0.6;
    const double theta = std::atan2(dy, dx);
    double radius = 1.0 + wobble;
    for (int k = 0; k < 4; ++k) radius += harmonic_amp[k] * std::sin((k + 2) * theta + harmonic_phase[k]);
    return std::sqrt(dx * dx + dy * dy) / (r0 * radius);
  }
};

/// Flame chromaticity for intensity i in [0,1] at normalized radius rho:
/// R >= 180 and R >= G >= B.
void flame_color(double intensity, double rho, double rgb[3]) {
  const double r = 180.0 + 75.0 * intensity;
  const double g = r * (0.85 - 0.45 * rho) * (0.7 + 0.3 * intensity);
  const double b = g * (0.5 - 0.35 * rho);
  rgb[0] = r;
  rgb[1] = g;
  rgb[2] = b;
}

void put_flame_pixel(Frame& f, std::size_t y, std::size_t x, const double rgb[3], nn::Rng& rng) {
  double r = std::max(180.0, rgb[0] + kSensorNoiseStd * rng.normal());
  double g = std::min(r, rgb[1] + kSensorNoiseStd * rng.normal());
  double b = std::min(g, rgb[2] + kSensorNoiseStd * rng.normal());
  const std::uint8_t rb = to_byte(r);
  const std::uint8_t gb = std::min(rb, to_byte(g));
  f.at(y, x, 0) = rb;
  f.at(y, x, 1) = gb;
  f.at(y, x, 2) = std::min(gb, to_byte(b));
}

/// Smooth spatial field from a coarse grid of values, bilinear upsampled.
class CoarseField {
 public:
  static constexpr std::size_t kGrid = 3;

  CoarseField(const SynthSpec& spec) : w_(double(spec.width)), h_(double(spec.height)) {}

  template <typename NodeValue>
  double sample(double x, double y, NodeValue&& node) const {
    const double gx = std::clamp(x / w_ * (kGrid - 1), 0.0, double(kGrid - 1));
    const double gy = std::clamp(y / h_ * (kGrid - 1), 0.0, double(kGrid - 1));
    const std::size_t ix = std::min<std::size_t>(std::size_t(gx), kGrid - 2);
    const std::size_t iy = std::min<std::size_t>(std::size_t(gy), kGrid - 2);
    const double fx = gx - double(ix), fy = gy - double(iy);
    const double v00 = node(iy * kGrid + ix), v01 = node(iy * kGrid + ix + 1);
    const double v10 = node((iy + 1) * kGrid + ix), v11 = node((iy + 1) * kGrid + ix + 1);
    return (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
  }

 private:
  double w_, h_;
};

}  // namespace

VideoSequence synth_video(const SynthSpec& spec) {
  spec.validate();
  nn::Rng rng(spec.seed);
  nn::Rng scene_rng = rng.fork(1);
  nn::Rng motion_rng = rng.fork(2);
  nn::Rng noise_rng = rng.fork(3);

  const std::size_t w = spec.width, h = spec.height;
  const auto frame_count = static_cast<std::size_t>(std::llround(spec.duration_s * spec.fps));
  const std::vector<double> background = make_background(spec, scene_rng);

  VideoSequence seq;
  seq.fps = spec.fps;
  seq.label = spec.kind == SynthKind::flicker_blob ? Label::flame : Label::nonflame;
  seq.source_id = std::string(to_string(spec.kind)) + "_" + std::to_string(spec.seed);
  seq.frames.reserve(frame_count);

  auto background_pixel = [&](Frame& f, std::size_t y, std::size_t x, double gain) {
    for (int c = 0; c < 3; ++c) {
      f.at(y, x, c) = to_byte(background[(y * w + x) * 3 + c] * gain +
                              kSensorNoiseStd * noise_rng.normal());
    }
  };

  switch (spec.kind) {
    case SynthKind::static_scene: {
      for (std::size_t t = 0; t < frame_count; ++t) {
        Frame f(w, h);
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) background_pixel(f, y, x, 1.0);
        seq.frames.push_back(std::move(f));
      }
      break;
    }
    case SynthKind::moving_object: {
      static constexpr double kPalette[][3] = {
          {235, 235, 250}, {90, 220, 240}, {120, 230, 120}, {110, 140, 245}, {220, 120, 230}};
      const auto& color = kPalette[motion_rng.below(std::size(kPalette))];
      const double pw = double(w) * motion_rng.uniform(0.15, 0.25);
      const double ph = double(h) * motion_rng.uniform(0.15, 0.25);
      const double x0 = motion_rng.uniform(0.0, double(w));
      const double y0 = motion_rng.uniform(0.0, double(h));
      const double speed = double(std::max(w, h)) * motion_rng.uniform(0.3, 0.8);
      const double heading = motion_rng.uniform(0.0, kTwoPi);
      const double vx = speed * std::cos(heading), vy = speed * std::sin(heading);
      for (std::size_t t = 0; t < frame_count; ++t) {
        const double time = double(t) / spec.fps;
        const double px = std::fmod(x0 + vx * time + 1e6 * double(w), double(w));
        const double py = std::fmod(y0 + vy * time + 1e6 * double(h), double(h));
        Frame f(w, h);
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t x = 0; x < w; ++x) {
            // Offsets measured on the torus so the patch wraps at the edges.
            const double dx = std::fmod(double(x) - px + double(w), double(w));
            const double dy = std::fmod(double(y) - py + double(h), double(h));
            if (dx < pw && dy < ph) {
              for (int c = 0; c < 3; ++c) {
                f.at(y, x, c) = to_byte(color[c] + kSensorNoiseStd * noise_rng.normal());
              }
            } else {
              background_pixel(f, y, x, 1.0);
            }
          }
        }
        seq.frames.push_back(std::move(f));
      }
      break;
    }
    case SynthKind::periodic_light: {
      const double freq = motion_rng.uniform(0.4, std::min(2.0, 0.5 * spec.flicker_band_hz));
      const double phase = motion_rng.uniform(0.0, kTwoPi);
      const double depth = spec.flame_hued_light ? 0.15 : motion_rng.uniform(0.2, 0.35);
      std::optional<BlobShape> lamp;
      std::vector<double> texture;
      if (spec.flame_hued_light) {
        lamp.emplace(spec, scene_rng);
        for (std::size_t i = 0; i < CoarseField::kGrid * CoarseField::kGrid; ++i) {
          texture.push_back(scene_rng.uniform(-1.0, 1.0));
        }
      }
      const CoarseField field(spec);
      for (std::size_t t = 0; t < frame_count; ++t) {
        const double wave = std::sin(kTwoPi * freq * double(t) / spec.fps + phase);
        const double gain = 1.0 + depth * wave;
        Frame f(w, h);
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t x = 0; x < w; ++x) {
            if (lamp) {
              const double rho = lamp->rho(double(x), double(y), 0.0);
              if (rho <= 1.0) {
                const double local =
                    field.sample(double(x), double(y), [&](std::size_t i) { return texture[i]; });
                const double intensity = std::clamp(0.6 + 0.25 * wave + 0.15 * local, 0.0, 1.0);
                double rgb[3];
                flame_color(intensity, rho, rgb);
                put_flame_pixel(f, y, x, rgb, noise_rng);
                continue;
              }
            }
            background_pixel(f, y, x, gain);
          }
        }
        seq.frames.push_back(std::move(f));
      }
      break;
    }
    case SynthKind::flicker_blob: {
      const BlobShape blob(spec, scene_rng);
      const BandLimitedProcess global(motion_rng, 0.5, spec.flicker_band_hz);
      const BandLimitedProcess wobble(motion_rng, 0.5, spec.flicker_band_hz);
      std::vector<BandLimitedProcess> local;
      for (std::size_t i = 0; i < CoarseField::kGrid * CoarseField::kGrid; ++i) {
        local.emplace_back(motion_rng, 0.5, spec.flicker_band_hz);
      }
      const CoarseField field(spec);
      std::vector<double> local_now(local.size());
      for (std::size_t t = 0; t < frame_count; ++t) {
        const double time = double(t) / spec.fps;
        const double g = global(time);
        const double wob = 0.12 * wobble(time);
        for (std::size_t i = 0; i < local.size(); ++i) local_now[i] = local[i](time);
        Frame f(w, h);
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t x = 0; x < w; ++x) {
            const double rho = blob.rho(double(x), double(y), wob);
            if (rho > 1.0) {
              background_pixel(f, y, x, 1.0);
              continue;
            }
            const double l =
                field.sample(double(x), double(y), [&](std::size_t i) { return local_now[i]; });
            const double intensity = std::clamp(0.6 + 0.25 * g + 0.15 * l, 0.0, 1.0);
            double rgb[3];
            flame_color(intensity, rho, rgb);
            put_flame_pixel(f, y, x, rgb, noise_rng);
          }
        }
        seq.frames.push_back(std::move(f));
      }
      break;
    }
  }
  return seq;
}

}  // namespace flamegan
