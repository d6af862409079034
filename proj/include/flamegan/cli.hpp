#pragma once

// Command-line surface: synth, slice, train, refine, eval, ablate, detect,
// gradcheck. Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "flamegan/gan.hpp"

namespace flamegan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct DetectionEvent {
  std::string source_id;
  double start_time_s = 0.0;
  double score = 0.0;
  Label decision = Label::nonflame;
  double latency_ms = 0.0;  // block completion to decision
};

nlohmann::json to_json(const DetectionEvent& event);

/// Streams a frame directory through the model: sampled frames are read one
/// at a time and every completed block is classified as soon as its last
/// frame arrives. Events are emitted in chronological order. Throws
/// ConfigError when the frames do not fit the model input.
std::size_t detect_stream(const Discriminator& disc, const std::filesystem::path& frame_dir,
                          double threshold, const std::function<void(const DetectionEvent&)>& emit);

/// Entry point for the flamegan executable.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flamegan
