#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "uec/isp.hpp"

namespace uec {

inline constexpr const char* kGeneratorVersion = "uec-isp-synth/1";

struct ManifestFrame {
  double ev = 0.0;
  std::string file;  // relative to the manifest directory
  std::string sha256;
};

struct ManifestScene {
  std::string scene_id;
  std::vector<double> evs;
  double gt_ev = 0.0;
  std::vector<ManifestFrame> frames;
};

struct Manifest {
  std::string generator_version = kGeneratorVersion;
  std::vector<double> ev_grid;
  bool jitter = false;
  std::uint64_t seed = 0;
  std::vector<ManifestScene> scenes;

  std::size_t frame_count() const;
};

struct SynthOptions {
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  std::vector<double> ev_grid = default_ev_grid();
  // Adds uniform +-0.25 stop noise to every non-zero EV.
  bool jitter = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

inline constexpr double kJitterStops = 0.25;

// Parses "-2,-1,0,1,2,3"; throws Error(kUsage) with the offending token.
std::vector<double> parse_ev_grid(std::string_view text);

// "ev+1.00", "ev-2.00"
std::string ev_file_stem(double ev);

std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

// Renders every decodable image in input_dir (sorted by name) into
// <output_dir>/<scene_id>/ev+d.dd.png and writes <output_dir>/manifest.json.
// Unreadable files are skipped with a warning on stderr.
Manifest synth_dataset(const SynthOptions& options);

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// Accepts the manifest file itself or the directory holding manifest.json.
std::filesystem::path resolve_manifest_path(const std::filesystem::path& path);

// Loads every frame listed in a manifest, verifying checksums.
std::vector<ExposureSequence> load_dataset(const std::filesystem::path& manifest_path);

}  // namespace uec
