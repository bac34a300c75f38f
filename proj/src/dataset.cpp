#include "uec/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "uec/error.hpp"
#include "uec/image_io.hpp"

namespace uec {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct SceneJob {
  fs::path source;
  std::string scene_id;
  std::size_t index = 0;
};

std::optional<ManifestScene> render_scene(const SceneJob& job, const SynthOptions& opt) {
  ImageF32 gt;
  try {
    gt = read_image(job.source);
  } catch (const Error& e) {
    std::cerr << "warning: skipping " << job.source.string() << ": " << e.what() << "\n";
    return std::nullopt;
  }
  std::vector<double> evs = opt.ev_grid;
  if (opt.jitter) {
    // Per-scene stream so results do not depend on thread scheduling.
    std::mt19937_64 rng(opt.seed * 0x9e3779b97f4a7c15ULL + job.index + 1);
    for (double& ev : evs) {
      const double noise = (2.0 * unit_uniform(rng) - 1.0) * kJitterStops;
      if (ev != 0.0) ev = std::clamp(std::round((ev + noise) * 100.0) / 100.0, kMinEv, kMaxEv);
    }
  }
  ExposureSequence seq = synth_sequence(gt, evs, job.scene_id);
  const fs::path dir = opt.output_dir / job.scene_id;
  fs::create_directories(dir);
  ManifestScene scene;
  scene.scene_id = job.scene_id;
  scene.gt_ev = 0.0;
  for (const auto& frame : seq.frames) {
    const std::string file = ev_file_stem(frame.ev) + ".png";
    write_image(dir / file, frame.image);
    scene.evs.push_back(frame.ev);
    scene.frames.push_back(
        {frame.ev, job.scene_id + "/" + file, sha256_hex(read_file_bytes(dir / file))});
  }
  return scene;
}

}  // namespace

std::size_t Manifest::frame_count() const {
  std::size_t n = 0;
  for (const auto& s : scenes) n += s.frames.size();
  return n;
}

std::vector<double> parse_ev_grid(std::string_view text) {
  std::vector<double> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    std::string token(text.substr(start, comma - start));
    token.erase(0, token.find_first_not_of(" \t"));
    token.erase(token.find_last_not_of(" \t") + 1);
    if (!token.empty() && token[0] == '+') token.erase(0, 1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
      throw Error(ErrorKind::kUsage, "ev-grid", "cannot parse '" + token + "'");
    }
    if (value < kMinEv || value > kMaxEv) {
      throw Error(ErrorKind::kUsage, "ev-grid", token + " outside [-5, 5]");
    }
    grid.push_back(value);
    start = comma + 1;
  }
  if (std::find(grid.begin(), grid.end(), 0.0) == grid.end()) {
    throw Error(ErrorKind::kUsage, "ev-grid", "must contain 0");
  }
  return grid;
}

std::string ev_file_stem(double ev) {
  char buf[32];
  const double rounded = std::round(ev * 100.0) / 100.0;
  std::snprintf(buf, sizeof(buf), "ev%c%.2f", rounded < 0.0 ? '-' : '+', std::abs(rounded));
  return buf;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kIo, "sha256", "digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

Manifest synth_dataset(const SynthOptions& options) {
  if (!fs::is_directory(options.input_dir)) {
    throw Error(ErrorKind::kIo, options.input_dir.string(), "not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(options.input_dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<SceneJob> jobs;
  for (const auto& f : files) {
    jobs.push_back({f, f.stem().string(), jobs.size()});
  }
  fs::create_directories(options.output_dir);

  std::vector<std::optional<ManifestScene>> results(jobs.size());
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, jobs.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) results[i] = render_scene(jobs[i], options);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < jobs.size(); i += threads) {
          results[i] = render_scene(jobs[i], options);
        }
      });
    }
  }

  Manifest manifest;
  manifest.ev_grid = options.ev_grid;
  std::sort(manifest.ev_grid.begin(), manifest.ev_grid.end());
  manifest.jitter = options.jitter;
  manifest.seed = options.seed;
  for (auto& r : results) {
    if (r) manifest.scenes.push_back(std::move(*r));
  }
  if (manifest.scenes.empty()) {
    throw Error(ErrorKind::kIo, options.input_dir.string(), "no decodable images");
  }
  write_manifest(options.output_dir / "manifest.json", manifest);
  return manifest;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  json scenes = json::array();
  for (const auto& s : manifest.scenes) {
    json frames = json::array();
    json sums = json::array();
    for (const auto& f : s.frames) {
      frames.push_back({{"ev", f.ev}, {"file", f.file}, {"sha256", f.sha256}});
      sums.push_back(f.sha256);
    }
    scenes.push_back({{"scene_id", s.scene_id},
                      {"evs", s.evs},
                      {"gt_ev", s.gt_ev},
                      {"sha256", sums},
                      {"frames", frames}});
  }
  const json doc = {{"generator_version", manifest.generator_version},
                    {"ev_grid", manifest.ev_grid},
                    {"jitter", manifest.jitter},
                    {"seed", manifest.seed},
                    {"scenes", scenes}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, path.string(), "cannot write manifest");
  out << doc.dump(2) << "\n";
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, path.string(), "cannot open manifest");
  Manifest m;
  try {
    const json doc = json::parse(in);
    m.generator_version = doc.at("generator_version").get<std::string>();
    m.ev_grid = doc.at("ev_grid").get<std::vector<double>>();
    m.jitter = doc.value("jitter", false);
    m.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& s : doc.at("scenes")) {
      ManifestScene scene;
      scene.scene_id = s.at("scene_id").get<std::string>();
      scene.evs = s.at("evs").get<std::vector<double>>();
      scene.gt_ev = s.at("gt_ev").get<double>();
      for (const auto& f : s.at("frames")) {
        scene.frames.push_back({f.at("ev").get<double>(), f.at("file").get<std::string>(),
                                f.at("sha256").get<std::string>()});
      }
      m.scenes.push_back(std::move(scene));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string(), e.what());
  }
  return m;
}

fs::path resolve_manifest_path(const fs::path& path) {
  if (fs::is_directory(path)) return path / "manifest.json";
  return path;
}

std::vector<ExposureSequence> load_dataset(const fs::path& manifest_path) {
  const fs::path path = resolve_manifest_path(manifest_path);
  const Manifest m = read_manifest(path);
  const fs::path root = path.parent_path();
  std::vector<ExposureSequence> out;
  for (const auto& scene : m.scenes) {
    ExposureSequence seq;
    seq.scene_id = scene.scene_id;
    std::vector<ManifestFrame> frames = scene.frames;
    std::sort(frames.begin(), frames.end(),
              [](const ManifestFrame& a, const ManifestFrame& b) { return a.ev < b.ev; });
    bool found_gt = false;
    for (const auto& f : frames) {
      const auto bytes = read_file_bytes(root / f.file);
      if (sha256_hex(bytes) != f.sha256) {
        throw Error(ErrorKind::kFormat, f.file, "sha256 mismatch");
      }
      if (f.ev == scene.gt_ev) {
        seq.gt_index = seq.frames.size();
        found_gt = true;
      }
      seq.frames.push_back({f.ev, read_image(root / f.file)});
    }
    if (!found_gt) throw Error(ErrorKind::kFormat, scene.scene_id, "no frame at gt_ev");
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace uec
