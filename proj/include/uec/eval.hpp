#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uec/isp.hpp"
#include "uec/metrics.hpp"
#include "uec/model.hpp"

namespace uec {

struct MetricSet {
  bool psnr = true;
  bool ssim = true;
  bool edge = true;

  // "psnr,ssim,edge"; unknown names raise Error(kUsage).
  static MetricSet parse(std::string_view text);
};

// Disabled metrics are NaN (null in JSON).
struct ImageScores {
  std::string scene;
  double input_ev = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double edge_psnr_db = 0.0;
  double edge_f1 = 0.0;
};

ImageScores score(const ImageF32& out, const ImageF32& gt, const MetricSet& metrics);

struct EvRow {
  double input_ev = 0.0;
  std::size_t count = 0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double edge_psnr_db = 0.0;
  double edge_f1 = 0.0;
};

struct SweepRow {
  std::string scene;
  double input_ev = 0.0;
  double ref_ev = 0.0;
  double mean_luminance = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double edge_f1 = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::vector<double> ref_evs;
  // Mean output luminance over all inputs, one entry per reference EV.
  std::vector<double> mean_luminance_by_ref;
  std::size_t inputs = 0;
  std::size_t monotone_inputs = 0;
  double monotone_fraction = 0.0;
};

struct TimingStats {
  std::size_t height = 0;
  std::size_t width = 0;
  int iterations = 0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double megapixels_per_s = 0.0;
};

struct EvalReport {
  std::vector<ImageScores> per_image;
  ImageScores aggregate;
  std::vector<EvRow> per_ev;
  std::optional<SweepTable> sweep;
  std::optional<TimingStats> timing;
  std::string reference;

  nlohmann::json to_json() const;
};

// Corrects every non-GT frame against `ref_feature` and scores it against the
// scene's GT frame. Aggregates are plain means of the per-image values.
EvalReport evaluate(const UecModel& model, const ExposureFeature& ref_feature,
                    const std::vector<ExposureSequence>& dataset, const MetricSet& metrics);

// Applies the model to every frame of every test sequence once per reference
// frame (ascending EV) and counts inputs whose mean output luminance never
// decreases as the reference EV grows.
SweepTable ev_sweep_audit(const UecModel& model, const std::vector<ExposureSequence>& tests,
                          const ExposureSequence& reference);

void write_sweep_csv(const std::filesystem::path& path, const SweepTable& table);

// Median / p95 wall time of apply() with a cached reference feature, after
// three warmup runs. Measures apply() only.
TimingStats bench(const UecModel& model, std::size_t height, std::size_t width,
                  int iterations, std::uint64_t seed = 0);

}  // namespace uec
