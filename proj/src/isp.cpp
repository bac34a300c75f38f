#include "uec/isp.hpp"

#include <algorithm>
#include <cmath>

#include "uec/error.hpp"

namespace uec {
namespace {

void require_unit(float v, const char* what) {
  if (!(v >= 0.0f && v <= 1.0f)) {
    throw Error(ErrorKind::kRange, what, "value " + std::to_string(v) + " outside [0,1]");
  }
}

}  // namespace

float srgb_to_linear(float v) {
  require_unit(v, "srgb_to_linear");
  const double x = v;
  const double y = x <= 0.04045 ? x / 12.92 : std::pow((x + 0.055) / 1.055, 2.4);
  return static_cast<float>(y);
}

float linear_to_srgb(float v) {
  require_unit(v, "linear_to_srgb");
  const double x = v;
  const double y = x <= 0.0031308 ? x * 12.92 : 1.055 * std::pow(x, 1.0 / 2.4) - 0.055;
  return static_cast<float>(std::clamp(y, 0.0, 1.0));
}

ImageF32 srgb_to_linear(const ImageF32& img) {
  ImageF32 out = img;
  for (float& v : out.data()) v = srgb_to_linear(v);
  return out;
}

ImageF32 linear_to_srgb(const ImageF32& img) {
  ImageF32 out = img;
  for (float& v : out.data()) v = linear_to_srgb(v);
  return out;
}

ImageF32 apply_ev(const ImageF32& linear, double ev) {
  if (!(ev >= kMinEv && ev <= kMaxEv)) {
    throw Error(ErrorKind::kRange, "ev", std::to_string(ev) + " outside [-5, 5]");
  }
  ImageF32 out = linear;
  if (ev == 0.0) return out;
  const double gain = std::exp2(ev);
  for (float& v : out.data()) {
    v = static_cast<float>(std::clamp(static_cast<double>(v) * gain, 0.0, 1.0));
  }
  return out;
}

std::vector<double> default_ev_grid() { return {-2.0, -1.0, 0.0, 1.0, 2.0, 3.0}; }

ExposureSequence synth_sequence(const ImageF32& gt, std::span<const double> ev_grid,
                                std::string scene_id) {
  if (ev_grid.empty()) throw Error(ErrorKind::kUsage, "ev_grid", "empty");
  std::vector<double> evs(ev_grid.begin(), ev_grid.end());
  std::sort(evs.begin(), evs.end());
  if (std::adjacent_find(evs.begin(), evs.end()) != evs.end()) {
    throw Error(ErrorKind::kUsage, "ev_grid", "duplicate EV");
  }
  const auto zero = std::find(evs.begin(), evs.end(), 0.0);
  if (zero == evs.end()) throw Error(ErrorKind::kUsage, "ev_grid", "must contain 0");

  const ImageF32 linear = srgb_to_linear(gt);
  ExposureSequence seq;
  seq.scene_id = std::move(scene_id);
  seq.gt_index = static_cast<std::size_t>(zero - evs.begin());
  for (double ev : evs) {
    seq.frames.push_back({ev, linear_to_srgb(apply_ev(linear, ev))});
  }
  return seq;
}

MonotonicityReport verify_monotonicity(const ExposureSequence& seq, double slack) {
  MonotonicityReport report;
  report.slack = slack;
  for (std::size_t f = 1; f < seq.frames.size(); ++f) {
    const ExposureFrame& lo = seq.frames[f - 1];
    const ExposureFrame& hi = seq.frames[f];
    if (lo.image.height() != hi.image.height() || lo.image.width() != hi.image.width()) {
      throw Error(ErrorKind::kShape, "frames", "frames differ in size");
    }
    // Frames are expected sorted; compare by EV so the order of the vector
    // does not matter.
    const auto& darker = lo.ev <= hi.ev ? lo.image : hi.image;
    const auto& brighter = lo.ev <= hi.ev ? hi.image : lo.image;
    for (std::size_t i = 0; i < darker.data().size(); ++i) {
      const double v = static_cast<double>(darker.data()[i]) - brighter.data()[i];
      if (v > 0.0) {
        ++report.violating_values;
        report.max_violation = std::max(report.max_violation, v);
        if (v > slack) ++report.beyond_slack;
      }
    }
  }
  report.passed = report.beyond_slack == 0;
  return report;
}

}  // namespace uec
