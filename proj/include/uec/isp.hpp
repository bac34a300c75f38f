#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "uec/image.hpp"

namespace uec {

// IEC 61966-2-1 piecewise sRGB transfer curve.
float srgb_to_linear(float v);
float linear_to_srgb(float v);

// Both throw Error(kRange) on values outside [0,1].
ImageF32 srgb_to_linear(const ImageF32& img);
ImageF32 linear_to_srgb(const ImageF32& img);

inline constexpr double kMinEv = -5.0;
inline constexpr double kMaxEv = 5.0;

// clip(img * 2^ev, 0, 1) on linear-light values. ev must lie in [-5, 5].
ImageF32 apply_ev(const ImageF32& linear, double ev);

struct ExposureFrame {
  double ev = 0.0;
  ImageF32 image;
};

// One scene rendered at several exposures, sorted ascending by ev.
struct ExposureSequence {
  std::string scene_id;
  std::vector<ExposureFrame> frames;
  std::size_t gt_index = 0;

  const ImageF32& gt() const { return frames.at(gt_index).image; }
};

std::vector<double> default_ev_grid();

// Re-renders a well-exposed sRGB image at each EV of the grid by gain in
// linear light, leaving every other stage untouched. The grid must contain 0.
ExposureSequence synth_sequence(const ImageF32& gt, std::span<const double> ev_grid,
                                std::string scene_id = {});

struct MonotonicityReport {
  // Largest (darker-frame minus brighter-frame) value over adjacent EV pairs.
  double max_violation = 0.0;
  // Channel values where the brighter frame is strictly darker.
  std::size_t violating_values = 0;
  // Violations larger than the slack.
  std::size_t beyond_slack = 0;
  double slack = 0.0;
  bool passed = true;
};

inline constexpr double kQuantizationSlack = 1.0 / 255.0;

MonotonicityReport verify_monotonicity(const ExposureSequence& seq,
                                       double slack = kQuantizationSlack);

}  // namespace uec
