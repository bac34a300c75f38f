#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uec/grad_check.hpp"

namespace uec {

struct GradSuiteOptions {
  int seeds = 10;
  std::uint64_t base_seed = 1;
  double tolerance = 1e-3;
  // Test fixture: scales the conv2d backward by 1.5 so the suite must fail.
  bool corrupt_conv_backward = false;
};

// Worst case over all seeds, one report per op (plus the end-to-end model on
// 8x8 images through the full training loss).
std::vector<GradCheckReport> run_gradcheck_suite(const GradSuiteOptions& options);

}  // namespace uec
