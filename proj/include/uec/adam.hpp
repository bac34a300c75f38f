#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uec/model.hpp"

namespace uec {

struct AdamState {
  std::uint64_t step = 0;
  std::vector<Tensor> m;  // first moments, parameter order
  std::vector<Tensor> v;  // second moments
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

using GradMap = std::map<std::string, Tensor>;

// One bias-corrected Adam update. Every parameter needs a gradient of matching
// shape; a missing one raises Error(kUsage) naming the tensor.
void adam_step(UecModel& model, const GradMap& grads, AdamState& state, double lr,
               const AdamHyper& hyper = {});

}  // namespace uec
