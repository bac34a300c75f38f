#include "uec/adam.hpp"

#include <cmath>

#include "uec/error.hpp"

namespace uec {

void adam_step(UecModel& model, const GradMap& grads, AdamState& state, double lr,
               const AdamHyper& hyper) {
  for (const auto& p : model.params) {
    const auto it = grads.find(p.name);
    if (it == grads.end()) throw Error(ErrorKind::kUsage, p.name, "missing gradient");
    if (it->second.shape != p.value.shape) {
      throw Error(ErrorKind::kShape, p.name, "gradient shape " + to_string(it->second.shape) +
                                                 " != " + to_string(p.value.shape));
    }
  }
  if (state.m.empty()) {
    for (const auto& p : model.params) {
      state.m.emplace_back(p.value.shape);
      state.v.emplace_back(p.value.shape);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t k = 0; k < model.params.size(); ++k) {
    Tensor& w = model.params[k].value;
    const Tensor& g = grads.at(model.params[k].name);
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double mi = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * gi;
      const double vi = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + hyper.eps);
      w[i] = static_cast<float>(w[i] - update);
    }
  }
}

}  // namespace uec
