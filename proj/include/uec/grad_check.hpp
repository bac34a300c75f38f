#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uec/ops.hpp"
#include "uec/tape.hpp"

namespace uec {

// A differentiable function of its input vars, available in both the float
// (analytic) and double (finite-difference) instantiations. Non-scalar
// outputs are projected onto fixed random weights before differentiation.
struct DiffOp {
  std::string name;
  std::function<Var(Tape&, std::span<const Var>)> f32;
  std::function<Var(BasicTape<double>&, std::span<const Var>)> f64;
};

template <typename F>
DiffOp make_diff_op(std::string name, F f) {
  return DiffOp{std::move(name), f, f};
}

struct InputSpec {
  Shape shape;
  double lo = -1.0;
  double hi = 1.0;
};

struct GradCheckOptions {
  double step = 1e-3;
  double tolerance = 1e-3;
  // Values closer than this to zero are redrawn so ReLU/max inputs sit away
  // from their kinks.
  double min_abs = 1e-3;
  std::uint64_t seed = 0;
  // Take the analytic gradient from the double tape as well. Deep graphs
  // with small gradients otherwise hit float round-off before the tolerance.
  bool analytic_f64 = false;
};

struct GradCheckReport {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Elements whose +-step perturbation switched a relu/clip/max branch.
  std::size_t skipped = 0;
  // Elements where the difference quotient itself had not converged at the
  // step (|D(h) - D(h/2)| comparable to the tolerance); excluded from the max.
  std::size_t unconverged = 0;
  bool passed = false;
};

// Uniform double in [0,1) from the top 53 bits; portable across standard
// libraries, unlike std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Compares the float reverse-mode gradient against double-precision central
// differences. Relative error per element is |a - n| / max(|a|, |n|, floor),
// where floor = 1e-3 * max|n| keeps near-zero entries from dominating.
// Elements that miss the tolerance are re-differenced at half the step; if
// the two quotients disagree by more than half the tolerance the element is
// counted as unconverged instead.
GradCheckReport grad_check(const DiffOp& op, const std::vector<InputSpec>& inputs,
                           const GradCheckOptions& options);

// Same comparison with caller-provided input values (e.g. trained weights).
GradCheckReport grad_check_at(const DiffOp& op, const std::vector<Tensor>& inputs,
                              const GradCheckOptions& options);

}  // namespace uec
