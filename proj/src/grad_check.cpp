#include "uec/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace uec {
namespace {

struct Evaluation {
  double loss = 0.0;
  std::uint64_t signature = 0;
};

std::vector<double> projection_weights(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5deece66dULL);
  std::vector<double> w(n);
  for (auto& v : w) v = 2.0 * unit_uniform(rng) - 1.0;
  return w;
}

Evaluation evaluate_f64(const DiffOp& op,
                        const std::vector<BasicTensor<double>>& inputs,
                        std::uint64_t seed) {
  BasicTape<double> tape;
  tape.set_track_kinks(true);
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  Var out = op.f64(tape, vars);
  const auto& y = tape.value(out);
  double loss = 0.0;
  if (y.size() == 1) {
    loss = y[0];
  } else {
    const auto w = projection_weights(y.size(), seed);
    for (std::size_t i = 0; i < y.size(); ++i) loss += w[i] * y[i];
  }
  return {loss, tape.kink_signature()};
}

}  // namespace

GradCheckReport grad_check_at(const DiffOp& op, const std::vector<Tensor>& inputs,
                              const GradCheckOptions& options) {
  GradCheckReport report;
  report.name = op.name;

  std::vector<BasicTensor<double>> point;
  for (const auto& t : inputs) point.push_back(t.cast<double>());

  std::vector<std::vector<double>> analytic;
  if (options.analytic_f64) {
    BasicTape<double> tape;
    std::vector<Var> vars;
    for (const auto& t : point) vars.push_back(tape.parameter(t));
    Var loss = op.f64(tape, vars);
    if (tape.value(loss).size() != 1) {
      loss = ops::dot_const(tape, loss, projection_weights(tape.value(loss).size(), options.seed));
    }
    tape.backward(loss);
    for (Var v : vars) analytic.push_back(tape.gradient(v).data);
  } else {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.parameter(t));
    Var loss = op.f32(tape, vars);
    if (tape.value(loss).size() != 1) {
      const auto w = projection_weights(tape.value(loss).size(), options.seed);
      loss = ops::dot_const(tape, loss, std::vector<float>(w.begin(), w.end()));
    }
    tape.backward(loss);
    for (Var v : vars) {
      const auto g = tape.gradient(v);
      analytic.emplace_back(g.data.begin(), g.data.end());
    }
  }

  const Evaluation base = evaluate_f64(op, point, options.seed);
  // Central difference at `step`; nullopt when either side switched a branch.
  auto quotient = [&](std::size_t k, std::size_t i, double step) -> std::optional<double> {
    const double saved = point[k][i];
    point[k][i] = saved + step;
    const Evaluation plus = evaluate_f64(op, point, options.seed);
    point[k][i] = saved - step;
    const Evaluation minus = evaluate_f64(op, point, options.seed);
    point[k][i] = saved;
    if (plus.signature != base.signature || minus.signature != base.signature) {
      return std::nullopt;
    }
    return (plus.loss - minus.loss) / (2.0 * step);
  };

  struct Entry {
    std::size_t k, i;
    double analytic, numeric;
  };
  std::vector<Entry> entries;
  double scale = 0.0;
  for (std::size_t k = 0; k < point.size(); ++k) {
    for (std::size_t i = 0; i < point[k].size(); ++i) {
      const auto numeric = quotient(k, i, options.step);
      if (!numeric) {
        ++report.skipped;
        continue;
      }
      entries.push_back({k, i, analytic[k][i], *numeric});
      scale = std::max(scale, std::abs(*numeric));
    }
  }
  const double floor = std::max(1e-3 * scale, 1e-12);
  for (const Entry& e : entries) {
    const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric), floor});
    const double err = std::abs(e.analytic - e.numeric) / denom;
    if (err >= options.tolerance) {
      const auto half = quotient(e.k, e.i, 0.5 * options.step);
      if (!half || std::abs(*half - e.numeric) / denom > 0.5 * options.tolerance) {
        ++report.unconverged;
        continue;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, err);
    ++report.checked;
  }
  report.passed = report.checked > 0 && report.max_rel_error < options.tolerance;
  return report;
}

GradCheckReport grad_check(const DiffOp& op, const std::vector<InputSpec>& inputs,
                           const GradCheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<Tensor> values;
  for (const auto& spec : inputs) {
    Tensor t(spec.shape);
    for (auto& v : t.data) {
      do {
        v = static_cast<float>(spec.lo + (spec.hi - spec.lo) * unit_uniform(rng));
      } while (std::abs(v) < options.min_abs);
    }
    values.push_back(std::move(t));
  }
  return grad_check_at(op, values, options);
}

}  // namespace uec
