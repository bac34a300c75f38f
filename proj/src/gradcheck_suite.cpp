#include "uec/gradcheck_suite.hpp"

#include <algorithm>
#include <random>

#include "uec/losses.hpp"
#include "uec/model.hpp"
#include "uec/ops.hpp"
#include "uec/sampler.hpp"
#include "uec/trainer.hpp"

namespace uec {
namespace {

// Identity forward whose backward multiplies the incoming gradient.
Var scale_backward(Tape& tape, Var x, float factor) {
  Tensor v = tape.value(x);
  return tape.record(std::move(v), {x}, [=](Tape& t, std::span<const float> grad) {
    auto gx = t.grad_mut(x);
    for (std::size_t i = 0; i < grad.size(); ++i) gx[i] += factor * grad[i];
  });
}

DiffOp conv_op(std::string name, int stride, int padding, bool corrupt) {
  DiffOp op = make_diff_op(std::move(name), [=](auto& t, std::span<const Var> in) {
    return ops::conv2d(t, in[0], in[1], in[2], stride, padding);
  });
  if (corrupt) {
    op.f32 = [=](Tape& t, std::span<const Var> in) {
      return scale_backward(t, ops::conv2d(t, in[0], in[1], in[2], stride, padding), 1.5f);
    };
  }
  return op;
}

ImageF32 random_image(std::mt19937_64& rng, std::size_t h, std::size_t w) {
  ImageF32 img(h, w);
  for (float& v : img.data()) v = static_cast<float>(0.05 + 0.9 * unit_uniform(rng));
  return img;
}

// Untrained models sit exactly at the monopoly kink (both references give
// the same lambdas), so the end-to-end check perturbs every parameter.
UecModel random_model(std::uint64_t seed) {
  UecModel m = UecModel::create(seed);
  std::mt19937_64 rng(seed ^ 0xabcdefULL);
  for (std::size_t k = 0; k < m.params.size(); ++k) {
    Tensor& t = m.params[k].value;
    const bool bias = t.rank() == 1;
    for (float& v : t.data) {
      if (bias || k == kLambda2W) v += static_cast<float>(0.2 * (2.0 * unit_uniform(rng) - 1.0));
    }
  }
  return m;
}

GradCheckReport end_to_end(std::uint64_t seed, double tolerance) {
  std::mt19937_64 rng(seed);
  Batch batch;
  batch.pairs.push_back({random_image(rng, 8, 8), random_image(rng, 8, 8), 0, -1.0, 1.0});
  batch.triples.push_back({random_image(rng, 8, 8), random_image(rng, 8, 8),
                           random_image(rng, 8, 8), 0, 1, 0.0, 1.0, -1.0});
  const UecModel model = random_model(seed);
  std::vector<Tensor> params;
  for (const auto& p : model.params) params.push_back(p.value);
  const LossWeights weights{};
  DiffOp op = make_diff_op("uec_end_to_end_8x8", [batch, weights](auto& t, std::span<const Var> in) {
    BoundModel bound;
    bound.vars.assign(in.begin(), in.end());
    return build_losses(t, bound, batch, weights).total;
  });
  GradCheckOptions opt;
  opt.seed = seed;
  opt.tolerance = tolerance;
  opt.analytic_f64 = true;
  return grad_check_at(op, params, opt);
}

void merge(GradCheckReport& into, const GradCheckReport& r) {
  into.max_rel_error = std::max(into.max_rel_error, r.max_rel_error);
  into.checked += r.checked;
  into.skipped += r.skipped;
  into.unconverged += r.unconverged;
  into.passed = into.passed && r.passed;
}

}  // namespace

std::vector<GradCheckReport> run_gradcheck_suite(const GradSuiteOptions& options) {
  struct Case {
    DiffOp op;
    std::vector<InputSpec> inputs;
  };
  const bool bad = options.corrupt_conv_backward;
  std::vector<Case> cases;
  cases.push_back({conv_op("conv2d_3x3_s1", 1, 1, bad), {{{3, 6, 6}}, {{4, 3, 3, 3}}, {{4}}}});
  cases.push_back({conv_op("conv2d_3x3_s2", 2, 1, bad), {{{3, 7, 7}}, {{5, 3, 3, 3}}, {{5}}}});
  cases.push_back({conv_op("conv2d_1x1", 1, 0, bad), {{{3, 4, 5}}, {{8, 3, 1, 1}}, {{8}}}});
  cases.push_back({make_diff_op("relu", [](auto& t, std::span<const Var> in) {
                     return ops::relu(t, in[0]);
                   }), {{{4, 5}}}});
  cases.push_back({make_diff_op("sigmoid", [](auto& t, std::span<const Var> in) {
                     return ops::sigmoid(t, in[0]);
                   }), {{{4, 5}, -4.0, 4.0}}});
  cases.push_back({make_diff_op("affine", [](auto& t, std::span<const Var> in) {
                     return ops::affine(t, in[0], in[1], in[2]);
                   }), {{{6}}, {{4, 6}}, {{4}}}});
  cases.push_back({make_diff_op("global_stat_pool", [](auto& t, std::span<const Var> in) {
                     return ops::global_stat_pool(t, in[0]);
                   }), {{{3, 4, 4}}}});
  cases.push_back({make_diff_op("blend", [](auto& t, std::span<const Var> in) {
                     return ops::blend(t, in[0], 1, in[1], in[2]);
                   }), {{{3}, -1.0, 2.0}, {{3, 3, 3}}, {{3, 3, 3}}}});
  cases.push_back({make_diff_op("clip01", [](auto& t, std::span<const Var> in) {
                     return ops::clip01(t, in[0]);
                   }), {{{3, 4, 4}, -0.5, 1.5}}});
  cases.push_back({make_diff_op("loss_restoration", [](auto& t, std::span<const Var> in) {
                     return loss_restoration(t, in[0], in[1]);
                   }), {{{3, 4, 4}, 0.0, 1.0}, {{3, 4, 4}, 0.0, 1.0}}});
  cases.push_back({make_diff_op("loss_monopoly", [](auto& t, std::span<const Var> in) {
                     return loss_monopoly(t, in[0], in[1]);
                   }), {{{3, 4, 4}, 0.0, 1.0}, {{3, 4, 4}, 0.0, 1.0}}});
  cases.push_back({make_diff_op("loss_semantic", [](auto& t, std::span<const Var> in) {
                     return loss_semantic(t, in[0]);
                   }), {{{3, 4, 5}, 0.0, 1.0}}});

  std::vector<GradCheckReport> reports;
  for (const auto& c : cases) {
    GradCheckReport total;
    total.name = c.op.name;
    total.passed = true;
    for (int s = 0; s < options.seeds; ++s) {
      GradCheckOptions opt;
      opt.seed = options.base_seed + static_cast<std::uint64_t>(s);
      opt.tolerance = options.tolerance;
      merge(total, grad_check(c.op, c.inputs, opt));
    }
    reports.push_back(total);
  }
  GradCheckReport e2e;
  e2e.name = "uec_end_to_end_8x8";
  e2e.passed = true;
  for (int s = 0; s < options.seeds; ++s) {
    merge(e2e, end_to_end(options.base_seed + static_cast<std::uint64_t>(s), options.tolerance));
  }
  reports.push_back(e2e);
  return reports;
}

}  // namespace uec
