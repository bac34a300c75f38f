#pragma once

// Exposure feature encoder, exposure-difference / lambda predictor and the
// three-stage pixel-wise corrector.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "uec/image.hpp"
#include "uec/ops.hpp"
#include "uec/tape.hpp"

namespace uec {

inline constexpr std::size_t kFeatureSize = 96;
inline constexpr std::size_t kCorrectorStages = 3;
inline constexpr std::size_t kThumbnailSide = 256;
inline constexpr float kLambdaLo = -1.0f;
inline constexpr float kLambdaHi = 2.0f;
inline constexpr const char* kModelVersion = "uec/1";

struct ExposureFeature {
  std::array<float, kFeatureSize> values{};
  friend bool operator==(const ExposureFeature&, const ExposureFeature&) = default;
};

using Lambdas = std::array<float, kCorrectorStages>;

enum ParamId : std::size_t {
  kEncConv1W,
  kEncConv1B,
  kEncConv2W,
  kEncConv2B,
  kDiffW,
  kDiffB,
  kHeadW,
  kHeadB,
  kLambda1W,
  kLambda1B,
  kLambda2W,
  kLambda2B,
  kStage1Conv1W,  // per stage: conv1.W, conv1.b, conv2.W, conv2.b
  kParamCount = kStage1Conv1W + 4 * kCorrectorStages,
};

inline constexpr std::size_t stage_param(std::size_t stage, std::size_t which) {
  return kStage1Conv1W + 4 * stage + which;
}

struct ParamSpec {
  std::string name;
  Shape shape;
};

// Declared tensor names and shapes in checkpoint order.
const std::vector<ParamSpec>& architecture();

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct UecModel {
  std::vector<NamedTensor> params;
  std::string version = kModelVersion;

  // Declared architecture with the identity-start initialization: Xavier
  // uniform weights, zero biases, zero lambda output weights and lambda
  // output bias logit(2/3) so every lambda starts at 1.
  static UecModel create(std::uint64_t seed);

  const Tensor& operator[](std::size_t id) const { return params.at(id).value; }
  Tensor& operator[](std::size_t id) { return params.at(id).value; }

  const Tensor& at(std::string_view name) const;
};

std::size_t param_count(const UecModel& model);

// logit((1 - lo) / (hi - lo)): the pre-sigmoid value that maps to lambda = 1.
inline float identity_lambda_logit() {
  const double p = (1.0 - kLambdaLo) / (static_cast<double>(kLambdaHi) - kLambdaLo);
  return static_cast<float>(std::log(p / (1.0 - p)));
}

// Model parameters as tape leaves.
struct BoundModel {
  std::vector<Var> vars;
  Var operator[](std::size_t id) const { return vars.at(id); }
};

template <typename T>
BoundModel bind(BasicTape<T>& tape, const UecModel& model, bool trainable) {
  BoundModel bound;
  for (const auto& p : model.params) {
    auto t = p.value.template cast<T>();
    bound.vars.push_back(trainable ? tape.parameter(std::move(t))
                                   : tape.constant(std::move(t)));
  }
  return bound;
}

// image: [3,H,W] (already thumbnailed) -> [96].
template <typename T>
Var encode(BasicTape<T>& tape, const BoundModel& m, Var image) {
  Var x = ops::relu(tape, ops::conv2d(tape, image, m[kEncConv1W], m[kEncConv1B], 2, 1));
  x = ops::relu(tape, ops::conv2d(tape, x, m[kEncConv2W], m[kEncConv2B], 2, 1));
  return ops::global_stat_pool(tape, x);
}

// [96], [96] -> [1]: head(relu(diff(e_ref - e_in))).
template <typename T>
Var predict_delta(BasicTape<T>& tape, const BoundModel& m, Var e_in, Var e_ref) {
  Var d = ops::sub(tape, e_ref, e_in);
  d = ops::relu(tape, ops::affine(tape, d, m[kDiffW], m[kDiffB]));
  return ops::affine(tape, d, m[kHeadW], m[kHeadB]);
}

// [1] -> [3], each lambda in (lo, hi).
template <typename T>
Var predict_lambdas(BasicTape<T>& tape, const BoundModel& m, Var delta) {
  Var h = ops::relu(tape, ops::affine(tape, delta, m[kLambda1W], m[kLambda1B]));
  Var z = ops::affine(tape, h, m[kLambda2W], m[kLambda2B]);
  return ops::scale_shift(tape, ops::sigmoid(tape, z), static_cast<T>(kLambdaHi - kLambdaLo),
                          static_cast<T>(kLambdaLo));
}

// [3,H,W] -> [3,H,W]; x_i = clip(l_i x_{i-1} + (1 - l_i) h_i(x_{i-1})).
template <typename T>
Var correct(BasicTape<T>& tape, const BoundModel& m, Var lambdas, Var image) {
  Var x = image;
  for (std::size_t s = 0; s < kCorrectorStages; ++s) {
    Var h = ops::relu(tape, ops::conv2d(tape, x, m[stage_param(s, 0)], m[stage_param(s, 1)], 1, 0));
    h = ops::conv2d(tape, h, m[stage_param(s, 2)], m[stage_param(s, 3)], 1, 0);
    x = ops::clip01(tape, ops::blend(tape, lambdas, s, x, h));
  }
  return x;
}

// Inference entry points (frozen parameters, no gradients). Pure and safe to
// call concurrently on a shared model.
ExposureFeature encode(const UecModel& model, const ImageF32& img);
float predict_delta(const UecModel& model, const ExposureFeature& e_in,
                    const ExposureFeature& e_ref);
Lambdas predict_lambdas(const UecModel& model, float delta);
// Strictly per-pixel; never resamples the input.
ImageF32 correct(const ImageF32& img, const Lambdas& lambdas, const UecModel& model);
ImageF32 apply(const ImageF32& input, const ExposureFeature& ref_feature,
               const UecModel& model);

}  // namespace uec
