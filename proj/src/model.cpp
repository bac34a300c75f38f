#include "uec/model.hpp"

#include <algorithm>
#include <random>

#include "uec/error.hpp"

namespace uec {
namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void xavier_uniform(Tensor& t, std::mt19937_64& rng) {
  std::size_t receptive = 1;
  for (std::size_t i = 2; i < t.rank(); ++i) receptive *= t.dim(i);
  const double fan_out = static_cast<double>(t.dim(0) * receptive);
  const double fan_in = static_cast<double>(t.dim(1) * receptive);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (float& v : t.data) v = static_cast<float>((2.0 * unit_uniform(rng) - 1.0) * bound);
}

}  // namespace

const std::vector<ParamSpec>& architecture() {
  static const std::vector<ParamSpec> specs = [] {
    std::vector<ParamSpec> s = {
        {"encoder.conv1.weight", {16, 3, 3, 3}},
        {"encoder.conv1.bias", {16}},
        {"encoder.conv2.weight", {32, 16, 3, 3}},
        {"encoder.conv2.bias", {32}},
        {"predictor.diff.weight", {32, kFeatureSize}},
        {"predictor.diff.bias", {32}},
        {"predictor.head.weight", {1, 32}},
        {"predictor.head.bias", {1}},
        {"predictor.lambda1.weight", {16, 1}},
        {"predictor.lambda1.bias", {16}},
        {"predictor.lambda2.weight", {kCorrectorStages, 16}},
        {"predictor.lambda2.bias", {kCorrectorStages}},
    };
    for (std::size_t i = 1; i <= kCorrectorStages; ++i) {
      const std::string p = "corrector.h" + std::to_string(i);
      s.push_back({p + ".conv1.weight", {8, 3, 1, 1}});
      s.push_back({p + ".conv1.bias", {8}});
      s.push_back({p + ".conv2.weight", {3, 8, 1, 1}});
      s.push_back({p + ".conv2.bias", {3}});
    }
    return s;
  }();
  return specs;
}

UecModel UecModel::create(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  UecModel m;
  for (const auto& spec : architecture()) {
    Tensor t(spec.shape);
    if (spec.shape.size() >= 2) xavier_uniform(t, rng);
    m.params.push_back({spec.name, std::move(t)});
  }
  std::fill(m[kLambda2W].data.begin(), m[kLambda2W].data.end(), 0.0f);
  std::fill(m[kLambda2B].data.begin(), m[kLambda2B].data.end(), identity_lambda_logit());
  return m;
}

const Tensor& UecModel::at(std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return p.value;
  }
  throw Error(ErrorKind::kUsage, std::string(name), "no such parameter");
}

std::size_t param_count(const UecModel& model) {
  std::size_t n = 0;
  for (const auto& p : model.params) n += numel(p.value.shape);
  return n;
}

ExposureFeature encode(const UecModel& model, const ImageF32& img) {
  Tape tape;
  const BoundModel m = bind(tape, model, false);
  Var x = tape.constant(to_chw(thumbnail(img, kThumbnailSide)));
  const auto& out = tape.value(encode(tape, m, x));
  ExposureFeature f;
  std::copy(out.data.begin(), out.data.end(), f.values.begin());
  return f;
}

float predict_delta(const UecModel& model, const ExposureFeature& e_in,
                    const ExposureFeature& e_ref) {
  Tape tape;
  const BoundModel m = bind(tape, model, false);
  Var a = tape.constant(Tensor({kFeatureSize}, {e_in.values.begin(), e_in.values.end()}));
  Var b = tape.constant(Tensor({kFeatureSize}, {e_ref.values.begin(), e_ref.values.end()}));
  return tape.value(predict_delta(tape, m, a, b))[0];
}

Lambdas predict_lambdas(const UecModel& model, float delta) {
  Tape tape;
  const BoundModel m = bind(tape, model, false);
  Var d = tape.constant(Tensor({1}, std::vector<float>{delta}));
  const auto& out = tape.value(predict_lambdas(tape, m, d));
  return {out[0], out[1], out[2]};
}

ImageF32 correct(const ImageF32& img, const Lambdas& lambdas, const UecModel& model) {
  struct Stage {
    float w1[8][3], b1[8], w2[3][8], b2[3];
  };
  std::array<Stage, kCorrectorStages> stages{};
  for (std::size_t s = 0; s < kCorrectorStages; ++s) {
    const Tensor& w1 = model[stage_param(s, 0)];
    const Tensor& b1 = model[stage_param(s, 1)];
    const Tensor& w2 = model[stage_param(s, 2)];
    const Tensor& b2 = model[stage_param(s, 3)];
    for (std::size_t o = 0; o < 8; ++o) {
      stages[s].b1[o] = b1[o];
      for (std::size_t c = 0; c < 3; ++c) stages[s].w1[o][c] = w1[o * 3 + c];
    }
    for (std::size_t o = 0; o < 3; ++o) {
      stages[s].b2[o] = b2[o];
      for (std::size_t c = 0; c < 8; ++c) stages[s].w2[o][c] = w2[o * 8 + c];
    }
  }

  ImageF32 out = img;
  float* px = out.data().data();
  const std::size_t n = out.pixel_count();
  for (std::size_t p = 0; p < n; ++p, px += 3) {
    float x[3] = {px[0], px[1], px[2]};
    for (std::size_t s = 0; s < kCorrectorStages; ++s) {
      const Stage& st = stages[s];
      float hidden[8];
      for (std::size_t o = 0; o < 8; ++o) {
        float acc = st.b1[o];
        for (std::size_t c = 0; c < 3; ++c) acc += st.w1[o][c] * x[c];
        hidden[o] = acc > 0.0f ? acc : 0.0f;
      }
      const float lam = lambdas[s];
      for (std::size_t o = 0; o < 3; ++o) {
        float h = st.b2[o];
        for (std::size_t c = 0; c < 8; ++c) h += st.w2[o][c] * hidden[c];
        x[o] = lam * x[o] + (1.0f - lam) * h;
      }
      for (float& v : x) v = std::clamp(v, 0.0f, 1.0f);
    }
    px[0] = x[0];
    px[1] = x[1];
    px[2] = x[2];
  }
  return out;
}

ImageF32 apply(const ImageF32& input, const ExposureFeature& ref_feature,
               const UecModel& model) {
  const ExposureFeature e_in = encode(model, input);
  const float delta = predict_delta(model, e_in, ref_feature);
  return correct(input, predict_lambdas(model, delta), model);
}

}  // namespace uec
