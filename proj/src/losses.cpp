#include "uec/losses.hpp"

#include <cmath>

namespace uec {
namespace {

template <typename F>
double evaluate(F&& f) {
  Tape tape;
  return tape.value(f(tape))[0];
}

}  // namespace

double loss_restoration(const ImageF32& out, const ImageF32& ref) {
  return evaluate([&](Tape& t) {
    return loss_restoration(t, t.constant(to_chw(out)), t.constant(to_chw(ref)));
  });
}

double loss_monopoly(const ImageF32& out_hi, const ImageF32& out_lo) {
  return evaluate([&](Tape& t) {
    return loss_monopoly(t, t.constant(to_chw(out_hi)), t.constant(to_chw(out_lo)));
  });
}

double loss_semantic(const ImageF32& out) {
  return evaluate([&](Tape& t) { return loss_semantic(t, t.constant(to_chw(out))); });
}

double total_loss(const LossParts& parts, const LossWeights& weights) {
  if (!std::isfinite(parts.restoration) || !std::isfinite(parts.monopoly) ||
      !std::isfinite(parts.semantic)) {
    throw Error(ErrorKind::kNumeric, "loss", "non-finite loss component");
  }
  return weights.alpha1 * parts.restoration + weights.alpha2 * parts.monopoly +
         weights.alpha3 * parts.semantic;
}

}  // namespace uec
