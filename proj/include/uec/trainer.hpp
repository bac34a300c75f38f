#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "uec/adam.hpp"
#include "uec/losses.hpp"
#include "uec/model.hpp"
#include "uec/sampler.hpp"
#include "uec/train_config.hpp"

namespace uec {

struct LossVars {
  Var restoration;
  Var monopoly;
  Var semantic;
  Var total;
};

// Forward pass of one step. Pretext pairs feed the restoration loss, real
// triples are corrected once per reference and feed the monopoly loss, and
// the semantic loss averages over every generated output.
template <typename T>
LossVars build_losses(BasicTape<T>& tape, const BoundModel& m, const Batch& batch,
                      const LossWeights& weights) {
  auto image = [&](const ImageF32& img) {
    return tape.constant(to_chw(img).template cast<T>());
  };
  std::vector<Var> rest, mono, sem;
  for (const auto& pair : batch.pairs) {
    Var input = image(pair.input);
    Var ref = image(pair.ref);
    Var delta = predict_delta(tape, m, encode(tape, m, input), encode(tape, m, ref));
    Var out = correct(tape, m, predict_lambdas(tape, m, delta), input);
    rest.push_back(loss_restoration(tape, out, ref));
    sem.push_back(loss_semantic(tape, out));
  }
  for (const auto& triple : batch.triples) {
    Var input = image(triple.input);
    Var e_in = encode(tape, m, input);
    Var e_hi = encode(tape, m, image(triple.ref_hi));
    Var e_lo = encode(tape, m, image(triple.ref_lo));
    Var out_hi = correct(tape, m, predict_lambdas(tape, m, predict_delta(tape, m, e_in, e_hi)), input);
    Var out_lo = correct(tape, m, predict_lambdas(tape, m, predict_delta(tape, m, e_in, e_lo)), input);
    mono.push_back(loss_monopoly(tape, out_hi, out_lo));
    sem.push_back(loss_semantic(tape, out_hi));
    sem.push_back(loss_semantic(tape, out_lo));
  }
  LossVars out;
  out.restoration = ops::mean(tape, rest);
  out.monopoly = ops::mean(tape, mono);
  out.semantic = ops::mean(tape, sem);
  out.total = ops::linear_combination(tape, {out.restoration, out.monopoly, out.semantic},
                                      {weights.alpha1, weights.alpha2, weights.alpha3});
  return out;
}

struct StepRecord {
  std::uint64_t step = 0;
  double l_rest = 0.0;
  double l_mono = 0.0;
  double l_sem = 0.0;
  double l_total = 0.0;
  double wall_ms = 0.0;

  nlohmann::json to_json() const;
};

struct TrainSession {
  UecModel model;
  AdamState adam;
};

// Raised when a step produces a non-finite loss; a JSON dump of the batch is
// written next to the checkpoint first.
class TrainingAborted : public Error {
 public:
  using Error::Error;
};

// Samples the batch for step `session.adam.step`, backpropagates and applies
// Adam. `dump_path` receives the diagnostic dump if the loss is non-finite.
StepRecord train_step(TrainSession& session, const std::vector<ExposureSequence>& dataset,
                      const TrainConfig& config,
                      const std::filesystem::path& dump_path = {});

struct TrainOptions {
  std::filesystem::path checkpoint;  // final model; optimizer state at <checkpoint>.state
  std::filesystem::path log;         // JSON lines, appended
  std::optional<std::filesystem::path> resume;
  std::function<void(const StepRecord&)> on_step;
};

// Runs until config.steps optimizer steps have been taken in total (a resumed
// session counts its earlier steps).
TrainSession train(const std::vector<ExposureSequence>& dataset, const TrainConfig& config,
                   const TrainOptions& options);

std::filesystem::path state_path(const std::filesystem::path& checkpoint);
void save_session(const TrainSession& session, const std::filesystem::path& checkpoint);
TrainSession load_session(const std::filesystem::path& checkpoint);

}  // namespace uec
