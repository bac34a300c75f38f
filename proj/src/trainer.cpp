#include "uec/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "uec/checkpoint.hpp"
#include "uec/error.hpp"

namespace uec {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_abort_dump(const fs::path& path, const Batch& batch, const StepRecord& rec) {
  if (path.empty()) return;
  json pairs = json::array();
  for (const auto& p : batch.pairs) {
    pairs.push_back({{"scene", p.scene}, {"input_ev", p.input_ev}, {"ref_ev", p.ref_ev},
                     {"input_mean", mean_luminance(p.input)}, {"ref_mean", mean_luminance(p.ref)}});
  }
  json triples = json::array();
  for (const auto& t : batch.triples) {
    triples.push_back({{"input_scene", t.input_scene}, {"ref_scene", t.ref_scene},
                       {"input_ev", t.input_ev}, {"ref_hi_ev", t.ref_hi_ev},
                       {"ref_lo_ev", t.ref_lo_ev}});
  }
  std::ofstream out(path);
  out << json{{"step", rec.step}, {"losses", rec.to_json()}, {"pairs", pairs},
              {"triples", triples}}.dump(2)
      << "\n";
}

}  // namespace

json StepRecord::to_json() const {
  return {{"step", step}, {"l_rest", l_rest}, {"l_mono", l_mono},
          {"l_sem", l_sem}, {"l_total", l_total}, {"wall_ms", wall_ms}};
}

StepRecord train_step(TrainSession& session, const std::vector<ExposureSequence>& dataset,
                      const TrainConfig& config, const fs::path& dump_path) {
  const auto start = std::chrono::steady_clock::now();
  StepRecord rec;
  rec.step = session.adam.step;
  std::mt19937_64 rng(step_seed(config.seed, rec.step));
  const Batch batch = sample_step(dataset, rng, config);

  Tape tape;
  const BoundModel bound = bind(tape, session.model, true);
  const LossVars losses = build_losses(tape, bound, batch, config.weights());
  rec.l_rest = tape.value(losses.restoration)[0];
  rec.l_mono = tape.value(losses.monopoly)[0];
  rec.l_sem = tape.value(losses.semantic)[0];
  rec.l_total = tape.value(losses.total)[0];
  if (!std::isfinite(rec.l_rest) || !std::isfinite(rec.l_mono) ||
      !std::isfinite(rec.l_sem) || !std::isfinite(rec.l_total)) {
    write_abort_dump(dump_path, batch, rec);
    throw TrainingAborted(ErrorKind::kNumeric, "loss",
                          "non-finite loss at step " + std::to_string(rec.step));
  }
  tape.backward(losses.total);

  GradMap grads;
  for (std::size_t k = 0; k < session.model.params.size(); ++k) {
    grads.emplace(session.model.params[k].name, tape.gradient(bound[k]));
  }
  adam_step(session.model, grads, session.adam, config.lr);
  rec.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return rec;
}

fs::path state_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p += ".state";
  return p;
}

void save_session(const TrainSession& session, const fs::path& checkpoint) {
  save(session.model, checkpoint);
  TensorFile state;
  state.meta["step"] = session.adam.step;
  for (std::size_t k = 0; k < session.adam.m.size(); ++k) {
    const std::string& name = session.model.params[k].name;
    state.tensors.push_back({"adam.m." + name, session.adam.m[k]});
    state.tensors.push_back({"adam.v." + name, session.adam.v[k]});
  }
  save_tensor_file(state_path(checkpoint), state);
}

TrainSession load_session(const fs::path& checkpoint) {
  TrainSession session;
  session.model = load(checkpoint);
  const fs::path sp = state_path(checkpoint);
  if (!fs::exists(sp)) return session;  // weights only: fresh optimizer
  TensorFile state = load_tensor_file(sp);
  session.adam.step = state.meta.value("step", std::uint64_t{0});
  if (state.tensors.empty()) return session;
  if (state.tensors.size() != 2 * session.model.params.size()) {
    throw Error(ErrorKind::kFormat, sp.string(), "optimizer state does not match model");
  }
  for (std::size_t k = 0; k < session.model.params.size(); ++k) {
    auto& m = state.tensors[2 * k];
    auto& v = state.tensors[2 * k + 1];
    const std::string& name = session.model.params[k].name;
    if (m.name != "adam.m." + name || v.name != "adam.v." + name ||
        m.value.shape != session.model.params[k].value.shape ||
        v.value.shape != session.model.params[k].value.shape) {
      throw Error(ErrorKind::kFormat, name, "optimizer state mismatch");
    }
    session.adam.m.push_back(std::move(m.value));
    session.adam.v.push_back(std::move(v.value));
  }
  return session;
}

TrainSession train(const std::vector<ExposureSequence>& dataset, const TrainConfig& config,
                   const TrainOptions& options) {
  config.validate();
  TrainSession session = options.resume ? load_session(*options.resume)
                                        : TrainSession{UecModel::create(config.seed), {}};
  std::ofstream log;
  if (!options.log.empty()) {
    log.open(options.log, std::ios::app);
    if (!log) throw Error(ErrorKind::kIo, options.log.string(), "cannot open log");
  }
  fs::path dump = options.checkpoint;
  if (!dump.empty()) dump += ".abort.json";
  while (session.adam.step < static_cast<std::uint64_t>(config.steps)) {
    const StepRecord rec = train_step(session, dataset, config, dump);
    if (log.is_open()) log << rec.to_json().dump() << "\n" << std::flush;
    if (options.on_step) options.on_step(rec);
    if (!options.checkpoint.empty() && config.checkpoint_every > 0 &&
        session.adam.step % static_cast<std::uint64_t>(config.checkpoint_every) == 0) {
      save_session(session, options.checkpoint);
    }
  }
  if (!options.checkpoint.empty()) save_session(session, options.checkpoint);
  return session;
}

}  // namespace uec
