#include "uec/train_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "uec/error.hpp"

namespace uec {

void TrainConfig::validate() const {
  auto fail = [](const char* field, const std::string& msg) {
    throw Error(ErrorKind::kUsage, field, msg);
  };
  if (!(alpha1 >= 0.0)) fail("alpha1", "must be >= 0");
  if (!(alpha2 >= 0.0)) fail("alpha2", "must be >= 0");
  if (!(alpha3 >= 0.0)) fail("alpha3", "must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr", "must be positive");
  if (batch_pairs < 1) fail("batch_pairs", "must be >= 1");
  if (batch_triples < 1) fail("batch_triples", "must be >= 1");
  if (steps < 0) fail("steps", "must be >= 0");
  if (crop < 16) fail("crop", "must be >= 16");
  if (checkpoint_every < 0) fail("checkpoint_every", "must be >= 0");
}

TrainConfig config_from_json(const nlohmann::json& doc) {
  static const std::set<std::string> known = {
      "alpha1", "alpha2", "alpha3", "lr", "batch_pairs", "batch_triples",
      "steps", "crop", "seed", "checkpoint_every"};
  if (!doc.is_object()) throw Error(ErrorKind::kUsage, "config", "expected a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) throw Error(ErrorKind::kUsage, key, "unknown config field");
  }
  TrainConfig c;
  try {
    c.alpha1 = doc.value("alpha1", c.alpha1);
    c.alpha2 = doc.value("alpha2", c.alpha2);
    c.alpha3 = doc.value("alpha3", c.alpha3);
    c.lr = doc.value("lr", c.lr);
    c.batch_pairs = doc.value("batch_pairs", c.batch_pairs);
    c.batch_triples = doc.value("batch_triples", c.batch_triples);
    c.steps = doc.value("steps", c.steps);
    c.crop = doc.value("crop", c.crop);
    c.seed = doc.value("seed", c.seed);
    c.checkpoint_every = doc.value("checkpoint_every", c.checkpoint_every);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kUsage, "config", e.what());
  }
  c.validate();
  return c;
}

nlohmann::json config_to_json(const TrainConfig& c) {
  return {{"alpha1", c.alpha1},       {"alpha2", c.alpha2},
          {"alpha3", c.alpha3},       {"lr", c.lr},
          {"batch_pairs", c.batch_pairs}, {"batch_triples", c.batch_triples},
          {"steps", c.steps},         {"crop", c.crop},
          {"seed", c.seed},           {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, path.string(), "cannot open config");
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kUsage, path.string(), e.what());
  }
}

}  // namespace uec
