#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "uec/losses.hpp"

namespace uec {

struct TrainConfig {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double alpha3 = 0.1;
  double lr = 1e-3;
  int batch_pairs = 8;
  int batch_triples = 8;
  int steps = 20000;
  int crop = 128;
  std::uint64_t seed = 0;
  int checkpoint_every = 1000;

  LossWeights weights() const { return {alpha1, alpha2, alpha3}; }

  // Throws Error(kUsage) naming the first invalid field.
  void validate() const;
};

// JSON keys mirror the field names; missing keys keep their defaults,
// unknown keys are rejected.
TrainConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const TrainConfig& config);
TrainConfig load_config(const std::filesystem::path& path);

}  // namespace uec
