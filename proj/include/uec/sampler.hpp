#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "uec/isp.hpp"
#include "uec/train_config.hpp"

namespace uec {

// Two frames of one scene at distinct EVs. The restoration target is `ref`.
struct PretextPair {
  ImageF32 input;
  ImageF32 ref;
  std::size_t scene = 0;
  double input_ev = 0.0;
  double ref_ev = 0.0;
};

// Input from scene I, two references of a different scene J with
// ref_hi_ev > ref_lo_ev.
struct RealTriple {
  ImageF32 input;
  ImageF32 ref_hi;
  ImageF32 ref_lo;
  std::size_t input_scene = 0;
  std::size_t ref_scene = 0;
  double input_ev = 0.0;
  double ref_hi_ev = 0.0;
  double ref_lo_ev = 0.0;
};

struct Batch {
  std::vector<PretextPair> pairs;
  std::vector<RealTriple> triples;
};

// Unbiased integer in [0, n) by rejection on raw mt19937_64 output, so
// batches are reproducible across standard libraries.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

// Per-step RNG seed; resuming at step k replays exactly what an
// uninterrupted run would have drawn.
std::uint64_t step_seed(std::uint64_t seed, std::uint64_t step);

// Frames of one scene share a crop location; the crop side is clamped to the
// scene size. Throws Error(kUsage) with fewer than two scenes.
Batch sample_step(const std::vector<ExposureSequence>& dataset, std::mt19937_64& rng,
                  const TrainConfig& config);

}  // namespace uec
