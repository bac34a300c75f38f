#include "uec/sampler.hpp"

#include <algorithm>
#include <limits>

#include "uec/error.hpp"

namespace uec {
namespace {

struct Window {
  std::size_t y = 0, x = 0, h = 0, w = 0;
};

Window random_window(std::mt19937_64& rng, const ImageF32& img, int crop) {
  Window win;
  win.h = std::min<std::size_t>(static_cast<std::size_t>(crop), img.height());
  win.w = std::min<std::size_t>(static_cast<std::size_t>(crop), img.width());
  win.y = uniform_index(rng, img.height() - win.h + 1);
  win.x = uniform_index(rng, img.width() - win.w + 1);
  return win;
}

ImageF32 cut(const ImageF32& img, const Window& w) { return img.crop(w.y, w.x, w.h, w.w); }

// Two distinct frame indices, uniformly over ordered pairs.
std::pair<std::size_t, std::size_t> distinct_frames(std::mt19937_64& rng, std::size_t n) {
  const std::size_t a = uniform_index(rng, n);
  std::size_t b = uniform_index(rng, n - 1);
  if (b >= a) ++b;
  return {a, b};
}

}  // namespace

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kUsage, "n", "uniform_index over empty range");
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<std::size_t>(r % range);
}

std::uint64_t step_seed(std::uint64_t seed, std::uint64_t step) {
  // splitmix64 finalizer over (seed, step)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (step + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Batch sample_step(const std::vector<ExposureSequence>& dataset, std::mt19937_64& rng,
                  const TrainConfig& config) {
  if (dataset.size() < 2) {
    throw Error(ErrorKind::kUsage, "dataset",
                "need at least 2 scenes for the cross-scene task, got " +
                    std::to_string(dataset.size()));
  }
  for (const auto& seq : dataset) {
    if (seq.frames.size() < 2) {
      throw Error(ErrorKind::kUsage, seq.scene_id, "scene needs at least 2 frames");
    }
  }
  Batch batch;
  for (int i = 0; i < config.batch_pairs; ++i) {
    const std::size_t s = uniform_index(rng, dataset.size());
    const auto& seq = dataset[s];
    const auto [a, b] = distinct_frames(rng, seq.frames.size());
    const Window win = random_window(rng, seq.frames[a].image, config.crop);
    batch.pairs.push_back({cut(seq.frames[a].image, win), cut(seq.frames[b].image, win), s,
                           seq.frames[a].ev, seq.frames[b].ev});
  }
  for (int i = 0; i < config.batch_triples; ++i) {
    const std::size_t si = uniform_index(rng, dataset.size());
    std::size_t sj = uniform_index(rng, dataset.size() - 1);
    if (sj >= si) ++sj;
    const auto& in_seq = dataset[si];
    const auto& ref_seq = dataset[sj];
    const std::size_t fi = uniform_index(rng, in_seq.frames.size());
    auto [ra, rb] = distinct_frames(rng, ref_seq.frames.size());
    if (ref_seq.frames[ra].ev < ref_seq.frames[rb].ev) std::swap(ra, rb);
    const Window in_win = random_window(rng, in_seq.frames[fi].image, config.crop);
    const Window ref_win = random_window(rng, ref_seq.frames[ra].image, config.crop);
    batch.triples.push_back({cut(in_seq.frames[fi].image, in_win),
                             cut(ref_seq.frames[ra].image, ref_win),
                             cut(ref_seq.frames[rb].image, ref_win), si, sj,
                             in_seq.frames[fi].ev, ref_seq.frames[ra].ev,
                             ref_seq.frames[rb].ev});
  }
  return batch;
}

}  // namespace uec
