#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "uec/dataset.hpp"
#include "uec/image_io.hpp"
#include "uec/isp.hpp"

namespace uec {
namespace {

namespace fs = std::filesystem;
using test::random_image;
using test::TempDir;

// Piecewise IEC curve written out independently in double precision.
double srgb_decode(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

TEST(Srgb, DecodeExamples) {
  EXPECT_EQ(srgb_to_linear(0.0f), 0.0f);
  EXPECT_EQ(srgb_to_linear(1.0f), 1.0f);
  EXPECT_NEAR(srgb_to_linear(0.5f), 0.2140, 1e-4);
  EXPECT_NEAR(srgb_to_linear(0.5f), srgb_decode(0.5), 1e-7);
  EXPECT_NEAR(srgb_to_linear(0.02f), 0.02 / 12.92, 1e-9);
}

TEST(Srgb, EncodeExamples) {
  EXPECT_EQ(linear_to_srgb(0.0f), 0.0f);
  EXPECT_EQ(linear_to_srgb(1.0f), 1.0f);
  EXPECT_NEAR(linear_to_srgb(static_cast<float>(srgb_decode(0.5))), 0.5f, 1e-4);
}

TEST(Srgb, RoundTripOverDomain) {
  for (int i = 0; i <= 10000; ++i) {
    const float x = static_cast<float>(i) / 10000.0f;
    EXPECT_NEAR(linear_to_srgb(srgb_to_linear(x)), x, 1e-6) << x;
  }
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const float x = static_cast<float>(unit_uniform(rng));
    EXPECT_NEAR(linear_to_srgb(srgb_to_linear(x)), x, 1e-6);
  }
}

TEST(Srgb, OutOfRangeIsRejected) {
  ImageF32 img(1, 1, 0.5f);
  img.at(0, 0, 1) = 1.2f;
  EXPECT_EQ(test::capture_error([&] { srgb_to_linear(img); }).kind(), ErrorKind::kRange);
  img.at(0, 0, 1) = -0.1f;
  EXPECT_EQ(test::capture_error([&] { linear_to_srgb(img); }).kind(), ErrorKind::kRange);
  img.at(0, 0, 1) = std::nanf("");
  EXPECT_EQ(test::capture_error([&] { srgb_to_linear(img); }).kind(), ErrorKind::kRange);
}

TEST(ApplyEv, Examples) {
  ImageF32 img(1, 3);
  img.data() = {0.25f, 0.75f, 0.5f, 0.25f, 0.75f, 0.5f, 0.25f, 0.75f, 0.5f};
  const ImageF32 up = apply_ev(img, 1.0);
  EXPECT_EQ(up.at(0, 0, 0), 0.5f);
  EXPECT_EQ(up.at(0, 0, 1), 1.0f);
  const ImageF32 down = apply_ev(img, -2.0);
  EXPECT_EQ(down.at(0, 0, 2), 0.125f);
}

TEST(ApplyEv, ZeroIsBitExactIdentity) {
  std::mt19937_64 rng(2);
  const ImageF32 img = random_image(rng, 9, 7);
  EXPECT_EQ(apply_ev(img, 0.0), img);
}

TEST(ApplyEv, ComposesWithoutIntermediateClipping) {
  std::mt19937_64 rng(3);
  const ImageF32 img = random_image(rng, 8, 8, 0.0, 0.2);
  for (auto [a, b] : {std::pair{1.0, 1.5}, {-2.0, 0.5}, {0.75, -1.25}, {2.0, -3.0}}) {
    const ImageF32 two = apply_ev(apply_ev(img, a), b);
    const ImageF32 one = apply_ev(img, a + b);
    for (std::size_t i = 0; i < img.data().size(); ++i) {
      EXPECT_NEAR(two.data()[i], one.data()[i], 1e-6);
    }
  }
}

TEST(ApplyEv, RangeIsEnforced) {
  ImageF32 img(1, 1, 0.5f);
  EXPECT_EQ(test::capture_error([&] { apply_ev(img, 5.5); }).kind(), ErrorKind::kRange);
  EXPECT_NO_THROW(apply_ev(img, -5.0));
}

TEST(SynthSequence, SingleZeroFrameEqualsGt) {
  std::mt19937_64 rng(4);
  const ImageF32 gt = random_image(rng, 6, 5);
  const std::vector<double> grid{0.0};
  const auto seq = synth_sequence(gt, grid, "s");
  ASSERT_EQ(seq.frames.size(), 1u);
  EXPECT_EQ(seq.gt_index, 0u);
  for (std::size_t i = 0; i < gt.data().size(); ++i) {
    EXPECT_NEAR(seq.gt().data()[i], gt.data()[i], 1e-6);
  }
}

TEST(SynthSequence, DefaultGridIsOrdered) {
  std::mt19937_64 rng(5);
  const ImageF32 gt = random_image(rng, 12, 10);
  const auto grid = default_ev_grid();
  EXPECT_EQ(grid, (std::vector<double>{-2, -1, 0, 1, 2, 3}));
  const auto seq = synth_sequence(gt, grid, "s");
  ASSERT_EQ(seq.frames.size(), 6u);
  EXPECT_EQ(seq.frames[seq.gt_index].ev, 0.0);
  for (std::size_t f = 1; f < seq.frames.size(); ++f) {
    EXPECT_LT(seq.frames[f - 1].ev, seq.frames[f].ev);
    const auto& lo = seq.frames[f - 1].image.data();
    const auto& hi = seq.frames[f].image.data();
    for (std::size_t i = 0; i < lo.size(); ++i) ASSERT_GE(hi[i], lo[i]);
  }
}

TEST(SynthSequence, ConstantGrayLinearValues) {
  const ImageF32 gt(3, 3, 0.5f);
  const std::vector<double> grid{-1.0, 0.0, 1.0};
  const auto seq = synth_sequence(gt, grid);
  const double expect[] = {0.1070, 0.2140, 0.4280};
  for (std::size_t f = 0; f < 3; ++f) {
    const ImageF32 lin = srgb_to_linear(seq.frames[f].image);
    for (float v : lin.data()) EXPECT_NEAR(v, expect[f], 1e-4);
    for (float v : seq.frames[f].image.data()) EXPECT_EQ(v, seq.frames[f].image.data()[0]);
  }
}

TEST(SynthSequence, GridWithoutZeroIsRejected) {
  const ImageF32 gt(2, 2, 0.5f);
  const std::vector<double> grid{-1.0, 1.0};
  EXPECT_EQ(test::capture_error([&] { synth_sequence(gt, grid); }).kind(), ErrorKind::kUsage);
}

TEST(Monotonicity, SynthesizedSequencePasses) {
  std::mt19937_64 rng(6);
  const auto grid = default_ev_grid();
  const auto seq = synth_sequence(random_image(rng, 16, 16), grid);
  const auto r = verify_monotonicity(seq);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.violating_values, 0u);
  EXPECT_EQ(r.max_violation, 0.0);
}

TEST(Monotonicity, SwappedFramesAreReported) {
  std::mt19937_64 rng(7);
  const auto grid = default_ev_grid();
  auto seq = synth_sequence(random_image(rng, 16, 16, 0.1, 0.6), grid);
  std::swap(seq.frames[1].image, seq.frames[4].image);
  const auto r = verify_monotonicity(seq);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.violating_values, 0u);
  EXPECT_GT(r.beyond_slack, 0u);
  EXPECT_GT(r.max_violation, 1.0 / 255.0);
}

TEST(Monotonicity, QuantizedSequenceWithinSlack) {
  std::mt19937_64 rng(8);
  const auto grid = default_ev_grid();
  auto seq = synth_sequence(random_image(rng, 32, 32), grid);
  for (auto& f : seq.frames) f.image = quantize_8bit(f.image);
  const auto r = verify_monotonicity(seq);
  EXPECT_TRUE(r.passed);
  EXPECT_LE(r.max_violation, 1.0 / 255.0 + 1e-7);
}

TEST(EvGrid, ParsesAndRejects) {
  EXPECT_EQ(parse_ev_grid("-2,-1,0,1,2,3"), default_ev_grid());
  EXPECT_EQ(parse_ev_grid(" 0.5 , 0 ,-0.25"), (std::vector<double>{0.5, 0.0, -0.25}));
  for (const char* bad : {"", "1,,0", "a,0", "1,2", "0,7", "0,1x"}) {
    const auto err = test::capture_error([&] { parse_ev_grid(bad); });
    EXPECT_EQ(err.kind(), ErrorKind::kUsage) << bad;
    EXPECT_EQ(err.field(), "ev-grid") << bad;
  }
}

TEST(EvGrid, FileStems) {
  EXPECT_EQ(ev_file_stem(0.0), "ev+0.00");
  EXPECT_EQ(ev_file_stem(-2.0), "ev-2.00");
  EXPECT_EQ(ev_file_stem(1.25), "ev+1.25");
  EXPECT_EQ(ev_file_stem(-0.07), "ev-0.07");
}

TEST(Sha256, KnownVector) {
  const std::string abc = "abc";
  EXPECT_EQ(sha256_hex(std::vector<std::uint8_t>(abc.begin(), abc.end())),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ImageIo, PngAndPpmRoundTrip) {
  TempDir dir;
  std::mt19937_64 rng(9);
  const ImageF32 img = quantize_8bit(random_image(rng, 7, 11));
  write_image(dir / "a.png", img);
  write_image(dir / "a.ppm", img);
  EXPECT_EQ(read_image(dir / "a.png"), img);
  EXPECT_EQ(read_image(dir / "a.ppm"), img);
  const auto bytes = read_file_bytes(dir / "a.ppm");
  EXPECT_EQ(bytes[0], 'P');
  EXPECT_EQ(bytes[1], '6');
}

TEST(ImageIo, RejectsGarbageAndUnknownExtension) {
  TempDir dir;
  std::ofstream(dir / "junk.png") << "not an image";
  EXPECT_EQ(test::capture_error([&] { read_image(dir / "junk.png"); }).kind(), ErrorKind::kFormat);
  EXPECT_EQ(test::capture_error([&] { write_image(dir / "x.bmp", ImageF32(1, 1)); }).kind(),
            ErrorKind::kUsage);
}

TEST(ImageIo, QuantizeRounds) {
  EXPECT_EQ(quantize_u8(0.0f), 0);
  EXPECT_EQ(quantize_u8(1.0f), 255);
  EXPECT_EQ(quantize_u8(0.5f), 128);
  EXPECT_EQ(quantize_u8(1.4f / 255.0f), 1);
}

// Writes `n` random PNGs into `dir`.
void write_inputs(const fs::path& dir, int n, std::uint64_t seed, std::size_t h = 12,
                  std::size_t w = 10) {
  fs::create_directories(dir);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) {
    write_image(dir / ("img" + std::to_string(i) + ".png"), random_image(rng, h, w));
  }
}

std::map<std::string, std::vector<std::uint8_t>> tree_bytes(const fs::path& root) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file_bytes(e.path());
  }
  return out;
}

TEST(SynthDataset, ThreeImagesSixEvs) {
  TempDir dir;
  write_inputs(dir / "in", 3, 10);
  SynthOptions opt;
  opt.input_dir = dir / "in";
  opt.output_dir = dir / "out";
  const Manifest m = synth_dataset(opt);
  EXPECT_EQ(m.scenes.size(), 3u);
  EXPECT_EQ(m.frame_count(), 18u);
  EXPECT_EQ(m.generator_version, kGeneratorVersion);
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "img0" / "ev-2.00.png"));
  EXPECT_TRUE(fs::exists(dir / "out" / "img2" / "ev+3.00.png"));

  const Manifest back = read_manifest(dir / "out" / "manifest.json");
  ASSERT_EQ(back.scenes.size(), 3u);
  EXPECT_EQ(back.scenes[1].scene_id, "img1");
  EXPECT_EQ(back.scenes[1].gt_ev, 0.0);
  EXPECT_EQ(back.scenes[1].evs, default_ev_grid());
  for (const auto& f : back.scenes[1].frames) {
    EXPECT_EQ(f.sha256, sha256_hex(read_file_bytes(dir / "out" / f.file)));
  }

  const auto dataset = load_dataset(dir / "out" / "manifest.json");
  ASSERT_EQ(dataset.size(), 3u);
  for (const auto& seq : dataset) {
    EXPECT_EQ(seq.frames.size(), 6u);
    EXPECT_EQ(seq.frames[seq.gt_index].ev, 0.0);
    EXPECT_TRUE(verify_monotonicity(seq).passed) << seq.scene_id;
  }
  EXPECT_EQ(dataset[0].gt(), read_image(dir / "in" / "img0.png"));
}

TEST(SynthDataset, DeterministicWithoutJitter) {
  TempDir dir;
  write_inputs(dir / "in", 2, 11);
  SynthOptions opt;
  opt.input_dir = dir / "in";
  opt.output_dir = dir / "a";
  synth_dataset(opt);
  opt.output_dir = dir / "b";
  opt.threads = 3;
  synth_dataset(opt);
  EXPECT_EQ(tree_bytes(dir / "a"), tree_bytes(dir / "b"));
}

TEST(SynthDataset, JitterIsSeededAndBounded) {
  TempDir dir;
  write_inputs(dir / "in", 3, 12);
  SynthOptions opt;
  opt.input_dir = dir / "in";
  opt.jitter = true;
  opt.seed = 42;
  opt.output_dir = dir / "a";
  const Manifest a = synth_dataset(opt);
  opt.output_dir = dir / "b";
  const Manifest b = synth_dataset(opt);
  EXPECT_EQ(tree_bytes(dir / "a"), tree_bytes(dir / "b"));
  bool moved = false;
  for (const auto& s : a.scenes) {
    ASSERT_EQ(s.evs.size(), 6u);
    EXPECT_NE(std::find(s.evs.begin(), s.evs.end(), 0.0), s.evs.end());
    const auto grid = default_ev_grid();
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_LE(std::abs(s.evs[i] - grid[i]), 0.25 + 1e-9);
      moved = moved || s.evs[i] != grid[i];
    }
  }
  EXPECT_TRUE(moved);
  opt.seed = 43;
  opt.output_dir = dir / "c";
  const Manifest c = synth_dataset(opt);
  EXPECT_NE(c.scenes[0].evs, a.scenes[0].evs);
  for (const auto& seq : load_dataset(dir / "a" / "manifest.json")) {
    EXPECT_TRUE(verify_monotonicity(seq).passed);
  }
}

TEST(SynthDataset, SkipsUnreadableFiles) {
  TempDir dir;
  write_inputs(dir / "in", 2, 13);
  std::ofstream(dir / "in" / "broken.png") << "garbage";
  std::ofstream(dir / "in" / "notes.txt") << "hello";
  SynthOptions opt;
  opt.input_dir = dir / "in";
  opt.output_dir = dir / "out";
  const Manifest m = synth_dataset(opt);
  EXPECT_EQ(m.scenes.size(), 2u);
}

TEST(SynthDataset, NoUsableImagesIsAnError) {
  TempDir dir;
  fs::create_directories(dir / "in");
  std::ofstream(dir / "in" / "broken.png") << "garbage";
  SynthOptions opt;
  opt.input_dir = dir / "in";
  opt.output_dir = dir / "out";
  EXPECT_EQ(test::capture_error([&] { synth_dataset(opt); }).kind(), ErrorKind::kIo);
  opt.input_dir = dir / "missing";
  EXPECT_EQ(test::capture_error([&] { synth_dataset(opt); }).kind(), ErrorKind::kIo);
}

TEST(SynthDataset, TamperedFrameFailsChecksum) {
  TempDir dir;
  write_inputs(dir / "in", 1, 14);
  SynthOptions opt;
  opt.input_dir = dir / "in";
  opt.output_dir = dir / "out";
  synth_dataset(opt);
  std::mt19937_64 rng(15);
  write_image(dir / "out" / "img0" / "ev+1.00.png", random_image(rng, 12, 10));
  const auto err = test::capture_error([&] { load_dataset(dir / "out" / "manifest.json"); });
  EXPECT_EQ(err.kind(), ErrorKind::kFormat);
  EXPECT_EQ(err.field(), "img0/ev+1.00.png");
}

TEST(SynthDataset, ManifestPathResolution) {
  TempDir dir;
  EXPECT_EQ(resolve_manifest_path(dir.path()), dir.path() / "manifest.json");
  EXPECT_EQ(resolve_manifest_path(dir / "m.json"), dir / "m.json");
}

}  // namespace
}  // namespace uec
