#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "uec/checkpoint.hpp"
#include "uec/cli.hpp"
#include "uec/dataset.hpp"
#include "uec/image_io.hpp"
#include "uec/model.hpp"

namespace uec {
namespace {

namespace fs = std::filesystem;
using test::random_image;
using test::TempDir;

struct CliResult {
  int code = -1;
  std::string out, err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// Smooth-ish random scenes so training has something to learn.
void write_scenes(const fs::path& dir, int n, std::uint64_t seed, std::size_t side = 32) {
  fs::create_directories(dir);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) {
    write_image(dir / ("scene" + std::to_string(i) + ".png"),
                random_image(rng, side, side + 4, 0.05, 0.8));
  }
}

void write_text(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

std::string small_config(int steps) {
  return R"({"steps": )" + std::to_string(steps) +
         R"(, "batch_pairs": 2, "batch_triples": 2, "crop": 16, "lr": 0.005, "seed": 3,
             "checkpoint_every": 0})";
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"bench", "--no-such-flag"}).code, 2);
  const auto help = run_cli({"synth", "--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_TRUE(contains(help.out, "--ev-grid"));
  EXPECT_TRUE(contains(help.out, "Exit codes"));
}

TEST(CliSynth, DefaultGridOnThreeImages) {
  TempDir dir;
  write_scenes(dir / "in", 3, 1);
  const auto r = run_cli({"synth", "--input-dir", (dir / "in").string(), "--output-dir",
                          (dir / "out").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "scenes: 3"));
  EXPECT_TRUE(contains(r.out, "frames: 18"));
  EXPECT_TRUE(contains(r.out, (dir / "out" / "manifest.json").string()));
  EXPECT_EQ(read_manifest(dir / "out" / "manifest.json").frame_count(), 18u);
}

TEST(CliSynth, BadGridAndEmptyInput) {
  TempDir dir;
  write_scenes(dir / "in", 1, 2);
  auto r = run_cli({"synth", "--input-dir", (dir / "in").string(), "--output-dir",
                    (dir / "out").string(), "--ev-grid", "-1,zero,1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "ev-grid"));
  fs::create_directories(dir / "empty");
  r = run_cli({"synth", "--input-dir", (dir / "empty").string(), "--output-dir",
               (dir / "out2").string()});
  EXPECT_EQ(r.code, 2);
  r = run_cli({"synth", "--input-dir", (dir / "in").string()});
  EXPECT_EQ(r.code, 2);
}

TEST(CliSynth, JitterRunsWithSameSeedMatch) {
  TempDir dir;
  write_scenes(dir / "in", 2, 3);
  for (const char* out : {"a", "b"}) {
    const auto r = run_cli({"synth", "--input-dir", (dir / "in").string(), "--output-dir",
                            (dir / out).string(), "--jitter", "--seed", "17"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const Manifest a = read_manifest(dir / "a" / "manifest.json");
  const Manifest b = read_manifest(dir / "b" / "manifest.json");
  ASSERT_EQ(a.scenes.size(), b.scenes.size());
  for (std::size_t s = 0; s < a.scenes.size(); ++s) {
    EXPECT_EQ(a.scenes[s].evs, b.scenes[s].evs);
    for (std::size_t f = 0; f < a.scenes[s].frames.size(); ++f) {
      EXPECT_EQ(a.scenes[s].frames[f].sha256, b.scenes[s].frames[f].sha256);
    }
  }
  EXPECT_TRUE(a.jitter);
}

class CliPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    write_scenes(dir / "in", 3, 4);
    const auto r = run_cli({"synth", "--input-dir", (dir / "in").string(), "--output-dir",
                            (dir / "data").string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  std::string data() const { return (dir / "data").string(); }
  TempDir dir;
};

TEST_F(CliPipeline, TrainSmokeWritesCheckpointAndLog) {
  write_text(dir / "c.json", small_config(10));
  const auto r = run_cli({"train", "--data", data(), "--config", (dir / "c.json").string(),
                          "--out", (dir / "m.ueck").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "steps: 10"));
  EXPECT_TRUE(contains(r.out, "params: 8485"));
  const auto bytes = read_file_bytes(dir / "m.ueck");
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "UECK");
  std::ifstream log(dir / "m.ueck.log.jsonl");
  int lines = 0;
  for (std::string line; std::getline(log, line);) ++lines;
  EXPECT_EQ(lines, 10);
}

TEST_F(CliPipeline, ResumeMatchesUninterruptedRun) {
  write_text(dir / "c10.json", small_config(10));
  write_text(dir / "c20.json", small_config(20));
  auto r = run_cli({"train", "--data", data(), "--config", (dir / "c20.json").string(), "--out",
                    (dir / "full.ueck").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run_cli({"train", "--data", data(), "--config", (dir / "c10.json").string(), "--out",
               (dir / "half.ueck").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run_cli({"train", "--data", data(), "--config", (dir / "c20.json").string(), "--out",
               (dir / "resumed.ueck").string(), "--resume", (dir / "half.ueck").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file_bytes(dir / "full.ueck"), read_file_bytes(dir / "resumed.ueck"));
}

TEST_F(CliPipeline, TrainInputErrors) {
  auto r = run_cli({"train", "--data", (dir / "nowhere").string(), "--out",
                    (dir / "m.ueck").string()});
  EXPECT_EQ(r.code, 2);
  write_text(dir / "bad.json", R"({"crop": 4})");
  r = run_cli({"train", "--data", data(), "--config", (dir / "bad.json").string(), "--out",
               (dir / "m.ueck").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "crop"));
  EXPECT_FALSE(fs::exists(dir / "m.ueck"));
}

TEST_F(CliPipeline, DivergentTrainingAbortsWithExitThree) {
  write_text(dir / "c.json", R"({"steps": 50, "batch_pairs": 2, "batch_triples": 2, "crop": 16,
                                 "lr": 1e30, "checkpoint_every": 0})");
  const auto r = run_cli({"train", "--data", data(), "--config", (dir / "c.json").string(),
                          "--out", (dir / "m.ueck").string()});
  EXPECT_EQ(r.code, 3) << r.out << r.err;
  EXPECT_TRUE(fs::exists(dir / "m.ueck.abort.json"));
}

TEST_F(CliPipeline, CorrectWithFreshCheckpointIsNearIdentity) {
  save(UecModel::create(9), dir / "fresh.ueck");
  const std::string input = (dir / "data" / "scene1" / "ev-1.00.png").string();
  const std::string ref = (dir / "data" / "scene2" / "ev+0.00.png").string();
  auto r = run_cli({"correct", "--checkpoint", (dir / "fresh.ueck").string(), "--reference", ref,
                    "--save-ref-feature", (dir / "ref.uecf").string(), "--input", input,
                    "--output", (dir / "a.png").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const ImageF32 in = read_image(input), out = read_image(dir / "a.png");
  ASSERT_EQ(out.height(), in.height());
  ASSERT_EQ(out.width(), in.width());
  float worst = 0.0f;
  for (std::size_t i = 0; i < in.data().size(); ++i) {
    worst = std::max(worst, std::abs(in.data()[i] - out.data()[i]));
  }
  EXPECT_LT(worst, 1.0f / 255.0f);

  r = run_cli({"correct", "--checkpoint", (dir / "fresh.ueck").string(), "--ref-feature",
               (dir / "ref.uecf").string(), "--input", input, "--output",
               (dir / "b.png").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file_bytes(dir / "a.png"), read_file_bytes(dir / "b.png"));
}

TEST_F(CliPipeline, CorrectFlagErrors) {
  save(UecModel::create(9), dir / "m.ueck");
  const std::string input = (dir / "data" / "scene0" / "ev+1.00.png").string();
  save_feature(encode(UecModel::create(9), read_image(input)), dir / "f.uecf");
  const std::vector<std::string> base = {"correct", "--checkpoint", (dir / "m.ueck").string(),
                                         "--input", input, "--output", (dir / "o.png").string()};
  EXPECT_EQ(run_cli(base).code, 2);
  auto both = base;
  both.insert(both.end(), {"--reference", input, "--ref-feature", (dir / "f.uecf").string()});
  EXPECT_EQ(run_cli(both).code, 2);
  auto save_without_ref = base;
  save_without_ref.insert(save_without_ref.end(), {"--ref-feature", (dir / "f.uecf").string(),
                                                   "--save-ref-feature",
                                                   (dir / "g.uecf").string()});
  EXPECT_EQ(run_cli(save_without_ref).code, 2);
  auto missing_ckpt = base;
  missing_ckpt[2] = (dir / "nope.ueck").string();
  missing_ckpt.insert(missing_ckpt.end(), {"--reference", input});
  EXPECT_EQ(run_cli(missing_ckpt).code, 2);
  EXPECT_FALSE(fs::exists(dir / "o.png"));
}

TEST_F(CliPipeline, EvalReportHasPerEvRowsAndMeans) {
  save(UecModel::create(10), dir / "m.ueck");
  const auto r = run_cli({"eval", "--checkpoint", (dir / "m.ueck").string(), "--reference",
                          (dir / "data" / "scene0" / "ev+0.00.png").string(), "--test-manifest",
                          (dir / "data" / "manifest.json").string(), "--report",
                          (dir / "r.json").string(), "--sweep-csv", (dir / "s.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "all: psnr"));
  std::ifstream in(dir / "r.json");
  const auto j = nlohmann::json::parse(in);
  std::vector<double> evs;
  for (const auto& row : j["per_ev"]) evs.push_back(row["input_ev"]);
  EXPECT_EQ(evs, (std::vector<double>{-2, -1, 1, 2, 3}));
  double sum = 0.0;
  for (const auto& img : j["per_image"]) sum += img["psnr_db"].get<double>();
  EXPECT_NEAR(j["aggregate"]["psnr_db"].get<double>(), sum / 15.0, 1e-9);
  EXPECT_EQ(j["ev_sweep"]["monotone_fraction"], 1.0);
  EXPECT_TRUE(fs::exists(dir / "s.csv"));
}

TEST_F(CliPipeline, EvalDefaultsToBestSceneReference) {
  save(UecModel::create(11), dir / "m.ueck");
  const auto r = run_cli({"eval", "--checkpoint", (dir / "m.ueck").string(), "--test-manifest",
                          (dir / "data").string() + "/manifest.json", "--metrics", "psnr"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "reference: scene:scene"));
}

TEST_F(CliPipeline, EvalRejectsUnknownMetric) {
  save(UecModel::create(12), dir / "m.ueck");
  const auto r = run_cli({"eval", "--checkpoint", (dir / "m.ueck").string(), "--test-manifest",
                          (dir / "data" / "manifest.json").string(), "--metrics", "psnr,lpips"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "lpips"));
}

TEST(CliBench, TimingLineAndErrors) {
  auto r = run_cli({"bench", "--resolution", "256x256", "--iters", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "bench 256x256: median "));
  EXPECT_TRUE(contains(r.out, "MP/s"));
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
  EXPECT_EQ(run_cli({"bench", "--resolution", "256by256"}).code, 2);
  EXPECT_EQ(run_cli({"bench", "--resolution", "0x5", "--iters", "10"}).code, 2);
  EXPECT_EQ(run_cli({"bench", "--iters", "5"}).code, 2);
}

TEST(CliGradcheck, PassesAndCatchesCorruptedBackward) {
  auto r = run_cli({"gradcheck", "--seeds", "1"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(contains(r.out, "PASS conv2d"));
  EXPECT_TRUE(contains(r.out, "uec_end_to_end_8x8"));
  EXPECT_TRUE(contains(r.out, "max_rel_error"));
  EXPECT_FALSE(contains(r.out, "FAIL"));
  r = run_cli({"gradcheck", "--seeds", "1", "--corrupt-conv-backward"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.out, "FAIL"));
  EXPECT_TRUE(contains(r.out, "worst op: "));
}

}  // namespace
}  // namespace uec
