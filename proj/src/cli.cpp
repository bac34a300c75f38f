#include "uec/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>

#include <CLI11.hpp>

#include "uec/checkpoint.hpp"
#include "uec/dataset.hpp"
#include "uec/error.hpp"
#include "uec/eval.hpp"
#include "uec/gradcheck_suite.hpp"
#include "uec/image_io.hpp"
#include "uec/model.hpp"
#include "uec/trainer.hpp"

namespace uec::cli {
namespace {

namespace fs = std::filesystem;

struct SynthArgs {
  std::string input_dir, output_dir, ev_grid = "-2,-1,0,1,2,3";
  bool jitter = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct TrainArgs {
  std::string data, config, out, resume, log;
  std::optional<std::uint64_t> seed;
};

struct CorrectArgs {
  std::string checkpoint, reference, ref_feature, input, output, save_ref_feature;
};

struct EvalArgs {
  std::string checkpoint, reference, test_manifest, metrics = "psnr,ssim,edge", report;
  std::string sweep_csv, sweep_scene;
};

struct BenchArgs {
  std::string checkpoint, resolution = "256x256";
  int iters = 100;
  std::uint64_t seed = 0;
};

struct GradArgs {
  int seeds = 10;
  bool corrupt_conv = false;
};

int do_synth(const SynthArgs& a, std::ostream& out) {
  SynthOptions opt;
  opt.input_dir = a.input_dir;
  opt.output_dir = a.output_dir;
  opt.ev_grid = parse_ev_grid(a.ev_grid);
  opt.jitter = a.jitter;
  opt.seed = a.seed;
  opt.threads = a.threads;
  const Manifest m = synth_dataset(opt);
  out << "manifest: " << (fs::path(a.output_dir) / "manifest.json").string() << "\n"
      << "scenes: " << m.scenes.size() << "\nframes: " << m.frame_count() << "\n";
  return kOk;
}

int do_train(const TrainArgs& a, std::ostream& out) {
  const fs::path manifest = resolve_manifest_path(a.data);
  if (!fs::exists(manifest)) {
    throw Error(ErrorKind::kUsage, "--data", "manifest not found: " + manifest.string());
  }
  TrainConfig config = a.config.empty() ? TrainConfig{} : load_config(a.config);
  if (a.seed) config.seed = *a.seed;
  config.validate();
  const auto dataset = load_dataset(manifest);
  TrainOptions opt;
  opt.checkpoint = a.out;
  opt.log = a.log.empty() ? fs::path(a.out + ".log.jsonl") : fs::path(a.log);
  if (!a.resume.empty()) opt.resume = a.resume;
  const TrainSession session = train(dataset, config, opt);
  out << "checkpoint: " << a.out << "\nsteps: " << session.adam.step
      << "\nparams: " << param_count(session.model) << "\n";
  return kOk;
}

int do_correct(const CorrectArgs& a, std::ostream& out) {
  if (a.reference.empty() == a.ref_feature.empty()) {
    throw Error(ErrorKind::kUsage, "--reference/--ref-feature", "give exactly one");
  }
  const UecModel model = load(a.checkpoint);
  ExposureFeature ref;
  if (!a.reference.empty()) {
    ref = encode(model, read_image(a.reference));
    if (!a.save_ref_feature.empty()) save_feature(ref, a.save_ref_feature);
  } else {
    if (!a.save_ref_feature.empty()) {
      throw Error(ErrorKind::kUsage, "--save-ref-feature", "requires --reference");
    }
    ref = load_feature(a.ref_feature);
  }
  const ImageF32 input = read_image(a.input);
  write_image(a.output, apply(input, ref, model));
  out << "wrote " << a.output << " (" << input.width() << "x" << input.height() << ")\n";
  return kOk;
}

int do_eval(const EvalArgs& a, std::ostream& out) {
  const MetricSet metrics = MetricSet::parse(a.metrics);
  const UecModel model = load(a.checkpoint);
  const auto dataset = load_dataset(a.test_manifest);
  EvalReport report;
  if (!a.reference.empty()) {
    report = evaluate(model, encode(model, read_image(a.reference)), dataset, metrics);
    report.reference = a.reference;
  } else {
    // No reference given: try every scene's GT frame, keep the best PSNR.
    const MetricSet psnr_only{true, false, false};
    double best = -1.0;
    std::size_t best_scene = 0;
    for (std::size_t s = 0; s < dataset.size(); ++s) {
      const double p =
          evaluate(model, encode(model, dataset[s].gt()), dataset, psnr_only).aggregate.psnr_db;
      if (p > best) {
        best = p;
        best_scene = s;
      }
    }
    report = evaluate(model, encode(model, dataset[best_scene].gt()), dataset, metrics);
    report.reference = "scene:" + dataset[best_scene].scene_id;
  }
  if (!a.sweep_csv.empty()) {
    auto it = std::find_if(dataset.begin(), dataset.end(), [&](const ExposureSequence& s) {
      return a.sweep_scene.empty() || s.scene_id == a.sweep_scene;
    });
    if (it == dataset.end()) throw Error(ErrorKind::kUsage, "--sweep-scene", "no such scene");
    std::vector<ExposureSequence> tests;
    for (const auto& s : dataset) {
      if (&s != &*it) tests.push_back(s);
    }
    if (tests.empty()) tests = dataset;
    report.sweep = ev_sweep_audit(model, tests, *it);
    write_sweep_csv(a.sweep_csv, *report.sweep);
  }
  if (!a.report.empty()) {
    std::ofstream f(a.report);
    if (!f) throw Error(ErrorKind::kIo, a.report, "cannot write report");
    f << report.to_json().dump(2) << "\n";
  }
  out << std::fixed << std::setprecision(4) << "reference: " << report.reference << "\n";
  for (const auto& r : report.per_ev) {
    out << "ev " << std::showpos << r.input_ev << std::noshowpos << ": psnr " << r.psnr_db
        << " ssim " << r.ssim << " edge_psnr " << r.edge_psnr_db << " edge_f1 " << r.edge_f1
        << " (n=" << r.count << ")\n";
  }
  out << "all: psnr " << report.aggregate.psnr_db << " ssim " << report.aggregate.ssim
      << " edge_psnr " << report.aggregate.edge_psnr_db << " edge_f1 "
      << report.aggregate.edge_f1 << "\n";
  return kOk;
}

int do_bench(const BenchArgs& a, std::ostream& out) {
  static const std::regex kResolution(R"((\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(a.resolution, m, kResolution)) {
    throw Error(ErrorKind::kUsage, "--resolution", "expected WIDTHxHEIGHT, got " + a.resolution);
  }
  const std::size_t w = std::stoul(m[1]);
  const std::size_t h = std::stoul(m[2]);
  if (w == 0 || h == 0) throw Error(ErrorKind::kUsage, "--resolution", "zero size");
  if (a.iters < 10) throw Error(ErrorKind::kUsage, "--iters", "must be >= 10");
  const UecModel model = a.checkpoint.empty() ? UecModel::create(a.seed) : load(a.checkpoint);
  const TimingStats t = bench(model, h, w, a.iters, a.seed);
  out << std::fixed << std::setprecision(3) << "bench " << w << "x" << h << ": median "
      << t.median_ms << " ms, p95 " << t.p95_ms << " ms, " << t.megapixels_per_s
      << " MP/s (" << t.iterations << " iters, 1 thread)\n";
  return kOk;
}

int do_gradcheck(const GradArgs& a, std::ostream& out) {
  GradSuiteOptions opt;
  opt.seeds = a.seeds;
  opt.corrupt_conv_backward = a.corrupt_conv;
  const auto reports = run_gradcheck_suite(opt);
  const GradCheckReport* worst = nullptr;
  bool ok = true;
  out << std::scientific << std::setprecision(3);
  for (const auto& r : reports) {
    out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(22) << r.name
        << " max_rel_error " << r.max_rel_error << " checked " << r.checked << " skipped "
        << r.skipped << " unconverged " << r.unconverged << "\n";
    ok = ok && r.passed;
    if (!worst || r.max_rel_error > worst->max_rel_error) worst = &r;
  }
  if (!ok && worst) out << "worst op: " << worst->name << "\n";
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised exposure correction: synthesis, training, correction, evaluation"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Render multi-exposure sequences from well-exposed images");
  s->add_option("--input-dir", synth.input_dir, "Directory of PNG/PPM images")->required();
  s->add_option("--output-dir", synth.output_dir, "Dataset output directory")->required();
  s->add_option("--ev-grid", synth.ev_grid, "Comma-separated EV stops, must include 0")
      ->capture_default_str();
  s->add_flag("--jitter", synth.jitter, "Add uniform +-0.25 stop noise to non-zero EVs");
  s->add_option("--seed", synth.seed, "Jitter seed")->capture_default_str();
  s->add_option("--threads", synth.threads, "Worker threads")->capture_default_str()
      ->check(CLI::PositiveNumber);

  TrainArgs train_args;
  auto* t = app.add_subcommand("train", "Train a model on a synthesized dataset");
  t->add_option("--data", train_args.data, "Manifest file or dataset directory")->required();
  t->add_option("--config", train_args.config, "JSON training config");
  t->add_option("--out", train_args.out, "Checkpoint path")->required();
  t->add_option("--resume", train_args.resume, "Checkpoint to resume (uses <ckpt>.state)");
  t->add_option("--log", train_args.log, "Metrics JSON-lines log (default <out>.log.jsonl)");
  t->add_option("--seed", train_args.seed, "Override config seed");

  CorrectArgs correct_args;
  auto* c = app.add_subcommand("correct", "Correct one image against a single reference");
  c->add_option("--checkpoint", correct_args.checkpoint)->required();
  auto* ref_opt = c->add_option("--reference", correct_args.reference, "Reference image");
  auto* feat_opt = c->add_option("--ref-feature", correct_args.ref_feature, "Cached UECF feature");
  ref_opt->excludes(feat_opt);
  c->add_option("--save-ref-feature", correct_args.save_ref_feature,
                "Write the reference feature sidecar");
  c->add_option("--input", correct_args.input)->required();
  c->add_option("--output", correct_args.output, ".png or .ppm")->required();

  EvalArgs eval_args;
  auto* e = app.add_subcommand("eval", "Score corrections against each scene's GT frame");
  e->add_option("--checkpoint", eval_args.checkpoint)->required();
  e->add_option("--reference", eval_args.reference,
                "Reference image (default: best scene GT by PSNR)");
  e->add_option("--test-manifest", eval_args.test_manifest)->required();
  e->add_option("--metrics", eval_args.metrics)->capture_default_str();
  e->add_option("--report", eval_args.report, "EvalReport JSON path");
  e->add_option("--sweep-csv", eval_args.sweep_csv, "Write the EV sweep table as CSV");
  e->add_option("--sweep-scene", eval_args.sweep_scene,
                "Scene whose frames serve as sweep references (default: first)");

  BenchArgs bench_args;
  auto* b = app.add_subcommand("bench", "Time apply() single-threaded");
  b->add_option("--checkpoint", bench_args.checkpoint, "Checkpoint (default: fresh model)");
  b->add_option("--resolution", bench_args.resolution, "WIDTHxHEIGHT")->capture_default_str();
  b->add_option("--iters", bench_args.iters)->capture_default_str();
  b->add_option("--seed", bench_args.seed)->capture_default_str();

  GradArgs grad_args;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  g->add_option("--seeds", grad_args.seeds)->capture_default_str()->check(CLI::PositiveNumber);
  g->add_flag("--corrupt-conv-backward", grad_args.corrupt_conv)->group("");

  for (CLI::App* sub : {s, t, c, e, b, g}) {
    sub->footer("Exit codes: 0 success, 1 check failed, 2 usage or input error, 3 runtime abort");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kUsageError;
  }

  try {
    if (s->parsed()) return do_synth(synth, out);
    if (t->parsed()) return do_train(train_args, out);
    if (c->parsed()) return do_correct(correct_args, out);
    if (e->parsed()) return do_eval(eval_args, out);
    if (b->parsed()) return do_bench(bench_args, out);
    if (g->parsed()) return do_gradcheck(grad_args, out);
  } catch (const TrainingAborted& ex) {
    err << "aborted: " << ex.what() << "\n";
    return kRuntimeAbort;
  } catch (const Error& ex) {
    err << "error (" << to_string(ex.kind()) << "): " << ex.what() << "\n";
    return ex.kind() == ErrorKind::kNumeric ? kRuntimeAbort : kUsageError;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kRuntimeAbort;
  }
  return kUsageError;
}

}  // namespace uec::cli
