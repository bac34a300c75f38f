#include "uec/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>

#include "uec/error.hpp"

namespace uec {
namespace {

using nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json scores_json(const ImageScores& s) {
  return {{"scene", s.scene},           {"input_ev", s.input_ev},
          {"psnr_db", number(s.psnr_db)}, {"ssim", number(s.ssim)},
          {"edge_psnr_db", number(s.edge_psnr_db)}, {"edge_f1", number(s.edge_f1)}};
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

MetricSet MetricSet::parse(std::string_view text) {
  MetricSet set{false, false, false};
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string_view name = text.substr(start, comma - start);
    if (name == "psnr") set.psnr = true;
    else if (name == "ssim") set.ssim = true;
    else if (name == "edge") set.edge = true;
    else throw Error(ErrorKind::kUsage, "metrics", "unknown metric '" + std::string(name) + "'");
    start = comma + 1;
  }
  return set;
}

ImageScores score(const ImageF32& out, const ImageF32& gt, const MetricSet& metrics) {
  ImageScores s;
  s.psnr_db = metrics.psnr ? psnr(out, gt) : kNaN;
  s.ssim = metrics.ssim ? ssim(out, gt) : kNaN;
  s.edge_psnr_db = metrics.edge ? edge_psnr(out, gt) : kNaN;
  s.edge_f1 = metrics.edge ? edge_f1(edge_map(out), edge_map(gt)) : kNaN;
  return s;
}

EvalReport evaluate(const UecModel& model, const ExposureFeature& ref_feature,
                    const std::vector<ExposureSequence>& dataset, const MetricSet& metrics) {
  EvalReport report;
  std::map<double, std::vector<const ImageScores*>> by_ev;
  for (const auto& seq : dataset) {
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
      if (f == seq.gt_index) continue;
      ImageScores s = score(apply(seq.frames[f].image, ref_feature, model), seq.gt(), metrics);
      s.scene = seq.scene_id;
      s.input_ev = seq.frames[f].ev;
      report.per_image.push_back(std::move(s));
    }
  }
  std::vector<double> p, ss, ep, f1;
  for (const auto& s : report.per_image) {
    p.push_back(s.psnr_db);
    ss.push_back(s.ssim);
    ep.push_back(s.edge_psnr_db);
    f1.push_back(s.edge_f1);
    by_ev[s.input_ev].push_back(&s);
  }
  report.aggregate.scene = "all";
  report.aggregate.input_ev = kNaN;
  report.aggregate.psnr_db = mean_of(p);
  report.aggregate.ssim = mean_of(ss);
  report.aggregate.edge_psnr_db = mean_of(ep);
  report.aggregate.edge_f1 = mean_of(f1);
  for (const auto& [ev, list] : by_ev) {
    std::vector<double> rp, rs, re, rf;
    for (const ImageScores* s : list) {
      rp.push_back(s->psnr_db);
      rs.push_back(s->ssim);
      re.push_back(s->edge_psnr_db);
      rf.push_back(s->edge_f1);
    }
    report.per_ev.push_back({ev, list.size(), mean_of(rp), mean_of(rs), mean_of(re), mean_of(rf)});
  }
  return report;
}

SweepTable ev_sweep_audit(const UecModel& model, const std::vector<ExposureSequence>& tests,
                          const ExposureSequence& reference) {
  SweepTable table;
  std::vector<ExposureFeature> ref_features;
  std::vector<const ExposureFrame*> refs;
  for (const auto& f : reference.frames) refs.push_back(&f);
  std::stable_sort(refs.begin(), refs.end(),
                   [](const ExposureFrame* a, const ExposureFrame* b) { return a->ev < b->ev; });
  for (const ExposureFrame* f : refs) {
    table.ref_evs.push_back(f->ev);
    ref_features.push_back(encode(model, f->image));
  }
  table.mean_luminance_by_ref.assign(refs.size(), 0.0);
  const bool big_enough = [&] {
    for (const auto& seq : tests) {
      if (std::min(seq.gt().height(), seq.gt().width()) < static_cast<std::size_t>(kSsimWindow)) {
        return false;
      }
    }
    return true;
  }();
  const MetricSet metrics{true, big_enough, big_enough};
  for (const auto& seq : tests) {
    for (const auto& frame : seq.frames) {
      const ExposureFeature e_in = encode(model, frame.image);
      double previous = -std::numeric_limits<double>::infinity();
      bool monotone = true;
      for (std::size_t r = 0; r < refs.size(); ++r) {
        const float delta = predict_delta(model, e_in, ref_features[r]);
        const ImageF32 out = correct(frame.image, predict_lambdas(model, delta), model);
        const double lum = mean_luminance(out);
        monotone = monotone && lum >= previous;
        previous = lum;
        table.mean_luminance_by_ref[r] += lum;
        const ImageScores s = score(out, seq.gt(), metrics);
        table.rows.push_back({seq.scene_id, frame.ev, refs[r]->ev, lum, s.psnr_db, s.ssim,
                              s.edge_f1});
      }
      ++table.inputs;
      table.monotone_inputs += monotone ? 1 : 0;
    }
  }
  if (table.inputs > 0) {
    for (double& v : table.mean_luminance_by_ref) v /= static_cast<double>(table.inputs);
    table.monotone_fraction =
        static_cast<double>(table.monotone_inputs) / static_cast<double>(table.inputs);
  }
  return table;
}

void write_sweep_csv(const std::filesystem::path& path, const SweepTable& table) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, path.string(), "cannot write CSV");
  out << "scene,input_ev,ref_ev,mean_luminance,psnr_db,ssim,edge_f1\n";
  for (const auto& r : table.rows) {
    out << r.scene << "," << csv_number(r.input_ev) << "," << csv_number(r.ref_ev) << ","
        << csv_number(r.mean_luminance) << "," << csv_number(r.psnr_db) << ","
        << csv_number(r.ssim) << "," << csv_number(r.edge_f1) << "\n";
  }
}

json EvalReport::to_json() const {
  json images = json::array();
  for (const auto& s : per_image) images.push_back(scores_json(s));
  json evs = json::array();
  for (const auto& r : per_ev) {
    evs.push_back({{"input_ev", r.input_ev}, {"count", r.count},
                   {"psnr_db", number(r.psnr_db)}, {"ssim", number(r.ssim)},
                   {"edge_psnr_db", number(r.edge_psnr_db)}, {"edge_f1", number(r.edge_f1)}});
  }
  json doc = {{"reference", reference},
              {"per_image", images},
              {"per_ev", evs},
              {"aggregate", {{"psnr_db", number(aggregate.psnr_db)},
                             {"ssim", number(aggregate.ssim)},
                             {"edge_psnr_db", number(aggregate.edge_psnr_db)},
                             {"edge_f1", number(aggregate.edge_f1)},
                             {"count", per_image.size()}}}};
  if (sweep) {
    doc["ev_sweep"] = {{"ref_evs", sweep->ref_evs},
                       {"mean_luminance_by_ref", sweep->mean_luminance_by_ref},
                       {"inputs", sweep->inputs},
                       {"monotone_fraction", sweep->monotone_fraction}};
  }
  if (timing) {
    doc["timing"] = {{"height", timing->height},     {"width", timing->width},
                     {"iterations", timing->iterations}, {"median_ms", timing->median_ms},
                     {"p95_ms", timing->p95_ms},     {"megapixels_per_s", timing->megapixels_per_s}};
  }
  return doc;
}

TimingStats bench(const UecModel& model, std::size_t height, std::size_t width, int iterations,
                  std::uint64_t seed) {
  if (iterations < 10) throw Error(ErrorKind::kUsage, "iters", "must be >= 10");
  if (height == 0 || width == 0) throw Error(ErrorKind::kUsage, "resolution", "zero size");
  std::mt19937_64 rng(seed);
  auto random_image = [&](std::size_t h, std::size_t w) {
    ImageF32 img(h, w);
    for (float& v : img.data()) v = static_cast<float>(rng() >> 40) / static_cast<float>(1 << 24);
    return img;
  };
  const ImageF32 input = random_image(height, width);
  const ExposureFeature ref = encode(model, random_image(64, 64));
  for (int i = 0; i < 3; ++i) (void)apply(input, ref, model);
  std::vector<double> times;
  for (int i = 0; i < iterations; ++i) {
    const auto start = std::chrono::steady_clock::now();
    const ImageF32 out = apply(input, ref, model);
    times.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count());
    if (out.empty()) throw Error(ErrorKind::kNumeric, "bench", "empty output");
  }
  std::sort(times.begin(), times.end());
  TimingStats stats;
  stats.height = height;
  stats.width = width;
  stats.iterations = iterations;
  const std::size_t n = times.size();
  stats.median_ms = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  const auto p95_rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  stats.p95_ms = times[std::max<std::size_t>(p95_rank, 1) - 1];
  stats.megapixels_per_s =
      static_cast<double>(height * width) / 1e6 / (stats.median_ms / 1000.0);
  return stats;
}

}  // namespace uec
