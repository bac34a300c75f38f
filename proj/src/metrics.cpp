#include "uec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uec/error.hpp"

namespace uec {
namespace {

void require_same_dims(const ImageF32& a, const ImageF32& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorKind::kShape, what,
                std::to_string(a.height()) + "x" + std::to_string(a.width()) + " vs " +
                    std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
}

// Valid-mode separable filter of one channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t h, std::size_t w,
                                 const std::vector<double>& taps) {
  const std::size_t k = taps.size();
  const std::size_t oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += taps[i] * plane[y * w + x + i];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += taps[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorKind::kShape, "psnr",
                "size mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

double psnr(const ImageF32& a, const ImageF32& b) {
  require_same_dims(a, b, "psnr");
  return psnr(a.values(), b.values());
}

std::vector<double> ssim_gaussian_taps() {
  std::vector<double> taps(kSsimWindow);
  const int half = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    taps[i] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

double ssim(const ImageF32& a, const ImageF32& b) {
  require_same_dims(a, b, "ssim");
  const std::size_t h = a.height(), w = a.width();
  if (std::min(h, w) < static_cast<std::size_t>(kSsimWindow)) {
    throw Error(ErrorKind::kShape, "ssim", "image must be at least 11x11");
  }
  const auto taps = ssim_gaussian_taps();
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  const std::size_t n = h * w;
  double total = 0.0;
  for (std::size_t c = 0; c < ImageF32::kChannels; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a.data()[i * 3 + c];
      y[i] = b.data()[i * 3 + c];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, taps);
    const auto my = filter_valid(y, h, w, taps);
    const auto exx = filter_valid(xx, h, w, taps);
    const auto eyy = filter_valid(yy, h, w, taps);
    const auto exy = filter_valid(xy, h, w, taps);
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double sx = exx[i] - mx[i] * mx[i];
      const double sy = eyy[i] - my[i] * my[i];
      const double sxy = exy[i] - mx[i] * my[i];
      acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * sxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (sx + sy + c2));
    }
    total += acc / static_cast<double>(mx.size());
  }
  return total / static_cast<double>(ImageF32::kChannels);
}

GrayImage sobel_magnitude(const ImageF32& img) {
  const std::size_t h = img.height(), w = img.width();
  if (h < 3 || w < 3) throw Error(ErrorKind::kShape, "sobel", "image must be at least 3x3");
  std::vector<double> gray(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    // Channel sum; the 1/3 is folded into the final scale so offsets cancel
    // exactly in the differences.
    gray[i] = static_cast<double>(img.data()[i * 3]) + img.data()[i * 3 + 1] +
              img.data()[i * 3 + 2];
  }
  auto at = [&](long y, long x) {
    y = std::clamp<long>(y, 0, static_cast<long>(h) - 1);
    x = std::clamp<long>(x, 0, static_cast<long>(w) - 1);
    return gray[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  const double norm = 1.0 / (3.0 * 4.0 * std::sqrt(2.0));
  GrayImage out{h, w, std::vector<float>(h * w)};
  for (long y = 0; y < static_cast<long>(h); ++y) {
    for (long x = 0; x < static_cast<long>(w); ++x) {
      const double gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
      const double gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
      out.data[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] =
          static_cast<float>(std::sqrt(gx * gx + gy * gy) * norm);
    }
  }
  return out;
}

std::size_t EdgeMap::edge_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

EdgeMap edge_map(const ImageF32& img) {
  const GrayImage mag = sobel_magnitude(img);
  std::vector<float> sorted = mag.data;
  const std::size_t mid = (sorted.size() - 1) / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(mid), sorted.end());
  const float median = sorted[mid];
  EdgeMap map{mag.height, mag.width, std::vector<std::uint8_t>(mag.data.size())};
  for (std::size_t i = 0; i < mag.data.size(); ++i) map.mask[i] = mag.data[i] > median ? 1 : 0;
  return map;
}

double edge_f1(const EdgeMap& pred, const EdgeMap& gt) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw Error(ErrorKind::kShape, "edge_f1", "edge maps differ in size");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.mask.size(); ++i) {
    const bool p = pred.mask[i] != 0, g = gt.mask[i] != 0;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double edge_psnr(const ImageF32& pred_src, const ImageF32& gt_src) {
  require_same_dims(pred_src, gt_src, "edge_psnr");
  return psnr(sobel_magnitude(pred_src).data, sobel_magnitude(gt_src).data);
}

}  // namespace uec
