#include "uec/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uec/error.hpp"

namespace uec {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kRange: return "range";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kNumeric: return "numeric";
  }
  return "unknown";
}

ImageF32::ImageF32(std::size_t height, std::size_t width, float fill)
    : height_(height), width_(width), data_(height * width * kChannels, fill) {}

ImageF32::ImageF32(std::size_t height, std::size_t width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != height * width * kChannels) {
    throw Error(ErrorKind::kShape, "data",
                "expected " + std::to_string(height * width * kChannels) +
                    " values, got " + std::to_string(data_.size()));
  }
}

ImageF32 ImageF32::crop(std::size_t y, std::size_t x, std::size_t h,
                        std::size_t w) const {
  if (y + h > height_ || x + w > width_ || h == 0 || w == 0) {
    throw Error(ErrorKind::kShape, "crop",
                "window " + std::to_string(h) + "x" + std::to_string(w) + "+" +
                    std::to_string(y) + "+" + std::to_string(x) +
                    " exceeds image " + std::to_string(height_) + "x" +
                    std::to_string(width_));
  }
  ImageF32 out(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    const float* src = data_.data() + ((y + r) * width_ + x) * kChannels;
    std::copy(src, src + w * kChannels, out.data_.data() + r * w * kChannels);
  }
  return out;
}

void require_unit_range(const ImageF32& img, std::string_view what) {
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    const float v = img.data()[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error(ErrorKind::kRange, std::string(what),
                  "value " + std::to_string(v) + " at index " + std::to_string(i) +
                      " outside [0,1]");
    }
  }
}

Tensor to_chw(const ImageF32& img) {
  const std::size_t h = img.height(), w = img.width(), plane = h * w;
  Tensor t({ImageF32::kChannels, h, w});
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < ImageF32::kChannels; ++c) {
      t[c * plane + p] = img.data()[p * ImageF32::kChannels + c];
    }
  }
  return t;
}

ImageF32 from_chw(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != ImageF32::kChannels) {
    throw Error(ErrorKind::kShape, "tensor", "expected [3,H,W], got " + to_string(t.shape));
  }
  const std::size_t h = t.dim(1), w = t.dim(2), plane = h * w;
  ImageF32 img(h, w);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < ImageF32::kChannels; ++c) {
      img.data()[p * ImageF32::kChannels + c] = t[c * plane + p];
    }
  }
  return img;
}

ImageF32 resize_bilinear(const ImageF32& img, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0 || img.empty()) {
    throw Error(ErrorKind::kShape, "resize", "zero-sized image");
  }
  ImageF32 out(height, width);
  const double sy = static_cast<double>(img.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(img.width()) / static_cast<double>(width);
  const auto max_y = static_cast<double>(img.height() - 1);
  const auto max_x = static_cast<double>(img.width() - 1);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < ImageF32::kChannels; ++c) {
        const double top = img.at(y0, x0, c) * (1.0 - wx) + img.at(y0, x1, c) * wx;
        const double bottom = img.at(y1, x0, c) * (1.0 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = static_cast<float>(top * (1.0 - wy) + bottom * wy);
      }
    }
  }
  return out;
}

ImageF32 thumbnail(const ImageF32& img, std::size_t longest) {
  const std::size_t side = std::max(img.height(), img.width());
  if (side <= longest) return img;
  const double scale = static_cast<double>(longest) / static_cast<double>(side);
  const auto h = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(static_cast<double>(img.height()) * scale)));
  const auto w = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(static_cast<double>(img.width()) * scale)));
  return resize_bilinear(img, h, w);
}

double mean_luminance(const ImageF32& img) {
  double acc = 0.0;
  for (float v : img.data()) acc += v;
  return img.empty() ? 0.0 : acc / static_cast<double>(img.data().size());
}

}  // namespace uec
