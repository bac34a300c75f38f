#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "uec/tensor.hpp"

namespace uec {

// H x W x 3 interleaved float image, values in [0,1].
class ImageF32 {
 public:
  static constexpr std::size_t kChannels = 3;

  ImageF32() = default;
  ImageF32(std::size_t height, std::size_t width, float fill = 0.0f);
  ImageF32(std::size_t height, std::size_t width, std::vector<float> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return kChannels; }
  std::size_t pixel_count() const noexcept { return height_ * width_; }
  bool empty() const noexcept { return data_.empty(); }

  float& at(std::size_t y, std::size_t x, std::size_t c) {
    return data_[(y * width_ + x) * kChannels + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * width_ + x) * kChannels + c];
  }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }
  const std::vector<float>& data() const noexcept { return data_; }

  ImageF32 crop(std::size_t y, std::size_t x, std::size_t h, std::size_t w) const;

  friend bool operator==(const ImageF32&, const ImageF32&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> data_;
};

// Throws Error(kRange) if any value is outside [0,1] or not finite.
void require_unit_range(const ImageF32& img, std::string_view what);

Tensor to_chw(const ImageF32& img);
ImageF32 from_chw(const Tensor& t);

// Bilinear resampling with pixel-center alignment.
ImageF32 resize_bilinear(const ImageF32& img, std::size_t height, std::size_t width);

// Downsamples so the longest side is at most `longest`; returns the input
// unchanged when it already fits.
ImageF32 thumbnail(const ImageF32& img, std::size_t longest = 256);

// Mean over all pixels of the channel mean.
double mean_luminance(const ImageF32& img);

}  // namespace uec
