#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "uec/image.hpp"

namespace uec {

inline constexpr double kPsnrCapDb = 99.0;

// 10*log10(1/MSE) for signals in [0,1], capped at 99 dB.
double psnr(std::span<const float> a, std::span<const float> b);
double psnr(const ImageF32& a, const ImageF32& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// Mean SSIM over channels and all valid 11x11 Gaussian-window positions
// (no padding). Needs min(H,W) >= 11.
double ssim(const ImageF32& a, const ImageF32& b);

// Normalized 11-tap Gaussian, sigma 1.5.
std::vector<double> ssim_gaussian_taps();

struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;
};

// Sobel gradient magnitude of the channel-mean image with replicated
// borders, divided by its maximum possible value 4*sqrt(2) so it lies in
// [0,1].
GrayImage sobel_magnitude(const ImageF32& img);

struct EdgeMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> mask;  // 1 = edge

  std::size_t edge_count() const;
};

// Sobel magnitude binarized at its (lower) median: strictly greater -> edge.
EdgeMap edge_map(const ImageF32& img);

// 2TP / (2TP + FP + FN); 1.0 when both maps are empty.
double edge_f1(const EdgeMap& pred, const EdgeMap& gt);

// PSNR between the pre-binarization Sobel magnitude images.
double edge_psnr(const ImageF32& pred_src, const ImageF32& gt_src);

}  // namespace uec
