#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "uec/error.hpp"
#include "uec/grad_check.hpp"
#include "uec/image.hpp"
#include "uec/tensor.hpp"

namespace uec::test {

inline ImageF32 random_image(std::mt19937_64& rng, std::size_t h, std::size_t w,
                             double lo = 0.0, double hi = 1.0) {
  ImageF32 img(h, w);
  for (float& v : img.data()) v = static_cast<float>(lo + (hi - lo) * unit_uniform(rng));
  return img;
}

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  for (float& v : t.data) v = static_cast<float>(lo + (hi - lo) * unit_uniform(rng));
  return t;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = info ? std::string(info->test_suite_name()) + "_" + info->name()
                            : std::string("uec");
    path_ = std::filesystem::temp_directory_path() /
            ("uec_test_" + name + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

template <typename F>
Error capture_error(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected uec::Error";
  return Error(ErrorKind::kUsage, "", "none thrown");
}

}  // namespace uec::test
