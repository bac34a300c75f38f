#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "uec/model.hpp"

namespace uec {

// Container layout (little-endian):
//   "UECK" | u32 version (=1) | u32 header_len | JSON header | payload
// The header lists {name, shape, offset, dtype:"f32le"} per tensor in payload
// order; offsets are bytes from the start of the payload. Extra top-level
// header keys carry metadata.
struct TensorFile {
  std::vector<NamedTensor> tensors;
  nlohmann::json meta = nlohmann::json::object();
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile load_tensor_file(const std::filesystem::path& path);

void save(const UecModel& model, const std::filesystem::path& path);
// Rejects any deviation from the declared architecture, naming the tensor.
UecModel load(const std::filesystem::path& path);

// Reference-feature sidecar: "UECF" | u32 version (=1) | 96 x f32le.
void save_feature(const ExposureFeature& feature, const std::filesystem::path& path);
ExposureFeature load_feature(const std::filesystem::path& path);

}  // namespace uec
