#include "uec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "uec/error.hpp"
#include "uec/image_io.hpp"

namespace uec {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kModelMagic[4] = {'U', 'E', 'C', 'K'};
constexpr char kFeatureMagic[4] = {'U', 'E', 'C', 'F'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

void put_floats(std::vector<std::uint8_t>& out, const std::vector<float>& values) {
  const std::size_t at = out.size();
  out.resize(at + values.size() * sizeof(float));
  std::memcpy(out.data() + at, values.data(), values.size() * sizeof(float));
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, path.string(), "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, path.string(), "write failed");
}

void check_magic(const std::vector<std::uint8_t>& bytes, const char (&magic)[4],
                 const fs::path& path) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), magic, 4) != 0) {
    throw Error(ErrorKind::kFormat, "magic", "bad magic in " + path.string());
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kFormat, "version",
                "unsupported version " + std::to_string(version) + " in " + path.string());
  }
}

}  // namespace

void save_tensor_file(const fs::path& path, const TensorFile& file) {
  json header = file.meta;
  json entries = json::array();
  std::size_t offset = 0;
  for (const auto& t : file.tensors) {
    entries.push_back({{"name", t.name},
                       {"shape", t.value.shape},
                       {"offset", offset},
                       {"dtype", "f32le"}});
    offset += t.value.size() * sizeof(float);
  }
  header["entries"] = entries;
  const std::string text = header.dump();

  std::vector<std::uint8_t> bytes(kModelMagic, kModelMagic + 4);
  put_u32(bytes, kCheckpointVersion);
  put_u32(bytes, static_cast<std::uint32_t>(text.size()));
  bytes.insert(bytes.end(), text.begin(), text.end());
  for (const auto& t : file.tensors) put_floats(bytes, t.value.data);
  write_bytes(path, bytes);
}

TensorFile load_tensor_file(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  check_magic(bytes, kModelMagic, path);
  if (bytes.size() < 12) throw Error(ErrorKind::kFormat, "header_len", "truncated header");
  const std::size_t header_len = get_u32(bytes, 8);
  if (bytes.size() < 12 + header_len) {
    throw Error(ErrorKind::kFormat, "header", "truncated header");
  }
  TensorFile file;
  json header;
  try {
    header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<long>(header_len));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, "header", e.what());
  }
  const std::size_t payload = 12 + header_len;
  try {
    for (const auto& e : header.at("entries")) {
      const std::string name = e.at("name").get<std::string>();
      if (e.at("dtype").get<std::string>() != "f32le") {
        throw Error(ErrorKind::kFormat, name, "unsupported dtype");
      }
      Shape shape = e.at("shape").get<Shape>();
      const std::size_t offset = e.at("offset").get<std::size_t>();
      const std::size_t n = numel(shape);
      if (payload + offset + n * sizeof(float) > bytes.size()) {
        throw Error(ErrorKind::kFormat, name, "truncated payload");
      }
      Tensor t(std::move(shape));
      std::memcpy(t.data.data(), bytes.data() + payload + offset, n * sizeof(float));
      file.tensors.push_back({name, std::move(t)});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, "entries", e.what());
  }
  header.erase("entries");
  file.meta = std::move(header);
  return file;
}

void save(const UecModel& model, const fs::path& path) {
  TensorFile file;
  file.tensors = model.params;
  file.meta["version"] = model.version;
  save_tensor_file(path, file);
}

UecModel load(const fs::path& path) {
  TensorFile file = load_tensor_file(path);
  const auto& arch = architecture();
  if (file.tensors.size() != arch.size()) {
    throw Error(ErrorKind::kFormat, "entries",
                "expected " + std::to_string(arch.size()) + " tensors, got " +
                    std::to_string(file.tensors.size()));
  }
  UecModel model;
  model.version = file.meta.value("version", std::string(kModelVersion));
  for (std::size_t i = 0; i < arch.size(); ++i) {
    auto& t = file.tensors[i];
    if (t.name != arch[i].name) {
      throw Error(ErrorKind::kFormat, t.name, "expected tensor " + arch[i].name);
    }
    if (t.value.shape != arch[i].shape) {
      throw Error(ErrorKind::kShape, t.name,
                  "shape " + to_string(t.value.shape) + " does not match declared " +
                      to_string(arch[i].shape));
    }
    model.params.push_back(std::move(t));
  }
  return model;
}

void save_feature(const ExposureFeature& feature, const fs::path& path) {
  std::vector<std::uint8_t> bytes(kFeatureMagic, kFeatureMagic + 4);
  put_u32(bytes, kCheckpointVersion);
  put_floats(bytes, std::vector<float>(feature.values.begin(), feature.values.end()));
  write_bytes(path, bytes);
}

ExposureFeature load_feature(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  check_magic(bytes, kFeatureMagic, path);
  ExposureFeature f;
  if (bytes.size() != 8 + kFeatureSize * sizeof(float)) {
    throw Error(ErrorKind::kFormat, "payload", "expected 96 floats in " + path.string());
  }
  std::memcpy(f.values.data(), bytes.data() + 8, kFeatureSize * sizeof(float));
  return f;
}

}  // namespace uec
