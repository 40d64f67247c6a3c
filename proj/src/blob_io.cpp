// SPDX-License-Identifier: Apache-2.0

#include "circuits/blob_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "circuits/common.hpp"

namespace circuits {

namespace fs = std::filesystem;

namespace {

static_assert(sizeof(float) == 4);

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
  }
}

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) {
    if (s < 0) throw FormatError("negative tensor dimension");
    n *= static_cast<std::size_t>(s);
  }
  return n;
}

}  // namespace

void TensorBundle::put(const std::string& name, std::vector<int> shape, std::span<const float> values) {
  if (element_count(shape) != values.size()) {
    throw ContractError("tensor '" + name + "' shape does not match its value count");
  }
  if (!tensors_.contains(name)) order_.push_back(name);
  tensors_[name] = TensorRecord{std::move(shape), std::vector<float>(values.begin(), values.end())};
}

const TensorRecord& TensorBundle::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw FormatError("missing tensor '" + name + "'");
  return it->second;
}

const std::vector<float>& TensorBundle::get(const std::string& name, const std::vector<int>& shape) const {
  const auto& rec = get(name);
  if (rec.shape != shape) throw FormatError("tensor '" + name + "' has unexpected shape");
  return rec.values;
}

void TensorBundle::save(const fs::path& manifest) const {
  fs::path blob = manifest;
  blob.replace_extension(".bin");

  nlohmann::json out = meta;
  out["blob"] = blob.filename().string();
  out["dtype"] = "float32-le";
  nlohmann::json list = nlohmann::json::array();

  std::ofstream bin(blob, std::ios::binary | std::ios::trunc);
  if (!bin) throw ConfigError("cannot write " + blob.string());
  std::size_t offset = 0;
  for (const auto& name : order_) {
    const auto& rec = tensors_.at(name);
    list.push_back({{"name", name}, {"shape", rec.shape}, {"offset", offset}, {"count", rec.values.size()}});
    for (float v : rec.values) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, &v, 4);
      bits = to_le(bits);
      bin.write(reinterpret_cast<const char*>(&bits), 4);
    }
    offset += rec.values.size() * 4;
  }
  if (!bin) throw ConfigError("short write to " + blob.string());
  out["tensors"] = std::move(list);

  std::ofstream js(manifest, std::ios::trunc);
  if (!js) throw ConfigError("cannot write " + manifest.string());
  js << out.dump(2) << '\n';
}

TensorBundle TensorBundle::load(const fs::path& manifest) {
  std::ifstream js(manifest);
  if (!js) throw ConfigError("cannot open " + manifest.string());
  nlohmann::json in;
  try {
    in = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }

  TensorBundle bundle;
  try {
    const fs::path blob = manifest.parent_path() / in.at("blob").get<std::string>();
    std::ifstream bin(blob, std::ios::binary);
    if (!bin) throw ConfigError("cannot open " + blob.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

    for (const auto& t : in.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const auto shape = t.at("shape").get<std::vector<int>>();
      const auto offset = t.at("offset").get<std::size_t>();
      const auto count = t.at("count").get<std::size_t>();
      if (count != element_count(shape) || offset + count * 4 > bytes.size()) {
        throw FormatError("tensor '" + name + "' lies outside " + blob.string());
      }
      std::vector<float> values(count);
      for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = 0;
        std::memcpy(&bits, bytes.data() + offset + i * 4, 4);
        bits = to_le(bits);
        std::memcpy(&values[i], &bits, 4);
      }
      bundle.put(name, shape, values);
    }
    in.erase("tensors");
    in.erase("blob");
    in.erase("dtype");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  bundle.meta = std::move(in);
  return bundle;
}

}  // namespace circuits
