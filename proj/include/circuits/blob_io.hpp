// SPDX-License-Identifier: Apache-2.0
//
// Manifest + sidecar blob storage shared by model and SAE files: a JSON
// manifest lists each tensor's shape and byte offset into a blob of
// row-major little-endian float32 values.

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace circuits {

struct TensorRecord {
  std::vector<int> shape;
  std::vector<float> values;
};

class TensorBundle {
 public:
  nlohmann::json meta = nlohmann::json::object();

  void put(const std::string& name, std::vector<int> shape, std::span<const float> values);
  const TensorRecord& get(const std::string& name) const;
  /// Returns the tensor and checks its shape.
  const std::vector<float>& get(const std::string& name, const std::vector<int>& shape) const;
  bool contains(const std::string& name) const { return tensors_.contains(name); }

  /// Writes `<manifest>` and a blob next to it named after the manifest
  /// stem with a ".bin" extension.
  void save(const std::filesystem::path& manifest) const;
  static TensorBundle load(const std::filesystem::path& manifest);

 private:
  std::map<std::string, TensorRecord> tensors_;
  std::vector<std::string> order_;
};

}  // namespace circuits
