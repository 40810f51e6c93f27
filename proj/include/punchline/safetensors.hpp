#pragma once

// Reader/writer for the safetensors container: an 8-byte little-endian
// header length, a JSON header mapping names to dtype/shape/byte offsets,
// then the raw tensor bytes. F32, F16 and BF16 are read; F32 is written.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "punchline/autodiff.hpp"

namespace punchline {

class WeightsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::vector<std::int64_t> shape;
  // 1-D tensors become a single row; N-D tensors keep their last dimension
  // as columns.
  nn::Matrix value;
};

struct TensorFile {
  std::map<std::string, NamedTensor> tensors;
  std::map<std::string, std::string> metadata;

  bool contains(const std::string& name) const { return tensors.contains(name); }
  // Throws WeightsError naming the tensor when absent.
  const NamedTensor& at(const std::string& name) const;
};

TensorFile read_safetensors(const std::filesystem::path& path);
void write_safetensors(const std::filesystem::path& path,
                       const std::map<std::string, const nn::Matrix*>& tensors,
                       const std::map<std::string, std::string>& metadata = {});

}  // namespace punchline
