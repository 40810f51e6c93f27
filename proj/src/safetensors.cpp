#include "punchline/safetensors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace punchline {

namespace {

static_assert(std::endian::native == std::endian::little, "safetensors IO assumes little-endian");

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = (h & 0x8000u) << 16;
  std::uint32_t exp = (h >> 10) & 0x1f;
  std::uint32_t mant = h & 0x3ffu;
  std::uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {
      exp = 127 - 15 + 1;
      while ((mant & 0x400u) == 0) {
        mant <<= 1;
        --exp;
      }
      mant &= 0x3ffu;
      bits = sign | (exp << 23) | (mant << 13);
    }
  } else if (exp == 31) {
    bits = sign | 0x7f800000u | (mant << 13);
  } else {
    bits = sign | ((exp - 15 + 127) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(bits);
}

}  // namespace

const NamedTensor& TensorFile::at(const std::string& name) const {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw WeightsError("missing tensor '" + name + "'");
  return it->second;
}

TensorFile read_safetensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightsError("cannot open weights '" + path.string() + "'");
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || header_len > (1ULL << 30)) throw WeightsError("bad safetensors header in '" + path.string() + "'");
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  const auto data_start = static_cast<std::streamoff>(8 + header_len);

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header);
  } catch (const std::exception& e) {
    throw WeightsError("bad safetensors header json: " + std::string(e.what()));
  }

  TensorFile out;
  for (const auto& [name, info] : j.items()) {
    if (name == "__metadata__") {
      for (const auto& [k, v] : info.items()) out.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
      continue;
    }
    const auto dtype = info.at("dtype").get<std::string>();
    const auto shape = info.at("shape").get<std::vector<std::int64_t>>();
    const auto offsets = info.at("data_offsets").get<std::vector<std::uint64_t>>();
    std::int64_t count = 1;
    for (auto d : shape) count *= d;
    const std::size_t width = dtype == "F32" ? 4 : (dtype == "F16" || dtype == "BF16") ? 2 : 0;
    if (width == 0) throw WeightsError("tensor '" + name + "': unsupported dtype " + dtype);
    if (offsets.size() != 2 || offsets[1] - offsets[0] != static_cast<std::uint64_t>(count) * width) {
      throw WeightsError("tensor '" + name + "': size does not match shape");
    }
    const Eigen::Index cols = shape.empty() ? 1 : shape.back();
    const Eigen::Index rows = cols == 0 ? 0 : count / cols;
    NamedTensor t{shape, nn::Matrix(rows, cols)};
    std::vector<char> raw(offsets[1] - offsets[0]);
    in.seekg(data_start + static_cast<std::streamoff>(offsets[0]));
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!in) throw WeightsError("tensor '" + name + "': truncated file");
    float* dst = t.value.data();
    if (dtype == "F32") {
      std::memcpy(dst, raw.data(), raw.size());
    } else {
      for (std::int64_t i = 0; i < count; ++i) {
        std::uint16_t h;
        std::memcpy(&h, raw.data() + 2 * i, 2);
        dst[i] = dtype == "F16" ? half_to_float(h)
                                : std::bit_cast<float>(static_cast<std::uint32_t>(h) << 16);
      }
    }
    out.tensors.emplace(name, std::move(t));
  }
  return out;
}

void write_safetensors(const std::filesystem::path& path,
                       const std::map<std::string, const nn::Matrix*>& tensors,
                       const std::map<std::string, std::string>& metadata) {
  nlohmann::json header = nlohmann::json::object();
  if (!metadata.empty()) header["__metadata__"] = metadata;
  std::uint64_t offset = 0;
  for (const auto& [name, m] : tensors) {
    const std::uint64_t bytes = static_cast<std::uint64_t>(m->size()) * sizeof(float);
    std::vector<std::int64_t> shape;
    if (m->rows() == 1) {
      shape = {m->cols()};
    } else {
      shape = {m->rows(), m->cols()};
    }
    header[name] = {{"dtype", "F32"}, {"shape", shape}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string h = header.dump();
  while (h.size() % 8 != 0) h += ' ';
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WeightsError("cannot write '" + path.string() + "'");
  const std::uint64_t len = h.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& [name, m] : tensors) {
    out.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(m->size() * sizeof(float)));
  }
  if (!out) throw WeightsError("short write to '" + path.string() + "'");
}

}  // namespace punchline
