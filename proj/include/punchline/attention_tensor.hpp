#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace punchline {

// Post-softmax attention of one sentence: weights[l][h][q] is a distribution
// over key positions. Positions include the two special tokens, so
// seq_len = subword count + 2. Layer/head indices are 0-based here.
struct AttentionTensor {
  std::string sentence_id;
  int layers = 0;
  int heads = 0;
  int seq_len = 0;
  std::vector<float> weights;  // row-major [layers][heads][seq_len][seq_len]

  static AttentionTensor zeros(int layers, int heads, int seq_len);

  std::size_t offset(int layer, int head, int query) const {
    return ((static_cast<std::size_t>(layer) * heads + head) * seq_len + query) * seq_len;
  }
  float at(int layer, int head, int query, int key) const { return weights[offset(layer, head, query) + key]; }
  float& at(int layer, int head, int query, int key) { return weights[offset(layer, head, query) + key]; }
  std::span<const float> row(int layer, int head, int query) const {
    return {weights.data() + offset(layer, head, query), static_cast<std::size_t>(seq_len)};
  }
  std::span<float> row(int layer, int head, int query) {
    return {weights.data() + offset(layer, head, query), static_cast<std::size_t>(seq_len)};
  }
  // Attention received by `key`, summed over every query row of the head.
  double received(int layer, int head, int key) const;

  // Largest deviation of a row sum from 1, or a negative entry's magnitude.
  double max_row_error() const;
};

// 1-based head coordinates as printed in reports ("10-6" is the sixth head
// of the tenth layer).
struct HeadId {
  int layer = 1;
  int head = 1;

  static std::optional<HeadId> parse(std::string_view text);
  std::string str() const { return std::to_string(layer) + "-" + std::to_string(head); }
  friend bool operator==(const HeadId&, const HeadId&) = default;
};

// Binary interchange file. Layout (little-endian):
//   8 bytes  magic "PLATTN01"
//   u32      record count
//   per record: u32 layers, u32 heads, u32 seq_len, u32 id byte length,
//               id bytes, then layers*heads*seq_len*seq_len f32 row-major.
void write_attention_file(const std::filesystem::path& path, std::span<const AttentionTensor> tensors);
std::vector<AttentionTensor> read_attention_file(const std::filesystem::path& path);

}  // namespace punchline
