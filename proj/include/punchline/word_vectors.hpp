#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "punchline/autodiff.hpp"

namespace punchline {

// Pretrained word vectors in the fastText/word2vec text format: an optional
// "count dim" header line, then "word v1 ... vd" per line.
class WordVectors {
 public:
  WordVectors() = default;
  WordVectors(std::vector<std::string> words, nn::Matrix table);

  // Keeps only words in `keep` when given.
  static WordVectors load_text(const std::filesystem::path& path,
                               const std::set<std::string>* keep = nullptr);
  void save_text(const std::filesystem::path& path) const;

  std::optional<int> find(const std::string& word) const;
  int dim() const { return static_cast<int>(table_.cols()); }
  std::size_t size() const { return words_.size(); }
  const nn::Matrix& table() const { return table_; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  nn::Matrix table_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace punchline
