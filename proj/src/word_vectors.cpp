#include "punchline/word_vectors.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace punchline {

WordVectors::WordVectors(std::vector<std::string> words, nn::Matrix table)
    : words_(std::move(words)), table_(std::move(table)) {
  if (static_cast<Eigen::Index>(words_.size()) != table_.rows()) {
    throw std::invalid_argument("word vectors: word count does not match table rows");
  }
  for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], static_cast<int>(i));
}

WordVectors WordVectors::load_text(const std::filesystem::path& path, const std::set<std::string>* keep) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open word vectors '" + path.string() + "'");
  std::vector<std::string> words;
  std::vector<std::vector<float>> rows;
  int dim = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    std::vector<float> values;
    float v;
    while (ss >> v) values.push_back(v);
    if (line_no == 1 && values.size() == 1) continue;  // "count dim" header
    if (dim < 0) dim = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != dim || dim == 0) {
      throw std::runtime_error("word vectors: line " + std::to_string(line_no) + " has " +
                               std::to_string(values.size()) + " values, expected " + std::to_string(dim));
    }
    if (keep && !keep->contains(word)) continue;
    words.push_back(std::move(word));
    rows.push_back(std::move(values));
  }
  if (dim <= 0) throw std::runtime_error("word vectors: '" + path.string() + "' holds no vectors");
  nn::Matrix table(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < dim; ++c) table(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  }
  return WordVectors(std::move(words), std::move(table));
}

void WordVectors::save_text(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.precision(9);
  out << words_.size() << ' ' << dim() << '\n';
  for (std::size_t i = 0; i < words_.size(); ++i) {
    out << words_[i];
    for (int c = 0; c < dim(); ++c) out << ' ' << table_(static_cast<Eigen::Index>(i), c);
    out << '\n';
  }
}

std::optional<int> WordVectors::find(const std::string& word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

}  // namespace punchline
