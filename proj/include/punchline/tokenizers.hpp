#pragma once

// Subword tokenizers owned by the models: WordPiece for the bidirectional
// encoders and byte-level BPE for the causal scorer.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "punchline/corpus.hpp"

namespace punchline {

class TokenizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model input built from word-level tokens: ids include the leading and
// trailing special positions, and word_positions[i] is the half-open range
// of ids covered by word i.
struct EncodedSentence {
  std::vector<int> ids;
  std::vector<Span> word_positions;

  std::size_t length() const { return ids.size(); }
};

class WordPieceTokenizer {
 public:
  WordPieceTokenizer() = default;
  // One token per line; must contain [CLS], [SEP], [MASK] and [UNK].
  static WordPieceTokenizer from_vocab_file(const std::filesystem::path& path, bool lowercase = true);
  static WordPieceTokenizer from_tokens(std::vector<std::string> tokens, bool lowercase = true);
  // Whole-word vocabulary from the most frequent words, with the special
  // tokens first. Used by encoders trained from scratch.
  static WordPieceTokenizer build_word_vocab(std::span<const std::string> sentences,
                                             std::size_t max_size, std::size_t min_count = 1);

  std::vector<int> encode_word(std::string_view word) const;
  EncodedSentence encode(std::span<const std::string> words) const;
  EncodedSentence encode(std::string_view sentence) const { return encode(word_strings(sentence)); }

  std::optional<int> find(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool lowercase() const { return lowercase_; }

  int cls_id() const { return cls_; }
  int sep_id() const { return sep_; }
  int mask_id() const { return mask_; }
  int unk_id() const { return unk_; }

  void save(const std::filesystem::path& path) const;

 private:
  void index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  bool lowercase_ = true;
  int cls_ = -1, sep_ = -1, mask_ = -1, unk_ = -1;
};

// GPT-2 style byte-level BPE (vocab.json + merges.txt).
class BpeTokenizer {
 public:
  struct Piece {
    int id = 0;
    std::size_t begin = 0;  // byte offsets into the encoded text
    std::size_t end = 0;
  };

  BpeTokenizer() = default;
  static BpeTokenizer from_files(const std::filesystem::path& vocab_json,
                                 const std::filesystem::path& merges_txt);
  static BpeTokenizer from_tables(std::map<std::string, int> vocab,
                                  std::vector<std::pair<std::string, std::string>> merges);
  // The 256 byte symbols, one token per merge (given as raw text) in rank
  // order, then the end-of-text token.
  static BpeTokenizer byte_level(const std::vector<std::pair<std::string, std::string>>& merges = {});

  std::vector<Piece> encode(std::string_view text) const;
  std::size_t size() const { return vocab_.size(); }
  void save(const std::filesystem::path& vocab_json, const std::filesystem::path& merges_txt) const;
  // "<|endoftext|>", used as the start-of-text context.
  int eos_id() const { return eos_; }

  // Pre-tokenization split (contractions, letter runs, digit runs, other
  // symbol runs, whitespace) as byte ranges.
  static std::vector<std::pair<std::size_t, std::size_t>> pretokenize(std::string_view text);

 private:
  std::vector<std::string> bpe(const std::string& mapped) const;

  std::unordered_map<std::string, int> vocab_;
  std::unordered_map<std::string, int> merge_rank_;
  int eos_ = -1;
};

}  // namespace punchline
