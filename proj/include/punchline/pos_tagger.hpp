#pragma once

// Small rule-based part-of-speech tagger over word-level tokens: a
// closed-class lexicon, an open-class lexicon of frequent words, suffix
// rules and a few context rules. Extra entries can be loaded from a
// "word<TAB>TAG" file.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace punchline {

enum class PosTag { noun, verb, adj, adv, pron, det, adp, num, conj, prt, punct, other };

std::string_view to_string(PosTag tag);
std::optional<PosTag> parse_pos_tag(std::string_view text);

class PosTagger {
 public:
  PosTagger();

  // Adds or overrides lexicon entries; lines are "word<TAB>TAG".
  void load_lexicon(const std::filesystem::path& path);
  void add(const std::string& word, PosTag tag) { lexicon_[word] = tag; }

  std::vector<PosTag> tag(std::span<const std::string> words) const;

 private:
  std::optional<PosTag> lookup(const std::string& word) const;
  PosTag guess(const std::string& word) const;

  std::unordered_map<std::string, PosTag> lexicon_;
};

}  // namespace punchline
