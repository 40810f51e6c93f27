#include "punchline/tokenizers.hpp"

#include <algorithm>
#include <array>
#include <climits>
#include <fstream>

#include <json.hpp>

namespace punchline {

namespace {

constexpr std::size_t kMaxWordChars = 100;

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// GPT-2's reversible byte -> printable code point table.
const std::array<std::string, 256>& byte_symbols() {
  static const std::array<std::string, 256> table = [] {
    std::array<char32_t, 256> cp{};
    std::array<bool, 256> direct{};
    for (int b = '!'; b <= '~'; ++b) direct[b] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) direct[b] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) direct[b] = true;
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) cp[b] = direct[b] ? static_cast<char32_t>(b) : next++;
    std::array<std::string, 256> out;
    for (int b = 0; b < 256; ++b) append_utf8(out[b], cp[b]);
    return out;
  }();
  return table;
}

bool is_letter(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

// ---------------------------------------------------------------------------
// WordPiece

void WordPieceTokenizer::index() {
  ids_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<int>(i));
  const auto need = [&](const char* name) {
    const auto it = ids_.find(name);
    if (it == ids_.end()) throw TokenizerError(std::string("vocabulary lacks ") + name);
    return it->second;
  };
  cls_ = need("[CLS]");
  sep_ = need("[SEP]");
  mask_ = need("[MASK]");
  unk_ = need("[UNK]");
}

WordPieceTokenizer WordPieceTokenizer::from_vocab_file(const std::filesystem::path& path, bool lowercase) {
  std::ifstream in(path);
  if (!in) throw TokenizerError("cannot open vocabulary '" + path.string() + "'");
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens), lowercase);
}

WordPieceTokenizer WordPieceTokenizer::from_tokens(std::vector<std::string> tokens, bool lowercase) {
  WordPieceTokenizer t;
  t.tokens_ = std::move(tokens);
  t.lowercase_ = lowercase;
  t.index();
  return t;
}

WordPieceTokenizer WordPieceTokenizer::build_word_vocab(std::span<const std::string> sentences,
                                                        std::size_t max_size, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences) {
    for (auto& w : word_strings(s)) ++counts[w];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  for (const auto& [word, count] : ranked) {
    if (tokens.size() >= max_size || count < min_count) break;
    if (word.rfind("[", 0) == 0 && word.size() > 1) continue;
    tokens.push_back(word);
  }
  return from_tokens(std::move(tokens), true);
}

std::optional<int> WordPieceTokenizer::find(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> WordPieceTokenizer::encode_word(std::string_view word) const {
  std::string text(word);
  if (lowercase_) {
    for (char& c : text) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
  }
  if (const auto whole = find(text)) return {*whole};
  if (text.empty() || text.size() > kMaxWordChars) return {unk_};
  std::vector<int> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.size();
    std::optional<int> match;
    while (end > start) {
      std::string piece = text.substr(start, end - start);
      if (start > 0) piece = "##" + piece;
      if ((match = find(piece))) break;
      --end;
    }
    if (!match) return {unk_};
    out.push_back(*match);
    start = end;
  }
  return out;
}

EncodedSentence WordPieceTokenizer::encode(std::span<const std::string> words) const {
  EncodedSentence out;
  out.ids.push_back(cls_);
  for (const auto& w : words) {
    const auto pieces = encode_word(w);
    const std::size_t begin = out.ids.size();
    out.ids.insert(out.ids.end(), pieces.begin(), pieces.end());
    out.word_positions.push_back({begin, out.ids.size()});
  }
  out.ids.push_back(sep_);
  return out;
}

void WordPieceTokenizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw TokenizerError("cannot write vocabulary '" + path.string() + "'");
  for (const auto& t : tokens_) out << t << '\n';
}

// ---------------------------------------------------------------------------
// Byte-level BPE

BpeTokenizer BpeTokenizer::from_tables(std::map<std::string, int> vocab,
                                       std::vector<std::pair<std::string, std::string>> merges) {
  BpeTokenizer t;
  for (auto& [k, v] : vocab) t.vocab_.emplace(k, v);
  for (std::size_t i = 0; i < merges.size(); ++i) {
    t.merge_rank_.emplace(merges[i].first + ' ' + merges[i].second, static_cast<int>(i));
  }
  if (const auto it = t.vocab_.find("<|endoftext|>"); it != t.vocab_.end()) t.eos_ = it->second;
  return t;
}

BpeTokenizer BpeTokenizer::byte_level(const std::vector<std::pair<std::string, std::string>>& merges) {
  const auto& sym = byte_symbols();
  const auto mapped = [&](const std::string& raw) {
    std::string out;
    for (const unsigned char c : raw) out += sym[c];
    return out;
  };
  std::map<std::string, int> vocab;
  for (int b = 0; b < 256; ++b) vocab.emplace(sym[static_cast<std::size_t>(b)], b);
  std::vector<std::pair<std::string, std::string>> table;
  for (const auto& [a, b] : merges) {
    table.emplace_back(mapped(a), mapped(b));
    vocab.emplace(mapped(a + b), static_cast<int>(vocab.size()));
  }
  vocab.emplace("<|endoftext|>", static_cast<int>(vocab.size()));
  return from_tables(std::move(vocab), std::move(table));
}

BpeTokenizer BpeTokenizer::from_files(const std::filesystem::path& vocab_json,
                                      const std::filesystem::path& merges_txt) {
  std::ifstream vin(vocab_json);
  if (!vin) throw TokenizerError("cannot open '" + vocab_json.string() + "'");
  std::map<std::string, int> vocab;
  try {
    const auto table = nlohmann::json::parse(vin);
    for (const auto& [k, v] : table.items()) vocab.emplace(k, v.get<int>());
  } catch (const std::exception& e) {
    throw TokenizerError("bad vocab json: " + std::string(e.what()));
  }
  std::ifstream min(merges_txt);
  if (!min) throw TokenizerError("cannot open '" + merges_txt.string() + "'");
  std::vector<std::pair<std::string, std::string>> merges;
  std::string line;
  while (std::getline(min, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("#version", 0) == 0) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw TokenizerError("bad merge line '" + line + "'");
    merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  return from_tables(std::move(vocab), std::move(merges));
}

void BpeTokenizer::save(const std::filesystem::path& vocab_json, const std::filesystem::path& merges_txt) const {
  nlohmann::json vocab = nlohmann::json::object();
  for (const auto& [k, v] : vocab_) vocab[k] = v;
  std::ofstream vout(vocab_json, std::ios::trunc);
  if (!vout) throw TokenizerError("cannot write '" + vocab_json.string() + "'");
  vout << vocab.dump() << '\n';
  std::vector<const std::string*> ordered(merge_rank_.size());
  for (const auto& [pair, rank] : merge_rank_) ordered[static_cast<std::size_t>(rank)] = &pair;
  std::ofstream mout(merges_txt, std::ios::trunc);
  if (!mout) throw TokenizerError("cannot write '" + merges_txt.string() + "'");
  mout << "#version: 0.2\n";
  for (const auto* pair : ordered) mout << *pair << '\n';
}

std::vector<std::pair<std::size_t, std::size_t>> BpeTokenizer::pretokenize(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t n = text.size();
  const auto at = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  std::size_t i = 0;
  while (i < n) {
    // Contractions.
    if (at(i) == '\'') {
      static constexpr std::array<std::string_view, 7> kSuffixes = {"s", "t", "re", "ve", "m", "ll", "d"};
      bool matched = false;
      for (const auto suf : kSuffixes) {
        if (text.substr(i + 1, suf.size()) == suf) {
          out.emplace_back(i, i + 1 + suf.size());
          i += 1 + suf.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    const std::size_t j = (at(i) == ' ' && i + 1 < n && !is_space(at(i + 1))) ? i + 1 : i;
    if (!is_space(at(j))) {
      std::size_t k = j;
      if (is_letter(at(j))) {
        while (k < n && is_letter(at(k))) ++k;
      } else if (is_digit(at(j))) {
        while (k < n && is_digit(at(k))) ++k;
      } else {
        while (k < n && !is_space(at(k)) && !is_letter(at(k)) && !is_digit(at(k))) ++k;
      }
      out.emplace_back(i, k);
      i = k;
      continue;
    }
    // Whitespace run: leave the last space for the following word.
    std::size_t k = i;
    while (k < n && is_space(at(k))) ++k;
    if (k < n && k - i > 1) --k;
    out.emplace_back(i, k);
    i = k;
  }
  return out;
}

std::vector<std::string> BpeTokenizer::bpe(const std::string& raw) const {
  const auto& sym = byte_symbols();
  std::vector<std::string> parts;
  for (unsigned char c : raw) parts.push_back(sym[c]);
  while (parts.size() > 1) {
    int best = INT_MAX;
    std::size_t best_at = 0;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      const auto it = merge_rank_.find(parts[i] + ' ' + parts[i + 1]);
      if (it != merge_rank_.end() && it->second < best) {
        best = it->second;
        best_at = i;
      }
    }
    if (best == INT_MAX) break;
    const std::string left = parts[best_at], right = parts[best_at + 1];
    std::vector<std::string> merged;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i + 1 < parts.size() && parts[i] == left && parts[i + 1] == right) {
        merged.push_back(left + right);
        ++i;
      } else {
        merged.push_back(parts[i]);
      }
    }
    parts = std::move(merged);
  }
  return parts;
}

std::vector<BpeTokenizer::Piece> BpeTokenizer::encode(std::string_view text) const {
  std::vector<Piece> out;
  for (const auto& [begin, end] : pretokenize(text)) {
    std::size_t offset = begin;
    const std::string raw(text.substr(begin, end - begin));
    for (const auto& part : bpe(raw)) {
      // Each merged symbol spans as many source bytes as symbols it joined.
      std::size_t bytes = 0;
      for (std::size_t p = 0; p < part.size();) {
        const auto lead = static_cast<unsigned char>(part[p]);
        const std::size_t len = lead < 0x80 ? 1 : lead < 0xE0 ? 2 : lead < 0xF0 ? 3 : 4;
        p += len;
        ++bytes;
      }
      const auto it = vocab_.find(part);
      if (it == vocab_.end()) throw TokenizerError("BPE symbol missing from vocabulary");
      out.push_back({it->second, offset, offset + bytes});
      offset += bytes;
    }
  }
  return out;
}

}  // namespace punchline
