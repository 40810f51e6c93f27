#include "punchline/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "punchline/hashing.hpp"

namespace punchline {

namespace {

std::string lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Byte length of a U+2010..U+203F character (dashes, curly quotes,
// ellipsis) starting at `i`, or 0.
std::size_t general_punctuation_length(std::string_view s, std::size_t i) {
  if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
      static_cast<unsigned char>(s[i + 1]) == 0x80) {
    const auto c = static_cast<unsigned char>(s[i + 2]);
    if (c >= 0x90 && c <= 0xBF) return 3;
  }
  return 0;
}

// Length of the longest common subsequence; used only to decide whether the
// covered middle region hides more than one edit.
std::size_t lcs_length(const std::vector<std::string>& a, std::size_t a0, std::size_t a1,
                       const std::vector<std::string>& b, std::size_t b0, std::size_t b1) {
  const std::size_t n = a1 - a0, m = b1 - b0;
  if (n == 0 || m == 0) return 0;
  std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = a[a0 + i - 1] == b[b0 + j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view text) {
  const auto t = lower_ascii(trim(text));
  if (t == "train") return Split::train;
  if (t == "val" || t == "valid" || t == "validation" || t == "dev") return Split::val;
  if (t == "test") return Split::test;
  return std::nullopt;
}

std::string_view to_string(HumorType type) {
  switch (type) {
    case HumorType::normal_abnormal: return "normal/abnormal";
    case HumorType::possible_impossible: return "possible/impossible";
    case HumorType::nonviolence_violence: return "non-violence/violence";
    case HumorType::good_bad_intentions: return "good/bad intentions";
    case HumorType::reasonable_absurd: return "reasonable/absurd";
    case HumorType::high_low_stature: return "high/low stature";
    case HumorType::nonobscene_obscene: return "non-obscene/obscene";
  }
  return "?";
}

std::optional<HumorType> parse_humor_type(std::string_view text) {
  const auto t = lower_ascii(trim(text));
  if (t.empty()) return std::nullopt;
  static const std::array<std::string_view, 7> kEnumNames = {
      "normal_abnormal",   "possible_impossible", "nonviolence_violence", "good_bad_intentions",
      "reasonable_absurd", "high_low_stature",    "nonobscene_obscene"};
  for (std::size_t i = 0; i < kHumorTypes.size(); ++i) {
    if (t == to_string(kHumorTypes[i]) || t == kEnumNames[i] || t == std::to_string(i + 1)) {
      return kHumorTypes[i];
    }
  }
  if (t == "reasonable/absurd response") return HumorType::reasonable_absurd;
  return std::nullopt;
}

std::string_view to_string(Setup setup) {
  return setup == Setup::single ? "single" : "paired";
}

std::optional<Setup> parse_setup(std::string_view text) {
  const auto t = lower_ascii(trim(text));
  if (t == "single" || t == "1s") return Setup::single;
  if (t == "paired" || t == "ps") return Setup::paired;
  return std::nullopt;
}

bool funny_first(std::string_view pair_id, std::uint64_t seed) {
  return (splitmix64(fnv1a64(pair_id) ^ splitmix64(seed)) >> 63) != 0;
}

std::vector<WordToken> word_tokenize(std::string_view sentence) {
  std::vector<WordToken> tokens;
  std::size_t i = 0;
  while (i < sentence.size()) {
    const auto c = static_cast<unsigned char>(sentence[i]);
    if (is_space_byte(c)) {
      ++i;
    } else if (const auto p = general_punctuation_length(sentence, i); p > 0) {
      tokens.push_back({std::string(sentence.substr(i, p)), i, i + p});
      i += p;
    } else if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < sentence.size() && is_word_byte(static_cast<unsigned char>(sentence[j])) &&
             general_punctuation_length(sentence, j) == 0) {
        ++j;
      }
      tokens.push_back({lower_ascii(sentence.substr(i, j - i)), i, j});
      i = j;
    } else {
      tokens.push_back({std::string(1, sentence[i]), i, i + 1});
      ++i;
    }
  }
  return tokens;
}

std::vector<std::string> word_strings(std::string_view sentence) {
  std::vector<std::string> out;
  for (auto& token : word_tokenize(sentence)) out.push_back(std::move(token.text));
  return out;
}

bool is_punctuation_token(std::string_view token) {
  if (!token.empty() && general_punctuation_length(token, 0) == token.size()) return true;
  return std::none_of(token.begin(), token.end(),
                      [](char c) { return is_word_byte(static_cast<unsigned char>(c)); });
}

TokenAlignment compute_token_alignment(std::vector<std::string> funny_tokens,
                                       std::vector<std::string> serious_tokens) {
  if (funny_tokens.empty() || serious_tokens.empty()) {
    throw CorpusError("alignment needs at least one token on each side");
  }
  const std::size_t nf = funny_tokens.size(), ns = serious_tokens.size();
  std::size_t prefix = 0;
  while (prefix < nf && prefix < ns && funny_tokens[prefix] == serious_tokens[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < nf - prefix && suffix < ns - prefix &&
         funny_tokens[nf - 1 - suffix] == serious_tokens[ns - 1 - suffix]) {
    ++suffix;
  }
  TokenAlignment out;
  out.funny_span = {prefix, nf - suffix};
  out.serious_span = {prefix, ns - suffix};
  if (out.funny_span.empty() && out.serious_span.empty()) {
    throw CorpusError("sentences are identical after tokenization");
  }
  out.widened = lcs_length(funny_tokens, out.funny_span.begin, out.funny_span.end, serious_tokens,
                           out.serious_span.begin, out.serious_span.end) > 0;
  out.funny_tokens = std::move(funny_tokens);
  out.serious_tokens = std::move(serious_tokens);
  return out;
}

TokenAlignment compute_token_alignment(const SentencePair& pair) {
  return compute_token_alignment(word_strings(pair.funny), word_strings(pair.serious));
}

bool alignment_round_trips(const TokenAlignment& a) {
  const auto residual = [](const std::vector<std::string>& tokens, Span span) {
    if (span.end > tokens.size() || span.begin > span.end) return std::optional<std::vector<std::string>>{};
    std::vector<std::string> out(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(span.begin));
    out.insert(out.end(), tokens.begin() + static_cast<std::ptrdiff_t>(span.end), tokens.end());
    return std::optional<std::vector<std::string>>{std::move(out)};
  };
  const auto rf = residual(a.funny_tokens, a.funny_span);
  const auto rs = residual(a.serious_tokens, a.serious_span);
  return rf && rs && *rf == *rs && !(a.funny_span.empty() && a.serious_span.empty());
}

double jaccard_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - common;
  return 1.0 - static_cast<double>(common) / static_cast<double>(uni);
}

double jaccard_distance(const SentencePair& pair) {
  return jaccard_distance(word_strings(pair.funny), word_strings(pair.serious));
}

Corpus::Corpus(std::vector<SentencePair> pairs, std::set<std::string> hq_ids)
    : pairs_(std::move(pairs)), hq_ids_(std::move(hq_ids)) {
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& p = pairs_[i];
    if (!index_.emplace(p.pair_id, i).second) {
      throw CorpusError("duplicate pair_id '" + p.pair_id + "'");
    }
    try {
      alignments_.emplace(p.pair_id, compute_token_alignment(p));
    } catch (const CorpusError& e) {
      throw CorpusError("pair '" + p.pair_id + "': " + e.what());
    }
  }
  for (const auto& id : hq_ids_) {
    const auto it = index_.find(id);
    if (it == index_.end() || pairs_[it->second].split != Split::test) {
      throw CorpusError("HQ id '" + id + "' is not a test pair");
    }
  }
}

const TokenAlignment& Corpus::alignment(const std::string& pair_id) const {
  const auto it = alignments_.find(pair_id);
  if (it == alignments_.end()) throw CorpusError("unknown pair_id '" + pair_id + "'");
  return it->second;
}

const SentencePair& Corpus::pair(const std::string& pair_id) const {
  const auto it = index_.find(pair_id);
  if (it == index_.end()) throw CorpusError("unknown pair_id '" + pair_id + "'");
  return pairs_[it->second];
}

std::size_t Corpus::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(pairs_.begin(), pairs_.end(), [&](const auto& p) { return p.split == split; }));
}

std::size_t Corpus::count(HumorType type) const {
  return static_cast<std::size_t>(std::count_if(
      pairs_.begin(), pairs_.end(), [&](const auto& p) { return p.humor_type == type; }));
}

Corpus load_corpus(const std::filesystem::path& path, const ColumnMapping& schema,
                   std::vector<RowDiagnostic>* rejected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file '" + path.string() + "'");

  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    if (row == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) {
      for (auto f : split_tabs(line)) header.emplace_back(trim(f));
      break;
    }
  }
  if (header.empty()) throw CorpusError("no pairs: '" + path.string() + "' is empty");

  const auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) throw CorpusError("missing column '" + name + "' in header");
      return std::nullopt;
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto id_col = column(schema.pair_id, false);
  const auto funny_col = *column(schema.funny, true);
  const auto serious_col = *column(schema.serious, true);
  const auto split_col = *column(schema.split, true);
  const auto quality_col = column(schema.quality, false);
  const auto type_col = column(schema.humor_type, false);

  std::vector<SentencePair> pairs;
  std::set<std::string> seen;
  std::size_t data_rows = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    ++data_rows;
    const auto fields = split_tabs(line);
    const auto where = "row " + std::to_string(row) + ": ";
    if (fields.size() < header.size()) {
      // Trailing optional columns may be left off.
      const std::size_t needed =
          std::max({funny_col, serious_col, split_col, id_col.value_or(0)}) + 1;
      if (fields.size() < needed) {
        throw CorpusError(where + "expected " + std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()));
      }
    } else if (fields.size() > header.size()) {
      throw CorpusError(where + "expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    const auto field = [&](std::optional<std::size_t> col) -> std::string_view {
      return col && *col < fields.size() ? trim(fields[*col]) : std::string_view{};
    };

    SentencePair p;
    p.pair_id = id_col ? std::string(field(id_col)) : std::to_string(data_rows);
    if (p.pair_id.empty()) throw CorpusError(where + "empty pair_id");
    if (!seen.insert(p.pair_id).second) {
      throw CorpusError(where + "duplicate pair_id '" + p.pair_id + "'");
    }
    p.funny = std::string(field(funny_col));
    p.serious = std::string(field(serious_col));
    const auto split = parse_split(field(split_col));
    if (!split) throw CorpusError(where + "unknown split '" + std::string(field(split_col)) + "'");
    p.split = *split;
    if (const auto q = field(quality_col); !q.empty()) {
      try {
        std::size_t used = 0;
        p.quality = std::stoi(std::string(q), &used);
        if (used != q.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw CorpusError(where + "quality '" + std::string(q) + "' is not an integer");
      }
    }
    if (const auto t = field(type_col); !t.empty() && t != "-" && t != "none") {
      p.humor_type = parse_humor_type(t);
      if (!p.humor_type) throw CorpusError(where + "unknown humor_type '" + std::string(t) + "'");
    }

    std::string problem;
    if (word_strings(p.funny).empty() || word_strings(p.serious).empty()) {
      problem = "empty sentence";
    } else if (word_strings(p.funny) == word_strings(p.serious)) {
      problem = "funny and serious sentences are identical";
    }
    if (!problem.empty()) {
      if (rejected) rejected->push_back({row, "pair '" + p.pair_id + "': " + problem});
      continue;
    }
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw CorpusError("no pairs in '" + path.string() + "'");

  std::optional<int> hq_level = schema.hq_quality;
  if (!hq_level) {
    for (const auto& p : pairs) {
      if (p.quality && (!hq_level || *p.quality > *hq_level)) hq_level = p.quality;
    }
  }
  std::set<std::string> hq;
  if (hq_level) {
    for (const auto& p : pairs) {
      if (p.split == Split::test && p.quality == hq_level) hq.insert(p.pair_id);
    }
  }
  return Corpus(std::move(pairs), std::move(hq));
}

Corpus filter(const Corpus& corpus, const PairFilter& predicate) {
  std::vector<SentencePair> kept;
  std::set<std::string> hq;
  for (const auto& p : corpus.pairs()) {
    if (predicate.split && p.split != *predicate.split) continue;
    if (predicate.humor_type && p.humor_type != predicate.humor_type) continue;
    if (predicate.hq_only && !corpus.is_hq(p.pair_id)) continue;
    if (predicate.min_jaccard) {
      const auto& a = corpus.alignment(p.pair_id);
      if (!(jaccard_distance(a.funny_tokens, a.serious_tokens) > *predicate.min_jaccard)) continue;
    }
    if (corpus.is_hq(p.pair_id)) hq.insert(p.pair_id);
    kept.push_back(p);
  }
  return Corpus(std::move(kept), std::move(hq));
}

std::vector<Instance> make_instances(const Corpus& corpus, Setup setup, std::uint64_t seed) {
  std::vector<Instance> out;
  out.reserve(setup == Setup::single ? 2 * corpus.size() : corpus.size());
  for (const auto& p : corpus.pairs()) {
    if (setup == Setup::single) {
      out.push_back({p.pair_id, p.funny, {}, 1});
      out.push_back({p.pair_id, p.serious, {}, 0});
    } else if (funny_first(p.pair_id, seed)) {
      out.push_back({p.pair_id, p.funny, p.serious, 1});
    } else {
      out.push_back({p.pair_id, p.serious, p.funny, 0});
    }
  }
  return out;
}

void write_prepared_corpus(const Corpus& corpus, const std::filesystem::path& path,
                           std::uint64_t seed) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot write '" + path.string() + "'");
  for (const auto& p : corpus.pairs()) {
    const auto& a = corpus.alignment(p.pair_id);
    nlohmann::json pair = {
        {"pair_id", p.pair_id},
        {"funny", p.funny},
        {"serious", p.serious},
        {"split", to_string(p.split)},
        {"quality", p.quality ? nlohmann::json(*p.quality) : nlohmann::json(nullptr)},
        {"humor_type", p.humor_type ? nlohmann::json(to_string(*p.humor_type)) : nlohmann::json(nullptr)},
        {"hq", corpus.is_hq(p.pair_id)},
        {"funny_first", funny_first(p.pair_id, seed)},
    };
    nlohmann::json alignment = {
        {"funny_tokens", a.funny_tokens},
        {"serious_tokens", a.serious_tokens},
        {"funny_span", {a.funny_span.begin, a.funny_span.end}},
        {"serious_span", {a.serious_span.begin, a.serious_span.end}},
        {"widened", a.widened},
    };
    out << nlohmann::json{{"pair", pair}, {"alignment", alignment}}.dump() << '\n';
  }
}

Corpus read_prepared_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open prepared corpus '" + path.string() + "'");
  std::vector<SentencePair> pairs;
  std::set<std::string> hq;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line).at("pair");
      SentencePair p;
      p.pair_id = j.at("pair_id").get<std::string>();
      p.funny = j.at("funny").get<std::string>();
      p.serious = j.at("serious").get<std::string>();
      p.split = parse_split(j.at("split").get<std::string>()).value();
      if (!j.at("quality").is_null()) p.quality = j.at("quality").get<int>();
      if (!j.at("humor_type").is_null()) {
        p.humor_type = parse_humor_type(j.at("humor_type").get<std::string>()).value();
      }
      if (j.value("hq", false)) hq.insert(p.pair_id);
      pairs.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw CorpusError("row " + std::to_string(row) + ": malformed record: " + e.what());
    }
  }
  if (pairs.empty()) throw CorpusError("no pairs in '" + path.string() + "'");
  return Corpus(std::move(pairs), std::move(hq));
}

}  // namespace punchline
