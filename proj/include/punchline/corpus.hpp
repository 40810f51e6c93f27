#pragma once

// Aligned funny/serious headline pairs: loading, word-level alignment of the
// edited chunk, Jaccard distance, instance construction and subsetting.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace punchline {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { train, val, test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

// The seven opposition dimensions annotated on part of the test split.
enum class HumorType {
  normal_abnormal,
  possible_impossible,
  nonviolence_violence,
  good_bad_intentions,
  reasonable_absurd,
  high_low_stature,
  nonobscene_obscene,
};

inline constexpr std::array<HumorType, 7> kHumorTypes = {
    HumorType::normal_abnormal,     HumorType::possible_impossible,
    HumorType::nonviolence_violence, HumorType::good_bad_intentions,
    HumorType::reasonable_absurd,   HumorType::high_low_stature,
    HumorType::nonobscene_obscene,
};

std::string_view to_string(HumorType type);
// Accepts the slash form ("non-obscene/obscene"), the enum spelling
// ("nonobscene_obscene") or the 1-based index ("7").
std::optional<HumorType> parse_humor_type(std::string_view text);

struct SentencePair {
  std::string pair_id;
  std::string funny;
  std::string serious;
  Split split = Split::train;
  std::optional<int> quality;
  std::optional<HumorType> humor_type;
};

// Whether the funny sentence is shown first for this pair under `seed`.
// Depends only on (pair_id, seed), so subsets keep their orientation.
bool funny_first(std::string_view pair_id, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Word-level tokenization

struct WordToken {
  std::string text;  // case-folded
  std::size_t begin = 0;  // byte offsets into the source sentence
  std::size_t end = 0;
};

// Runs of letters/digits (any non-ASCII byte counts as a letter) form one
// token; every other non-space character is a token of its own. ASCII
// letters are lower-cased.
std::vector<WordToken> word_tokenize(std::string_view sentence);
std::vector<std::string> word_strings(std::string_view sentence);
bool is_punctuation_token(std::string_view token);

// Half-open token index range.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end == begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct TokenAlignment {
  std::vector<std::string> funny_tokens;
  std::vector<std::string> serious_tokens;
  Span funny_span;
  Span serious_span;
  // Set when the differing tokens form several regions and were covered by
  // one span.
  bool widened = false;
};

// Longest-common-prefix, then longest-common-suffix over the remainder.
// Throws CorpusError when the token sequences are identical or empty.
TokenAlignment compute_token_alignment(std::vector<std::string> funny_tokens,
                                       std::vector<std::string> serious_tokens);
TokenAlignment compute_token_alignment(const SentencePair& pair);

// Residual sequences after deleting both spans are equal.
bool alignment_round_trips(const TokenAlignment& alignment);

double jaccard_distance(const std::vector<std::string>& a,
                        const std::vector<std::string>& b);
double jaccard_distance(const SentencePair& pair);

// ---------------------------------------------------------------------------
// Corpus

struct ColumnMapping {
  std::string pair_id = "pair_id";
  std::string funny = "funny";
  std::string serious = "serious";
  std::string split = "split";
  std::string quality = "quality";
  std::string humor_type = "humor_type";
  // Test pairs whose quality equals this value form the HQ subset. When
  // unset, the maximum quality observed in the file is used.
  std::optional<int> hq_quality;
};

struct RowDiagnostic {
  std::size_t row = 0;  // 1-based line number in the file
  std::string message;
};

class Corpus {
 public:
  Corpus() = default;
  // Aligns every pair. Throws CorpusError on duplicate ids, on HQ ids that
  // are not test pairs, or on pairs that cannot be aligned.
  Corpus(std::vector<SentencePair> pairs, std::set<std::string> hq_ids);

  const std::vector<SentencePair>& pairs() const { return pairs_; }
  const std::set<std::string>& hq_ids() const { return hq_ids_; }
  bool is_hq(const std::string& pair_id) const { return hq_ids_.contains(pair_id); }
  const TokenAlignment& alignment(const std::string& pair_id) const;
  const SentencePair& pair(const std::string& pair_id) const;
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  std::size_t count(Split split) const;
  std::size_t count(HumorType type) const;

 private:
  std::vector<SentencePair> pairs_;
  std::set<std::string> hq_ids_;
  std::map<std::string, TokenAlignment> alignments_;
  std::map<std::string, std::size_t> index_;
};

// Reads a UTF-8 tab-separated file with a header row. Structural problems
// (missing columns, bad split value, duplicate id, no pairs) throw
// CorpusError naming the row; pairs whose two sentences are equal after
// tokenization are skipped and reported through `rejected`.
Corpus load_corpus(const std::filesystem::path& path,
                   const ColumnMapping& schema = {},
                   std::vector<RowDiagnostic>* rejected = nullptr);

// Conjunction of the set fields.
struct PairFilter {
  std::optional<Split> split;
  std::optional<double> min_jaccard;  // strictly greater than
  std::optional<HumorType> humor_type;
  bool hq_only = false;
};

Corpus filter(const Corpus& corpus, const PairFilter& predicate);

enum class Setup { single, paired };

std::string_view to_string(Setup setup);
std::optional<Setup> parse_setup(std::string_view text);

// `second` is empty in the single-sentence setup. Label 1 means the (first)
// sentence is the funny one.
struct Instance {
  std::string pair_id;
  std::string first;
  std::string second;
  int label = 0;
};

std::vector<Instance> make_instances(const Corpus& corpus, Setup setup,
                                     std::uint64_t seed);

// One JSON object per line holding the pair record and its alignment.
void write_prepared_corpus(const Corpus& corpus,
                           const std::filesystem::path& path,
                           std::uint64_t seed);
Corpus read_prepared_corpus(const std::filesystem::path& path);

}  // namespace punchline
