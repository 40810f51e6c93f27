#pragma once

// Attention statistics: Jensen-Shannon distances between heads, attention
// received by special positions and by the edited chunk, edit localization
// and the random-replacement probe.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "punchline/attention_tensor.hpp"
#include "punchline/classifier.hpp"
#include "punchline/corpus.hpp"
#include "punchline/encoders.hpp"
#include "punchline/language_model.hpp"
#include "punchline/pos_tagger.hpp"

namespace punchline {

// Base-2 Jensen-Shannon divergence; terms with zero mass contribute 0.
// Throws std::invalid_argument on a length mismatch.
double js_divergence(std::span<const double> p, std::span<const double> q);
double js_divergence(std::span<const float> p, std::span<const float> q);

// Attention of one sentence together with the word -> position map
// (word_positions[i] is the range of tensor positions of word i; the two
// special positions are 0 and seq_len - 1).
struct SentenceAttention {
  std::string sentence_id;
  std::string text;
  std::vector<std::string> words;
  std::vector<Span> word_positions;
  AttentionTensor attention;
};

// Word positions cover 1..seq_len-2 exactly once, in order.
bool valid_chunk_map(std::span<const Span> word_positions, int seq_len);
// Tensor positions of the words in `words`.
std::vector<int> chunk_positions(std::span<const Span> word_positions, Span words);

SentenceAttention extract_attention(TransformerEncoder& encoder, const std::string& sentence_id,
                                    std::string_view sentence);
// Rejects classifiers whose encoder is not a transformer.
SentenceAttention extract_attention(HumorClassifier& classifier, const std::string& sentence_id,
                                    std::string_view sentence);

// Per-head values, 0-based (layer, head).
struct HeadMatrix {
  int layers = 0;
  int heads = 0;
  std::vector<double> values;

  static HeadMatrix zeros(int layers, int heads);
  double& at(int layer, int head) { return values[static_cast<std::size_t>(layer * heads + head)]; }
  double at(int layer, int head) const { return values[static_cast<std::size_t>(layer * heads + head)]; }
  double at(HeadId id) const { return at(id.layer - 1, id.head - 1); }
};

// Head with the largest value (first in layer-major order on ties).
HeadId argmax_head(const HeadMatrix& m);

// Mean over the seq_len query rows of the JS divergence between the two
// tensors' rows at one head. Tensors must share their shape.
double sentence_head_distance(const AttentionTensor& a, const AttentionTensor& b, int layer, int head);
HeadMatrix sentence_distance_matrix(const AttentionTensor& a, const AttentionTensor& b);

// Per-head mean over sentences of sentence_head_distance, for two models
// run on the same sentences (same order, same tokenizer).
HeadMatrix model_head_distance(std::span<const AttentionTensor> model_a, std::span<const AttentionTensor> model_b);
double model_head_distance(std::span<const AttentionTensor> model_a, std::span<const AttentionTensor> model_b,
                           HeadId head);

// Row means of a head matrix.
std::vector<double> layer_distance(const HeadMatrix& m);

// Distance between a funny sentence and its serious counterpart at one
// head; empty when their model lengths differ.
std::optional<double> funny_serious_distance(const AttentionTensor& funny, const AttentionTensor& serious,
                                             HeadId head);

struct FunnySeriousDistance {
  HeadMatrix distance;  // mean over the pairs used
  std::size_t used = 0;
  std::size_t excluded = 0;  // pairs whose model lengths differ
  std::vector<std::string> excluded_ids;
};

FunnySeriousDistance funny_serious_distance(std::span<const AttentionTensor> funny,
                                            std::span<const AttentionTensor> serious);

// Attention received by `positions`, summed over every layer, head and
// query row.
double received_total(const AttentionTensor& t, std::span<const int> positions);

struct SpecialPositionTotals {
  // Means over sentences.
  double first_word = 0.0;
  double last_word = 0.0;
  double cls = 0.0;
  double sep = 0.0;
  // Per-sentence values, in input order, for paired comparisons.
  std::vector<double> first_word_values, last_word_values, cls_values, sep_values;
  std::size_t sentences = 0;
};

// First and last words skip punctuation tokens (falling back to the
// first/last word when every word is punctuation); a word's total is the
// sum over its subword positions.
SpecialPositionTotals special_position_attention(std::span<const SentenceAttention> sentences);

struct PairAttention {
  std::string pair_id;
  SentenceAttention funny;
  SentenceAttention serious;
  TokenAlignment alignment;
};

struct ChunkMaps {
  // Received attention summed over query rows, divided by the number of
  // positions in the region, averaged over the pairs where the region is
  // non-empty: (a) edited chunk of the funny sentence, (b) its other word
  // positions, (c) the replaced chunk of the serious sentence, (d) its
  // other word positions.
  HeadMatrix funny_chunk, funny_other, serious_chunk, serious_other;
  // Un-normalized sums over the funny sentences, averaged over all pairs;
  // chunk + other + special equals the mean funny length at every head.
  HeadMatrix funny_chunk_raw, funny_other_raw, funny_special_raw;
  double mean_funny_length = 0.0;
  std::size_t pairs = 0;
  std::size_t empty_funny_chunk = 0;    // excluded from (a)
  std::size_t empty_serious_chunk = 0;  // excluded from (c)
  std::size_t empty_funny_other = 0;    // excluded from (b)
  std::size_t empty_serious_other = 0;  // excluded from (d)
};

ChunkMaps chunk_attention_maps(std::span<const PairAttention> pairs);

// Attention received by each word at one head (0-based), summed over its
// subword positions and every query row.
std::vector<double> word_received(const SentenceAttention& s, int layer, int head);

struct Localization {
  std::size_t predicted_word = 0;
  bool hit = false;
};

// Word receiving the most attention at `head` (first on ties); a hit when
// it lies inside the gold span.
Localization localize_edit(const SentenceAttention& s, HeadId head, Span gold);
Localization localize_from_totals(std::span<const double> word_totals, Span gold);

// Index of the last non-punctuation word (or the last word).
std::size_t last_word_baseline(std::span<const std::string> words);
// First word tagged `tag`, else last_word_baseline.
std::size_t pos_baseline(std::span<const std::string> words, std::span<const PosTag> tags, PosTag tag);
// Word with the lowest log-probability in context (first on ties).
std::size_t lm_baseline(std::span<const double> word_logprobs);

// Tag most often found inside the edited chunks of funny sentences.
PosTag most_edited_tag(const PosTagger& tagger, std::span<const TokenAlignment> alignments);

struct LocalizationReport {
  HeadId head;
  std::size_t sentences = 0;
  std::size_t skipped = 0;  // funny sentences without an edited word
  double head_accuracy = 0.0;
  double last_word_accuracy = 0.0;
  double pos_accuracy = 0.0;
  double lm_accuracy = 0.0;
  PosTag pos_tag = PosTag::verb;
  std::vector<double> head_hits, last_word_hits, pos_hits, lm_hits;
};

// Runs the head and the three baselines over the funny sentences of
// `pairs`. `lm` may be null, in which case the likelihood baseline is
// skipped and reported as NaN.
LocalizationReport localization_report(std::span<const PairAttention> pairs, HeadId head, const PosTagger& tagger,
                                       PosTag pos_tag, const CausalLM* lm);

struct ReplacementItem {
  std::string sentence;  // funny sentence
  Span gold;             // edited words
};

struct ReplacementResult {
  double ratio = 0.0;
  double mean_before = 0.0;
  double mean_after = 0.0;
  std::size_t items = 0;
  std::size_t skipped = 0;  // empty gold spans
};

// Replaces each gold word by a word drawn uniformly from `vocabulary` and
// compares the attention received per gold position at `head` (mean over
// items after / mean over items before).
ReplacementResult random_replacement_activation(TransformerEncoder& encoder, HeadId head,
                                                std::span<const ReplacementItem> items, std::uint64_t seed,
                                                std::span<const std::string> vocabulary);

}  // namespace punchline
