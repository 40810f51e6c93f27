#pragma once

// Causal language-model scorers used as likelihood baselines: a GPT-2 style
// decoder loaded from safetensors and a back-off n-gram model in ARPA form.
// All log-probabilities are natural logs.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "punchline/autodiff.hpp"
#include "punchline/encoders.hpp"
#include "punchline/tokenizers.hpp"

namespace punchline {

class CausalLM {
 public:
  virtual ~CausalLM() = default;

  virtual std::string name() const = 0;
  // Log-probability of each word-level token (see word_tokenize) given
  // everything before it. The sentence is scored without an end-of-sentence
  // event, so appending a word can only lower the total.
  virtual std::vector<double> word_logprobs(std::string_view sentence) const = 0;

  // Sum of word_logprobs; throws std::invalid_argument on an empty sentence.
  double sentence_logprob(std::string_view sentence) const;
};

// ---------------------------------------------------------------------------

struct Gpt2Config {
  int vocab_size = 50257;
  int positions = 1024;
  int hidden = 768;
  int layers = 12;
  int heads = 12;
  float layer_norm_eps = 1e-5f;
};

// Pre-LN decoder with tied input/output embeddings. The raw sentence text is
// scored after the end-of-text token as context; each BPE piece is credited
// to the word holding its last non-space byte.
class Gpt2LM final : public CausalLM {
 public:
  Gpt2LM(Gpt2Config config, BpeTokenizer tokenizer, std::uint64_t seed);
  // Reads config.json, vocab.json, merges.txt and model.safetensors.
  static std::unique_ptr<Gpt2LM> load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

  std::string name() const override { return "gpt2"; }
  std::vector<double> word_logprobs(std::string_view sentence) const override;

  // Log-probabilities of ids[1..] given their prefixes, from one causal pass.
  std::vector<double> token_logprobs(std::span<const int> ids) const;
  // Log-distribution of the token following `prefix`, from a pass over the
  // prefix alone.
  std::vector<double> next_token_logprobs(std::span<const int> prefix) const;

  const Gpt2Config& config() const { return config_; }
  const BpeTokenizer& tokenizer() const { return tokenizer_; }

 private:
  struct Block {
    nn::Parameter ln1_g, ln1_b, attn_w, attn_b, proj_w, proj_b;
    nn::Parameter ln2_g, ln2_b, fc_w, fc_b, out_w, out_b;
  };

  Gpt2LM() = default;
  void allocate();
  std::vector<std::pair<std::string, nn::Parameter*>> named_parameters();
  // Final-layer logits for every position of `ids`.
  nn::Matrix logits(std::span<const int> ids) const;

  Gpt2Config config_;
  BpeTokenizer tokenizer_;
  nn::Parameter wte_, wpe_, lnf_g_, lnf_b_;
  std::vector<Block> blocks_;
};

// ---------------------------------------------------------------------------

// Back-off n-gram model over word-level tokens. Contexts start with <s>;
// unknown words map to <unk> (or a floor of -99 in log10 when absent).
class NgramLM final : public CausalLM {
 public:
  static NgramLM load_arpa(const std::filesystem::path& path);
  void save_arpa(const std::filesystem::path& path) const;

  // Interpolated Kneser-Ney with a fixed discount, estimated on the given
  // sentences. Words seen fewer than `min_count` times become <unk>.
  static NgramLM train(std::span<const std::string> sentences, int order = 3, double discount = 0.75,
                       std::size_t min_count = 1);

  std::string name() const override { return "ngram" + std::to_string(order_); }
  std::vector<double> word_logprobs(std::string_view sentence) const override;
  std::vector<double> word_logprobs(std::span<const std::string> words) const;

  int order() const { return order_; }
  // log10 P(word | context) with back-off; `context` oldest first.
  double log10_prob(std::span<const std::string> context, const std::string& word) const;

 private:
  struct Entry {
    double log10_prob = 0.0;
    double log10_backoff = 0.0;
  };

  int order_ = 0;
  // key: space-joined n-gram
  std::unordered_map<std::string, Entry> entries_;
  std::vector<std::size_t> counts_;  // per order, for the ARPA header
  bool has_unk_ = false;
};

// Resolves `lm_id` through the cache: a .arpa file or a directory holding
// model.arpa is an n-gram model; a directory with vocab.json is GPT-2.
std::unique_ptr<CausalLM> load_language_model(const std::string& lm_id, const ModelCache& cache);

// ---------------------------------------------------------------------------

struct ScoredSentence {
  double logprob = 0.0;
  int label = 0;  // 1 = funny
};

struct ThresholdResult {
  double threshold = 0.0;
  double train_accuracy = 0.0;
};

// Threshold for the rule "funny iff logprob < threshold" maximizing accuracy
// on `scores`. Candidates are the midpoints between adjacent distinct
// scores plus one point below the minimum and one above the maximum; the
// smallest maximizing candidate wins. Throws std::invalid_argument when
// the input is empty or holds a single class.
ThresholdResult lm_threshold_search(std::span<const ScoredSentence> scores);
// Candidate thresholds used by the search, ascending.
std::vector<double> threshold_candidates(std::span<const ScoredSentence> scores);

struct PairPrediction {
  int funny_index = 0;  // 0 = first sentence
  bool tie = false;
  double first_logprob = 0.0;
  double second_logprob = 0.0;
};

// The sentence with the lower log-probability is predicted funny; equal
// scores go to the first sentence and are flagged.
PairPrediction lm_pair_predict(const CausalLM& lm, std::string_view first, std::string_view second);
PairPrediction lm_pair_predict(double first_logprob, double second_logprob);

}  // namespace punchline
