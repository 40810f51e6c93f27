#pragma once

// Sentence encoders: averaged word vectors, a single-layer LSTM over word
// vectors, and a post-LN transformer encoder that is either initialized
// from scratch or loaded from pretrained masked-LM weights.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "punchline/attention_tensor.hpp"
#include "punchline/autodiff.hpp"
#include "punchline/tokenizers.hpp"
#include "punchline/word_vectors.hpp"

namespace punchline {

enum class EncoderKind { bag_of_vectors, recurrent, vanilla_transformer, pretrained_mlm };

std::string_view to_string(EncoderKind kind);
std::optional<EncoderKind> parse_encoder_kind(std::string_view text);

struct ForwardOptions {
  bool training = false;
  std::mt19937_64* rng = nullptr;     // dropout source while training
  AttentionTensor* capture = nullptr;  // filled by attention encoders
};

class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual EncoderKind kind() const = 0;
  virtual int dim() const = 0;
  virtual EncodedSentence tokenize(std::span<const std::string> words) const = 0;
  // Replaces every position of word `word` with the encoder's mask input.
  virtual void mask_word(EncodedSentence& input, std::size_t word) const = 0;
  // Returns a 1 x dim() sentence representation.
  virtual nn::Var forward(nn::Graph& g, const EncodedSentence& input, const ForwardOptions& opts) = 0;
  virtual std::vector<nn::Parameter*> parameters() = 0;
  // True when tokenize() marks every word as unknown to the encoder.
  virtual bool all_unknown(const EncodedSentence&) const { return false; }
  virtual void save(const std::filesystem::path& dir) const = 0;
  virtual std::unique_ptr<Encoder> clone() const = 0;

  EncodedSentence tokenize(std::string_view sentence) const;
};

// ---------------------------------------------------------------------------

// Mean of the pretrained vectors of known words; unknown words are skipped.
class BagOfVectorsEncoder final : public Encoder {
 public:
  explicit BagOfVectorsEncoder(WordVectors vectors);

  EncoderKind kind() const override { return EncoderKind::bag_of_vectors; }
  int dim() const override { return vectors_.dim(); }
  EncodedSentence tokenize(std::span<const std::string> words) const override;
  using Encoder::tokenize;
  void mask_word(EncodedSentence& input, std::size_t word) const override;
  nn::Var forward(nn::Graph& g, const EncodedSentence& input, const ForwardOptions& opts) override;
  std::vector<nn::Parameter*> parameters() override { return {}; }
  bool all_unknown(const EncodedSentence& input) const override;
  void save(const std::filesystem::path& dir) const override;
  std::unique_ptr<Encoder> clone() const override;

  static std::unique_ptr<BagOfVectorsEncoder> load(const std::filesystem::path& dir);
  const WordVectors& vectors() const { return vectors_; }

 private:
  WordVectors vectors_;
};

// Single-layer unidirectional LSTM over frozen word vectors; the final
// hidden state is the sentence embedding. Gate order i, f, g, o.
class RecurrentEncoder final : public Encoder {
 public:
  RecurrentEncoder(WordVectors vectors, int hidden, std::uint64_t seed);

  EncoderKind kind() const override { return EncoderKind::recurrent; }
  int dim() const override { return hidden_; }
  EncodedSentence tokenize(std::span<const std::string> words) const override;
  using Encoder::tokenize;
  void mask_word(EncodedSentence& input, std::size_t word) const override;
  nn::Var forward(nn::Graph& g, const EncodedSentence& input, const ForwardOptions& opts) override;
  std::vector<nn::Parameter*> parameters() override { return {&w_ih_, &w_hh_, &bias_}; }
  bool all_unknown(const EncodedSentence& input) const override;
  void save(const std::filesystem::path& dir) const override;
  std::unique_ptr<Encoder> clone() const override;

  static std::unique_ptr<RecurrentEncoder> load(const std::filesystem::path& dir);

 private:
  RecurrentEncoder() = default;

  WordVectors vectors_;
  int hidden_ = 0;
  nn::Parameter w_ih_;  // [4h, in]
  nn::Parameter w_hh_;  // [4h, h]
  nn::Parameter bias_;  // [1, 4h]
};

// ---------------------------------------------------------------------------

struct TransformerConfig {
  int vocab_size = 30522;
  int hidden = 768;
  int layers = 12;
  int heads = 12;
  int intermediate = 3072;
  int max_positions = 512;
  int type_vocab = 2;
  float layer_norm_eps = 1e-12f;
  float dropout = 0.1f;
};

// Post-LN encoder with the BERT parameter layout. The sentence embedding is
// the final hidden state of the leading special position.
class TransformerEncoder final : public Encoder {
 public:
  // Random initialization (normal, std 0.02), as for the from-scratch
  // baseline.
  TransformerEncoder(TransformerConfig config, WordPieceTokenizer tokenizer, EncoderKind kind,
                     std::uint64_t seed);

  // Reads config.json, vocab.txt and model.safetensors from `dir`. Accepts
  // BERT names (with or without the "bert." prefix) and DistilBERT names.
  static std::unique_ptr<TransformerEncoder> load(const std::filesystem::path& dir, EncoderKind kind);

  EncoderKind kind() const override { return kind_; }
  int dim() const override { return config_.hidden; }
  EncodedSentence tokenize(std::span<const std::string> words) const override;
  using Encoder::tokenize;
  void mask_word(EncodedSentence& input, std::size_t word) const override;
  nn::Var forward(nn::Graph& g, const EncodedSentence& input, const ForwardOptions& opts) override;
  std::vector<nn::Parameter*> parameters() override;
  void save(const std::filesystem::path& dir) const override;
  std::unique_ptr<Encoder> clone() const override;

  const TransformerConfig& config() const { return config_; }
  const WordPieceTokenizer& tokenizer() const { return tokenizer_; }

  // Post-softmax attention for one input, without building gradients.
  AttentionTensor attention(const EncodedSentence& input, std::string sentence_id = {});

 private:
  struct Layer {
    nn::Parameter q_w, q_b, k_w, k_b, v_w, v_b;
    nn::Parameter attn_out_w, attn_out_b, attn_ln_g, attn_ln_b;
    nn::Parameter ffn_in_w, ffn_in_b, ffn_out_w, ffn_out_b, out_ln_g, out_ln_b;
  };

  TransformerEncoder() = default;
  std::vector<std::pair<std::string, nn::Parameter*>> named_parameters();
  std::vector<std::pair<std::string, const nn::Parameter*>> named_parameters() const;
  void allocate();

  TransformerConfig config_;
  WordPieceTokenizer tokenizer_;
  EncoderKind kind_ = EncoderKind::pretrained_mlm;
  nn::Parameter word_emb_, pos_emb_, type_emb_, emb_ln_g_, emb_ln_b_;
  std::vector<Layer> layers_;
};

// Layout from a config.json in BERT or DistilBERT form.
TransformerConfig load_transformer_config(const std::filesystem::path& dir);
// do_lower_case from tokenizer_config.json, defaulting to true.
bool load_lowercase_flag(const std::filesystem::path& dir);

// Restores any encoder written by Encoder::save().
std::unique_ptr<Encoder> load_encoder(const std::filesystem::path& dir);

// Resolves opaque model identifiers against a local cache directory.
class ModelCache {
 public:
  // Root from $PUNCHLINE_MODEL_CACHE, else ~/.cache/punchline/models.
  ModelCache();
  explicit ModelCache(std::filesystem::path root) : root_(std::move(root)) {}

  // An existing path is used as is; otherwise root/id.
  std::filesystem::path resolve(const std::string& id) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

}  // namespace punchline
