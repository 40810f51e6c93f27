#pragma once

// Humor classifiers: an encoder plus a linear head, in the single-sentence
// setup (one embedding) or the siamese paired setup (two embeddings
// concatenated in presentation order).

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "punchline/corpus.hpp"
#include "punchline/encoders.hpp"

namespace punchline {

class UntrainedModelError : public std::logic_error {
 public:
  UntrainedModelError() : std::logic_error("untrained model: the classifier head has not been fitted") {}
};

struct ModelVariant {
  Setup setup = Setup::single;
  EncoderKind encoder_kind = EncoderKind::pretrained_mlm;
  // Model-cache identifier: word-vector file for bag_of_vectors/recurrent,
  // weights directory for pretrained_mlm, and optionally a pretrained
  // directory whose tokenizer and layout a vanilla_transformer mirrors.
  std::string encoder_id;
  bool frozen = false;
  std::uint64_t seed = 0;

  // e.g. "pretrained_mlm/1S/finetuned/seed0"
  std::string name() const;
};

std::string setup_tag(Setup setup);  // "1S" or "PS"

// Knobs used when an encoder is built rather than loaded.
struct EncoderBuildOptions {
  int recurrent_hidden = 300;
  // Layout for a vanilla transformer without a pretrained reference.
  TransformerConfig transformer;
  std::size_t word_vocab_size = 30000;
};

// Builds the encoder for a fresh variant. `corpus` supplies the word
// vocabulary for from-scratch transformers and restricts large vector
// files to the words that occur in it.
std::unique_ptr<Encoder> build_encoder(const ModelVariant& variant, const ModelCache& cache,
                                       const Corpus* corpus, const EncoderBuildOptions& options = {});

struct SentenceEmbedding {
  std::vector<float> vector;
  // Every word was unknown to the encoder; the vector is all zeros.
  bool all_unknown = false;
};

class HumorClassifier {
 public:
  // The head starts at zero, so the first prediction is exactly 0.5.
  HumorClassifier(ModelVariant variant, std::unique_ptr<Encoder> encoder);

  const ModelVariant& variant() const { return variant_; }
  Encoder& encoder() { return *encoder_; }
  const Encoder& encoder() const { return *encoder_; }
  int head_input_dim() const { return static_cast<int>(head_w_.value.cols()); }

  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }
  // Gaussian head (std 1/sqrt(in)), marked trained; a chance-level reference.
  void randomize_head(std::uint64_t seed);
  // Replaces the head and marks it trained.
  void set_head(const nn::Matrix& weight, float bias);

  SentenceEmbedding encode(std::string_view sentence);

  // Probability that the sentence is funny (single setup only).
  double predict_single(std::string_view sentence);
  // Probability that `first` is the funny one (paired setup only).
  double predict_pair(std::string_view first, std::string_view second);
  // Same, on pre-tokenized inputs; `second` must be null in the single setup.
  double probability(const EncodedSentence& first, const EncodedSentence* second);

  // Logit of an already tokenized instance on graph `g`.
  nn::Var logit(nn::Graph& g, const EncodedSentence& first, const EncodedSentence* second,
                const ForwardOptions& opts);
  // Logit from precomputed embeddings (frozen encoders).
  nn::Var head_logit(nn::Graph& g, nn::Var embedding);

  std::vector<nn::Parameter*> head_parameters() { return {&head_w_, &head_b_}; }
  std::vector<nn::Parameter*> trainable_parameters();

  // Directory with checkpoint.json, head.safetensors and, unless the
  // encoder is a frozen pretrained one referenced by id, encoder/.
  void save(const std::filesystem::path& dir) const;
  static HumorClassifier load(const std::filesystem::path& dir, const ModelCache& cache);

 private:
  void require_trained() const;

  ModelVariant variant_;
  std::unique_ptr<Encoder> encoder_;
  nn::Parameter head_w_;  // [1, dim] or [1, 2*dim]
  nn::Parameter head_b_;  // [1, 1]
  bool trained_ = false;
};

}  // namespace punchline
