#include "punchline/classifier.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "punchline/safetensors.hpp"

namespace punchline {

namespace fs = std::filesystem;
using nn::Matrix;
using nn::Var;

std::string setup_tag(Setup setup) { return setup == Setup::single ? "1S" : "PS"; }

std::string ModelVariant::name() const {
  return std::string(to_string(encoder_kind)) + "/" + setup_tag(setup) + "/" +
         (frozen ? "frozen" : "finetuned") + "/seed" + std::to_string(seed);
}

namespace {

fs::path vectors_path(const ModelCache& cache, const std::string& id) {
  if (id.empty()) throw std::invalid_argument("word-vector encoders need an encoder_id naming a vector file");
  fs::path p = cache.resolve(id);
  if (fs::is_directory(p)) p /= "vectors.vec";
  if (!fs::exists(p)) throw std::runtime_error("word vectors not found at '" + p.string() + "'");
  return p;
}

std::set<std::string> corpus_words(const Corpus& corpus) {
  std::set<std::string> words;
  for (const auto& pair : corpus.pairs()) {
    for (auto& w : word_strings(pair.funny)) words.insert(std::move(w));
    for (auto& w : word_strings(pair.serious)) words.insert(std::move(w));
  }
  return words;
}

}  // namespace

std::unique_ptr<Encoder> build_encoder(const ModelVariant& variant, const ModelCache& cache,
                                       const Corpus* corpus, const EncoderBuildOptions& options) {
  switch (variant.encoder_kind) {
    case EncoderKind::bag_of_vectors:
    case EncoderKind::recurrent: {
      const auto path = vectors_path(cache, variant.encoder_id);
      std::set<std::string> keep;
      if (corpus) keep = corpus_words(*corpus);
      auto vectors = WordVectors::load_text(path, corpus ? &keep : nullptr);
      if (variant.encoder_kind == EncoderKind::bag_of_vectors) {
        return std::make_unique<BagOfVectorsEncoder>(std::move(vectors));
      }
      return std::make_unique<RecurrentEncoder>(std::move(vectors), options.recurrent_hidden, variant.seed);
    }
    case EncoderKind::vanilla_transformer: {
      if (!variant.encoder_id.empty()) {
        const auto dir = cache.resolve(variant.encoder_id);
        auto tokenizer = WordPieceTokenizer::from_vocab_file(dir / "vocab.txt", load_lowercase_flag(dir));
        return std::make_unique<TransformerEncoder>(load_transformer_config(dir), std::move(tokenizer),
                                                    EncoderKind::vanilla_transformer, variant.seed);
      }
      if (!corpus) throw std::invalid_argument("vanilla transformer without a reference needs a corpus vocabulary");
      std::vector<std::string> sentences;
      const bool has_train = corpus->count(Split::train) > 0;
      for (const auto& pair : corpus->pairs()) {
        if (has_train && pair.split != Split::train) continue;
        sentences.push_back(pair.funny);
        sentences.push_back(pair.serious);
      }
      auto tokenizer = WordPieceTokenizer::build_word_vocab(sentences, options.word_vocab_size);
      return std::make_unique<TransformerEncoder>(options.transformer, std::move(tokenizer),
                                                  EncoderKind::vanilla_transformer, variant.seed);
    }
    case EncoderKind::pretrained_mlm:
      if (variant.encoder_id.empty()) throw std::invalid_argument("pretrained_mlm needs an encoder_id");
      return TransformerEncoder::load(cache.resolve(variant.encoder_id), EncoderKind::pretrained_mlm);
  }
  throw std::invalid_argument("unknown encoder kind");
}

HumorClassifier::HumorClassifier(ModelVariant variant, std::unique_ptr<Encoder> encoder)
    : variant_(std::move(variant)), encoder_(std::move(encoder)) {
  if (!encoder_) throw std::invalid_argument("classifier needs an encoder");
  if (encoder_->kind() != variant_.encoder_kind) {
    throw std::invalid_argument("encoder kind does not match the variant");
  }
  const int in = encoder_->dim() * (variant_.setup == Setup::paired ? 2 : 1);
  head_w_ = nn::Parameter(Matrix::Zero(1, in));
  head_b_ = nn::Parameter(Matrix::Zero(1, 1));
  for (auto* p : encoder_->parameters()) p->trainable = !variant_.frozen;
}

void HumorClassifier::randomize_head(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f / std::sqrt(static_cast<float>(head_w_.value.cols())));
  for (Eigen::Index i = 0; i < head_w_.value.size(); ++i) head_w_.value.data()[i] = dist(rng);
  head_b_.value.setZero();
  trained_ = true;
}

void HumorClassifier::set_head(const Matrix& weight, float bias) {
  if (weight.rows() != 1 || weight.cols() != head_w_.value.cols()) {
    throw std::invalid_argument("set_head: expected a 1x" + std::to_string(head_w_.value.cols()) + " weight");
  }
  head_w_.value = weight;
  head_b_.value(0, 0) = bias;
  trained_ = true;
}

void HumorClassifier::require_trained() const {
  if (!trained_) throw UntrainedModelError();
}

SentenceEmbedding HumorClassifier::encode(std::string_view sentence) {
  const auto input = encoder_->tokenize(sentence);
  if (input.word_positions.empty()) throw std::invalid_argument("encode: empty sentence");
  nn::Graph g(false);
  const Var e = encoder_->forward(g, input, {});
  const Matrix& v = g.value(e);
  SentenceEmbedding out;
  out.vector.assign(v.data(), v.data() + v.size());
  out.all_unknown = encoder_->all_unknown(input);
  return out;
}

Var HumorClassifier::head_logit(nn::Graph& g, Var embedding) {
  return g.linear(embedding, g.param(head_w_), g.param(head_b_));
}

Var HumorClassifier::logit(nn::Graph& g, const EncodedSentence& first, const EncodedSentence* second,
                           const ForwardOptions& opts) {
  const bool paired = variant_.setup == Setup::paired;
  if (paired != (second != nullptr)) {
    throw std::invalid_argument(paired ? "paired classifier needs two sentences"
                                       : "single-sentence classifier takes one sentence");
  }
  Var e = encoder_->forward(g, first, opts);
  if (second) {
    const Var parts[2] = {e, encoder_->forward(g, *second, opts)};
    e = g.concat_cols(parts);
  }
  return head_logit(g, e);
}

double HumorClassifier::probability(const EncodedSentence& first, const EncodedSentence* second) {
  require_trained();
  nn::Graph g(false);
  const double z = g.scalar(logit(g, first, second, {}));
  return 1.0 / (1.0 + std::exp(-z));
}

double HumorClassifier::predict_single(std::string_view sentence) {
  if (variant_.setup != Setup::single) throw std::invalid_argument("predict_single on a paired classifier");
  require_trained();
  const auto input = encoder_->tokenize(sentence);
  if (input.word_positions.empty()) throw std::invalid_argument("predict_single: empty sentence");
  return probability(input, nullptr);
}

double HumorClassifier::predict_pair(std::string_view first, std::string_view second) {
  if (variant_.setup != Setup::paired) throw std::invalid_argument("predict_pair on a single-sentence classifier");
  require_trained();
  const auto a = encoder_->tokenize(first);
  const auto b = encoder_->tokenize(second);
  if (a.word_positions.empty() || b.word_positions.empty()) {
    throw std::invalid_argument("predict_pair: empty sentence");
  }
  return probability(a, &b);
}

std::vector<nn::Parameter*> HumorClassifier::trainable_parameters() {
  std::vector<nn::Parameter*> out = head_parameters();
  if (!variant_.frozen) {
    for (auto* p : encoder_->parameters()) out.push_back(p);
  }
  return out;
}

void HumorClassifier::save(const fs::path& dir) const {
  fs::create_directories(dir);
  const bool by_reference = variant_.frozen && variant_.encoder_kind == EncoderKind::pretrained_mlm;
  nlohmann::json j = {
      {"format", 1},
      {"variant",
       {{"setup", to_string(variant_.setup)},
        {"encoder_kind", to_string(variant_.encoder_kind)},
        {"encoder_id", variant_.encoder_id},
        {"frozen", variant_.frozen},
        {"seed", variant_.seed}}},
      {"trained", trained_},
      {"encoder", by_reference ? nlohmann::json(nullptr) : nlohmann::json("encoder")},
  };
  std::ofstream out(dir / "checkpoint.json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint in '" + dir.string() + "'");
  out << j.dump(2) << '\n';
  write_safetensors(dir / "head.safetensors", {{"weight", &head_w_.value}, {"bias", &head_b_.value}});
  if (!by_reference) encoder_->save(dir / "encoder");
}

HumorClassifier HumorClassifier::load(const fs::path& dir, const ModelCache& cache) {
  std::ifstream in(dir / "checkpoint.json");
  if (!in) throw std::runtime_error("no checkpoint.json in '" + dir.string() + "'");
  const auto j = nlohmann::json::parse(in);
  const auto& v = j.at("variant");
  ModelVariant variant;
  const auto setup = parse_setup(v.at("setup").get<std::string>());
  const auto kind = parse_encoder_kind(v.at("encoder_kind").get<std::string>());
  if (!setup || !kind) throw std::runtime_error("checkpoint has an unknown setup or encoder kind");
  variant.setup = *setup;
  variant.encoder_kind = *kind;
  variant.encoder_id = v.value("encoder_id", std::string());
  variant.frozen = v.value("frozen", false);
  variant.seed = v.value("seed", std::uint64_t{0});

  std::unique_ptr<Encoder> encoder;
  if (j.at("encoder").is_null()) {
    encoder = TransformerEncoder::load(cache.resolve(variant.encoder_id), variant.encoder_kind);
  } else {
    encoder = load_encoder(dir / j.at("encoder").get<std::string>());
  }
  HumorClassifier clf(std::move(variant), std::move(encoder));
  const auto head = read_safetensors(dir / "head.safetensors");
  const Matrix& w = head.at("weight").value;
  const Matrix& b = head.at("bias").value;
  if (w.cols() != clf.head_w_.value.cols() || b.size() != 1) {
    throw WeightsError("checkpoint head does not match the encoder dimension");
  }
  clf.head_w_.value = w;
  clf.head_b_.value = b.reshaped(1, 1);
  clf.trained_ = j.value("trained", false);
  return clf;
}

}  // namespace punchline
