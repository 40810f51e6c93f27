#include "punchline/encoders.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "punchline/safetensors.hpp"

namespace punchline {

namespace fs = std::filesystem;
using nn::Matrix;
using nn::Var;

namespace {

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, float stddev, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, float bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return nlohmann::json::parse(in);
}

// Word-vector ids: -1 marks an unknown or masked word.
EncodedSentence vector_ids(const WordVectors& vectors, std::span<const std::string> words) {
  EncodedSentence out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto id = vectors.find(words[i]);
    out.ids.push_back(id ? *id : -1);
    out.word_positions.push_back({i, i + 1});
  }
  return out;
}

}  // namespace

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::bag_of_vectors: return "bag_of_vectors";
    case EncoderKind::recurrent: return "recurrent";
    case EncoderKind::vanilla_transformer: return "vanilla_transformer";
    case EncoderKind::pretrained_mlm: return "pretrained_mlm";
  }
  return "?";
}

std::optional<EncoderKind> parse_encoder_kind(std::string_view text) {
  if (text == "bag_of_vectors" || text == "bow") return EncoderKind::bag_of_vectors;
  if (text == "recurrent" || text == "lstm") return EncoderKind::recurrent;
  if (text == "vanilla_transformer" || text == "transformer") return EncoderKind::vanilla_transformer;
  if (text == "pretrained_mlm" || text == "mlm" || text == "bert") return EncoderKind::pretrained_mlm;
  return std::nullopt;
}

EncodedSentence Encoder::tokenize(std::string_view sentence) const {
  const auto words = word_strings(sentence);
  return tokenize(std::span<const std::string>(words));
}

// ---------------------------------------------------------------------------
// Bag of vectors

BagOfVectorsEncoder::BagOfVectorsEncoder(WordVectors vectors) : vectors_(std::move(vectors)) {}

EncodedSentence BagOfVectorsEncoder::tokenize(std::span<const std::string> words) const {
  return vector_ids(vectors_, words);
}

void BagOfVectorsEncoder::mask_word(EncodedSentence& input, std::size_t word) const {
  input.ids.at(word) = -1;
}

bool BagOfVectorsEncoder::all_unknown(const EncodedSentence& input) const {
  return std::all_of(input.ids.begin(), input.ids.end(), [](int id) { return id < 0; });
}

Var BagOfVectorsEncoder::forward(nn::Graph& g, const EncodedSentence& input, const ForwardOptions&) {
  Matrix mean = Matrix::Zero(1, vectors_.dim());
  int known = 0;
  for (const int id : input.ids) {
    if (id < 0) continue;
    mean += vectors_.table().row(id);
    ++known;
  }
  if (known > 0) mean /= static_cast<float>(known);
  return g.constant(std::move(mean));
}

void BagOfVectorsEncoder::save(const fs::path& dir) const {
  fs::create_directories(dir);
  write_json(dir / "encoder.json", {{"kind", to_string(kind())}, {"dim", dim()}});
  vectors_.save_text(dir / "vectors.vec");
}

std::unique_ptr<BagOfVectorsEncoder> BagOfVectorsEncoder::load(const fs::path& dir) {
  return std::make_unique<BagOfVectorsEncoder>(WordVectors::load_text(dir / "vectors.vec"));
}

std::unique_ptr<Encoder> BagOfVectorsEncoder::clone() const {
  return std::make_unique<BagOfVectorsEncoder>(*this);
}

// ---------------------------------------------------------------------------
// LSTM

RecurrentEncoder::RecurrentEncoder(WordVectors vectors, int hidden, std::uint64_t seed)
    : vectors_(std::move(vectors)), hidden_(hidden) {
  if (hidden <= 0) throw std::invalid_argument("recurrent encoder: hidden size must be positive");
  std::mt19937_64 rng(seed);
  const float bound = 1.0f / std::sqrt(static_cast<float>(hidden));
  w_ih_ = nn::Parameter(uniform_matrix(4 * hidden, vectors_.dim(), bound, rng));
  w_hh_ = nn::Parameter(uniform_matrix(4 * hidden, hidden, bound, rng));
  bias_ = nn::Parameter(uniform_matrix(1, 4 * hidden, bound, rng));
}

EncodedSentence RecurrentEncoder::tokenize(std::span<const std::string> words) const {
  return vector_ids(vectors_, words);
}

void RecurrentEncoder::mask_word(EncodedSentence& input, std::size_t word) const { input.ids.at(word) = -1; }

bool RecurrentEncoder::all_unknown(const EncodedSentence& input) const {
  return std::all_of(input.ids.begin(), input.ids.end(), [](int id) { return id < 0; });
}

Var RecurrentEncoder::forward(nn::Graph& g, const EncodedSentence& input, const ForwardOptions&) {
  const Var w_ih = g.param(w_ih_);
  const Var w_hh = g.param(w_hh_);
  const Var b = g.param(bias_);
  const Var zero_bias = g.constant(Matrix::Zero(1, 4 * hidden_));
  Var h = g.constant(Matrix::Zero(1, hidden_));
  Var c = g.constant(Matrix::Zero(1, hidden_));
  for (const int id : input.ids) {
    Matrix x = id >= 0 ? Matrix(vectors_.table().row(id)) : Matrix::Zero(1, vectors_.dim());
    const Var gates = g.add(g.linear(g.constant(std::move(x)), w_ih, b), g.linear(h, w_hh, zero_bias));
    const Var i = g.sigmoid(g.slice_cols(gates, 0, hidden_));
    const Var f = g.sigmoid(g.slice_cols(gates, hidden_, hidden_));
    const Var cand = g.tanh(g.slice_cols(gates, 2 * hidden_, hidden_));
    const Var o = g.sigmoid(g.slice_cols(gates, 3 * hidden_, hidden_));
    c = g.add(g.mul(f, c), g.mul(i, cand));
    h = g.mul(o, g.tanh(c));
  }
  return h;
}

void RecurrentEncoder::save(const fs::path& dir) const {
  fs::create_directories(dir);
  write_json(dir / "encoder.json", {{"kind", to_string(kind())}, {"hidden", hidden_}});
  vectors_.save_text(dir / "vectors.vec");
  write_safetensors(dir / "lstm.safetensors",
                    {{"weight_ih", &w_ih_.value}, {"weight_hh", &w_hh_.value}, {"bias", &bias_.value}});
}

std::unique_ptr<RecurrentEncoder> RecurrentEncoder::load(const fs::path& dir) {
  const auto meta = read_json(dir / "encoder.json");
  auto enc = std::unique_ptr<RecurrentEncoder>(new RecurrentEncoder());
  enc->vectors_ = WordVectors::load_text(dir / "vectors.vec");
  enc->hidden_ = meta.at("hidden").get<int>();
  const auto weights = read_safetensors(dir / "lstm.safetensors");
  enc->w_ih_ = nn::Parameter(weights.at("weight_ih").value);
  enc->w_hh_ = nn::Parameter(weights.at("weight_hh").value);
  enc->bias_ = nn::Parameter(weights.at("bias").value);
  if (enc->w_ih_.value.rows() != 4 * enc->hidden_ || enc->w_ih_.value.cols() != enc->vectors_.dim()) {
    throw WeightsError("recurrent encoder: weight shapes do not match vectors/hidden size");
  }
  return enc;
}

std::unique_ptr<Encoder> RecurrentEncoder::clone() const { return std::make_unique<RecurrentEncoder>(*this); }

// ---------------------------------------------------------------------------
// Transformer

void TransformerEncoder::allocate() {
  const auto& c = config_;
  if (c.hidden % c.heads != 0) throw std::invalid_argument("transformer: hidden size not divisible by heads");
  const auto d = c.hidden;
  const auto zeros = [](Eigen::Index r, Eigen::Index cols) { return nn::Parameter(Matrix::Zero(r, cols)); };
  const auto ones = [](Eigen::Index r, Eigen::Index cols) { return nn::Parameter(Matrix::Ones(r, cols)); };
  word_emb_ = zeros(c.vocab_size, d);
  pos_emb_ = zeros(c.max_positions, d);
  type_emb_ = zeros(std::max(c.type_vocab, 0), d);
  emb_ln_g_ = ones(1, d);
  emb_ln_b_ = zeros(1, d);
  layers_.assign(static_cast<std::size_t>(c.layers), Layer{});
  for (auto& l : layers_) {
    l.q_w = zeros(d, d);
    l.q_b = zeros(1, d);
    l.k_w = zeros(d, d);
    l.k_b = zeros(1, d);
    l.v_w = zeros(d, d);
    l.v_b = zeros(1, d);
    l.attn_out_w = zeros(d, d);
    l.attn_out_b = zeros(1, d);
    l.attn_ln_g = ones(1, d);
    l.attn_ln_b = zeros(1, d);
    l.ffn_in_w = zeros(c.intermediate, d);
    l.ffn_in_b = zeros(1, c.intermediate);
    l.ffn_out_w = zeros(d, c.intermediate);
    l.ffn_out_b = zeros(1, d);
    l.out_ln_g = ones(1, d);
    l.out_ln_b = zeros(1, d);
  }
}

TransformerEncoder::TransformerEncoder(TransformerConfig config, WordPieceTokenizer tokenizer,
                                       EncoderKind kind, std::uint64_t seed)
    : config_(config), tokenizer_(std::move(tokenizer)), kind_(kind) {
  config_.vocab_size = static_cast<int>(tokenizer_.size());
  allocate();
  std::mt19937_64 rng(seed);
  for (auto& [name, p] : named_parameters()) {
    const bool is_norm = name.find("LayerNorm") != std::string::npos;
    const bool is_bias = name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
    if (!is_norm && !is_bias) p->value = normal_matrix(p->value.rows(), p->value.cols(), 0.02f, rng);
  }
}

std::vector<std::pair<std::string, nn::Parameter*>> TransformerEncoder::named_parameters() {
  std::vector<std::pair<std::string, nn::Parameter*>> out = {
      {"embeddings.word_embeddings.weight", &word_emb_},
      {"embeddings.position_embeddings.weight", &pos_emb_},
      {"embeddings.LayerNorm.weight", &emb_ln_g_},
      {"embeddings.LayerNorm.bias", &emb_ln_b_},
  };
  if (config_.type_vocab > 0) out.emplace_back("embeddings.token_type_embeddings.weight", &type_emb_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = layers_[i];
    const std::string p = "encoder.layer." + std::to_string(i) + ".";
    out.insert(out.end(), {
        {p + "attention.self.query.weight", &l.q_w},
        {p + "attention.self.query.bias", &l.q_b},
        {p + "attention.self.key.weight", &l.k_w},
        {p + "attention.self.key.bias", &l.k_b},
        {p + "attention.self.value.weight", &l.v_w},
        {p + "attention.self.value.bias", &l.v_b},
        {p + "attention.output.dense.weight", &l.attn_out_w},
        {p + "attention.output.dense.bias", &l.attn_out_b},
        {p + "attention.output.LayerNorm.weight", &l.attn_ln_g},
        {p + "attention.output.LayerNorm.bias", &l.attn_ln_b},
        {p + "intermediate.dense.weight", &l.ffn_in_w},
        {p + "intermediate.dense.bias", &l.ffn_in_b},
        {p + "output.dense.weight", &l.ffn_out_w},
        {p + "output.dense.bias", &l.ffn_out_b},
        {p + "output.LayerNorm.weight", &l.out_ln_g},
        {p + "output.LayerNorm.bias", &l.out_ln_b},
    });
  }
  return out;
}

std::vector<std::pair<std::string, const nn::Parameter*>> TransformerEncoder::named_parameters() const {
  std::vector<std::pair<std::string, const nn::Parameter*>> out;
  for (auto& [n, p] : const_cast<TransformerEncoder*>(this)->named_parameters()) out.emplace_back(n, p);
  return out;
}

std::vector<nn::Parameter*> TransformerEncoder::parameters() {
  std::vector<nn::Parameter*> out;
  for (auto& [n, p] : named_parameters()) out.push_back(p);
  return out;
}

namespace {

// Candidate names under which a canonical (BERT-layout) tensor may be
// stored by other exporters.
std::vector<std::string> weight_aliases(const std::string& name) {
  std::vector<std::string> out = {name, "bert." + name};
  const auto swap_suffix = [&](const std::string& from, const std::string& to) {
    if (name.size() > from.size() && name.compare(name.size() - from.size(), from.size(), from) == 0 &&
        name.find("LayerNorm") != std::string::npos) {
      const std::string alt = name.substr(0, name.size() - from.size()) + to;
      out.push_back(alt);
      out.push_back("bert." + alt);
    }
  };
  swap_suffix(".weight", ".gamma");
  swap_suffix(".bias", ".beta");

  // DistilBERT layout.
  static const std::vector<std::pair<std::string, std::string>> kDistil = {
      {"attention.self.query.", "attention.q_lin."},   {"attention.self.key.", "attention.k_lin."},
      {"attention.self.value.", "attention.v_lin."},   {"attention.output.dense.", "attention.out_lin."},
      {"attention.output.LayerNorm.", "sa_layer_norm."}, {"intermediate.dense.", "ffn.lin1."},
      {"output.dense.", "ffn.lin2."},                  {"output.LayerNorm.", "output_layer_norm."},
  };
  if (name.rfind("encoder.layer.", 0) == 0) {
    const auto dot = name.find('.', 14);
    const std::string index = name.substr(14, dot - 14);
    const std::string rest = name.substr(dot + 1);
    for (const auto& [from, to] : kDistil) {
      if (rest.rfind(from, 0) == 0) {
        const std::string alt = "transformer.layer." + index + "." + to + rest.substr(from.size());
        out.push_back(alt);
        out.push_back("distilbert." + alt);
        break;
      }
    }
  } else {
    out.push_back("distilbert." + name);
  }
  return out;
}

}  // namespace

TransformerConfig load_transformer_config(const fs::path& dir) {
  const auto cfg = read_json(dir / "config.json");
  TransformerConfig c;
  const bool distil = cfg.value("model_type", std::string()) == "distilbert" || cfg.contains("n_layers");
  if (distil) {
    c.vocab_size = cfg.value("vocab_size", c.vocab_size);
    c.hidden = cfg.value("dim", c.hidden);
    c.layers = cfg.value("n_layers", 6);
    c.heads = cfg.value("n_heads", c.heads);
    c.intermediate = cfg.value("hidden_dim", c.intermediate);
    c.max_positions = cfg.value("max_position_embeddings", c.max_positions);
    c.type_vocab = 0;
    c.dropout = cfg.value("dropout", c.dropout);
  } else {
    c.vocab_size = cfg.value("vocab_size", c.vocab_size);
    c.hidden = cfg.value("hidden_size", c.hidden);
    c.layers = cfg.value("num_hidden_layers", c.layers);
    c.heads = cfg.value("num_attention_heads", c.heads);
    c.intermediate = cfg.value("intermediate_size", c.intermediate);
    c.max_positions = cfg.value("max_position_embeddings", c.max_positions);
    c.type_vocab = cfg.value("type_vocab_size", c.type_vocab);
    c.layer_norm_eps = cfg.value("layer_norm_eps", c.layer_norm_eps);
    c.dropout = cfg.value("hidden_dropout_prob", c.dropout);
  }
  const std::string act = cfg.value("hidden_act", cfg.value("activation", std::string("gelu")));
  if (act != "gelu") throw WeightsError("transformer: unsupported activation '" + act + "'");
  return c;
}

bool load_lowercase_flag(const fs::path& dir) {
  if (!fs::exists(dir / "tokenizer_config.json")) return true;
  return read_json(dir / "tokenizer_config.json").value("do_lower_case", true);
}

std::unique_ptr<TransformerEncoder> TransformerEncoder::load(const fs::path& dir, EncoderKind kind) {
  const TransformerConfig c = load_transformer_config(dir);
  const bool lowercase = load_lowercase_flag(dir);

  auto enc = std::unique_ptr<TransformerEncoder>(new TransformerEncoder());
  enc->config_ = c;
  enc->kind_ = kind;
  enc->tokenizer_ = WordPieceTokenizer::from_vocab_file(dir / "vocab.txt", lowercase);
  enc->allocate();

  const auto weights = read_safetensors(dir / "model.safetensors");
  for (auto& [name, p] : enc->named_parameters()) {
    const NamedTensor* found = nullptr;
    for (const auto& alias : weight_aliases(name)) {
      if (const auto it = weights.tensors.find(alias); it != weights.tensors.end()) {
        found = &it->second;
        break;
      }
    }
    if (!found) throw WeightsError("transformer: weights lack '" + name + "'");
    if (found->value.rows() != p->value.rows() || found->value.cols() != p->value.cols()) {
      throw WeightsError("transformer: '" + name + "' has shape " + std::to_string(found->value.rows()) +
                         "x" + std::to_string(found->value.cols()) + ", expected " +
                         std::to_string(p->value.rows()) + "x" + std::to_string(p->value.cols()));
    }
    p->value = found->value;
  }
  if (static_cast<std::size_t>(c.vocab_size) != enc->tokenizer_.size()) {
    throw WeightsError("transformer: vocab.txt has " + std::to_string(enc->tokenizer_.size()) +
                       " entries but the embedding table has " + std::to_string(c.vocab_size));
  }
  return enc;
}

void TransformerEncoder::save(const fs::path& dir) const {
  fs::create_directories(dir);
  write_json(dir / "encoder.json", {{"kind", to_string(kind_)}});
  write_json(dir / "config.json", {{"model_type", "bert"},
                                   {"vocab_size", config_.vocab_size},
                                   {"hidden_size", config_.hidden},
                                   {"num_hidden_layers", config_.layers},
                                   {"num_attention_heads", config_.heads},
                                   {"intermediate_size", config_.intermediate},
                                   {"max_position_embeddings", config_.max_positions},
                                   {"type_vocab_size", config_.type_vocab},
                                   {"layer_norm_eps", config_.layer_norm_eps},
                                   {"hidden_dropout_prob", config_.dropout},
                                   {"hidden_act", "gelu"}});
  write_json(dir / "tokenizer_config.json", {{"do_lower_case", tokenizer_.lowercase()}});
  tokenizer_.save(dir / "vocab.txt");
  std::map<std::string, const Matrix*> tensors;
  for (const auto& [name, p] : named_parameters()) tensors.emplace(name, &p->value);
  write_safetensors(dir / "model.safetensors", tensors);
}

std::unique_ptr<Encoder> TransformerEncoder::clone() const {
  return std::unique_ptr<Encoder>(new TransformerEncoder(*this));
}

EncodedSentence TransformerEncoder::tokenize(std::span<const std::string> words) const {
  auto out = tokenizer_.encode(words);
  if (static_cast<int>(out.ids.size()) > config_.max_positions) {
    throw std::length_error("transformer: sentence of " + std::to_string(out.ids.size()) +
                            " positions exceeds the model limit " + std::to_string(config_.max_positions));
  }
  return out;
}

void TransformerEncoder::mask_word(EncodedSentence& input, std::size_t word) const {
  const Span span = input.word_positions.at(word);
  for (std::size_t p = span.begin; p < span.end; ++p) input.ids[p] = tokenizer_.mask_id();
}

Var TransformerEncoder::forward(nn::Graph& g, const EncodedSentence& input, const ForwardOptions& opts) {
  const auto& c = config_;
  const int n = static_cast<int>(input.ids.size());
  if (n == 0 || n > c.max_positions) throw std::length_error("transformer: bad input length");
  const bool drop = opts.training && opts.rng && c.dropout > 0.0f;
  const auto dropout = [&](Var v) { return drop ? g.dropout(v, c.dropout, *opts.rng) : v; };

  std::vector<int> positions(static_cast<std::size_t>(n));
  std::iota(positions.begin(), positions.end(), 0);
  Var x = g.add(g.embedding(g.param(word_emb_), input.ids), g.embedding(g.param(pos_emb_), positions));
  if (c.type_vocab > 0) {
    const std::vector<int> types(static_cast<std::size_t>(n), 0);
    x = g.add(x, g.embedding(g.param(type_emb_), types));
  }
  x = dropout(g.layer_norm(x, g.param(emb_ln_g_), g.param(emb_ln_b_), c.layer_norm_eps));

  if (opts.capture) {
    *opts.capture = AttentionTensor::zeros(c.layers, c.heads, n);
  }
  const int head_dim = c.hidden / c.heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
  for (int li = 0; li < c.layers; ++li) {
    auto& l = layers_[static_cast<std::size_t>(li)];
    const Var q = g.linear(x, g.param(l.q_w), g.param(l.q_b));
    const Var k = g.linear(x, g.param(l.k_w), g.param(l.k_b));
    const Var v = g.linear(x, g.param(l.v_w), g.param(l.v_b));
    std::vector<Var> contexts;
    contexts.reserve(static_cast<std::size_t>(c.heads));
    for (int h = 0; h < c.heads; ++h) {
      const Var qh = g.slice_cols(q, h * head_dim, head_dim);
      const Var kh = g.slice_cols(k, h * head_dim, head_dim);
      const Var vh = g.slice_cols(v, h * head_dim, head_dim);
      const Var probs = g.softmax_rows(g.scale(g.matmul_bt(qh, kh), scale));
      if (opts.capture) {
        const Matrix& p = g.value(probs);
        for (int r = 0; r < n; ++r) {
          auto row = opts.capture->row(li, h, r);
          for (int col = 0; col < n; ++col) row[static_cast<std::size_t>(col)] = p(r, col);
        }
      }
      contexts.push_back(g.matmul(dropout(probs), vh));
    }
    const Var ctx = g.concat_cols(contexts);
    const Var attn = dropout(g.linear(ctx, g.param(l.attn_out_w), g.param(l.attn_out_b)));
    x = g.layer_norm(g.add(attn, x), g.param(l.attn_ln_g), g.param(l.attn_ln_b), c.layer_norm_eps);
    const Var inner = g.gelu(g.linear(x, g.param(l.ffn_in_w), g.param(l.ffn_in_b)));
    const Var ffn = dropout(g.linear(inner, g.param(l.ffn_out_w), g.param(l.ffn_out_b)));
    x = g.layer_norm(g.add(ffn, x), g.param(l.out_ln_g), g.param(l.out_ln_b), c.layer_norm_eps);
  }
  return g.row(x, 0);
}

AttentionTensor TransformerEncoder::attention(const EncodedSentence& input, std::string sentence_id) {
  nn::Graph g(false);
  AttentionTensor t;
  ForwardOptions opts;
  opts.capture = &t;
  forward(g, input, opts);
  t.sentence_id = std::move(sentence_id);
  return t;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Encoder> load_encoder(const fs::path& dir) {
  const auto meta = read_json(dir / "encoder.json");
  const auto kind = parse_encoder_kind(meta.at("kind").get<std::string>());
  if (!kind) throw WeightsError("unknown encoder kind in '" + (dir / "encoder.json").string() + "'");
  switch (*kind) {
    case EncoderKind::bag_of_vectors: return BagOfVectorsEncoder::load(dir);
    case EncoderKind::recurrent: return RecurrentEncoder::load(dir);
    case EncoderKind::vanilla_transformer:
    case EncoderKind::pretrained_mlm: return TransformerEncoder::load(dir, *kind);
  }
  throw WeightsError("unreachable encoder kind");
}

ModelCache::ModelCache() {
  if (const char* env = std::getenv("PUNCHLINE_MODEL_CACHE"); env && *env) {
    root_ = env;
  } else if (const char* home = std::getenv("HOME"); home && *home) {
    root_ = fs::path(home) / ".cache" / "punchline" / "models";
  } else {
    root_ = fs::current_path() / "models";
  }
}

fs::path ModelCache::resolve(const std::string& id) const {
  if (id.empty()) throw std::invalid_argument("empty model identifier");
  const fs::path direct(id);
  if (fs::exists(direct)) return direct;
  return root_ / id;
}

}  // namespace punchline
