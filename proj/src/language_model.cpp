#include "punchline/language_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "punchline/safetensors.hpp"

namespace punchline {

namespace fs = std::filesystem;
using nn::Matrix;
using nn::Var;

double CausalLM::sentence_logprob(std::string_view sentence) const {
  const auto lp = word_logprobs(sentence);
  return std::accumulate(lp.begin(), lp.end(), 0.0);
}

// ---------------------------------------------------------------------------
// GPT-2

void Gpt2LM::allocate() {
  const auto& c = config_;
  const auto zeros = [](Eigen::Index r, Eigen::Index cols) { return nn::Parameter(Matrix::Zero(r, cols)); };
  const auto ones = [](Eigen::Index r, Eigen::Index cols) { return nn::Parameter(Matrix::Ones(r, cols)); };
  const int d = c.hidden;
  wte_ = zeros(c.vocab_size, d);
  wpe_ = zeros(c.positions, d);
  lnf_g_ = ones(1, d);
  lnf_b_ = zeros(1, d);
  blocks_.assign(static_cast<std::size_t>(c.layers), Block{});
  for (auto& b : blocks_) {
    b.ln1_g = ones(1, d);
    b.ln1_b = zeros(1, d);
    b.attn_w = zeros(d, 3 * d);
    b.attn_b = zeros(1, 3 * d);
    b.proj_w = zeros(d, d);
    b.proj_b = zeros(1, d);
    b.ln2_g = ones(1, d);
    b.ln2_b = zeros(1, d);
    b.fc_w = zeros(d, 4 * d);
    b.fc_b = zeros(1, 4 * d);
    b.out_w = zeros(4 * d, d);
    b.out_b = zeros(1, d);
  }
}

std::vector<std::pair<std::string, nn::Parameter*>> Gpt2LM::named_parameters() {
  std::vector<std::pair<std::string, nn::Parameter*>> out = {
      {"wte.weight", &wte_}, {"wpe.weight", &wpe_}, {"ln_f.weight", &lnf_g_}, {"ln_f.bias", &lnf_b_}};
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    auto& b = blocks_[i];
    const std::string p = "h." + std::to_string(i) + ".";
    out.insert(out.end(), {
        {p + "ln_1.weight", &b.ln1_g},       {p + "ln_1.bias", &b.ln1_b},
        {p + "attn.c_attn.weight", &b.attn_w}, {p + "attn.c_attn.bias", &b.attn_b},
        {p + "attn.c_proj.weight", &b.proj_w}, {p + "attn.c_proj.bias", &b.proj_b},
        {p + "ln_2.weight", &b.ln2_g},       {p + "ln_2.bias", &b.ln2_b},
        {p + "mlp.c_fc.weight", &b.fc_w},    {p + "mlp.c_fc.bias", &b.fc_b},
        {p + "mlp.c_proj.weight", &b.out_w}, {p + "mlp.c_proj.bias", &b.out_b},
    });
  }
  return out;
}

Gpt2LM::Gpt2LM(Gpt2Config config, BpeTokenizer tokenizer, std::uint64_t seed)
    : config_(config), tokenizer_(std::move(tokenizer)) {
  if (config_.hidden % config_.heads != 0) throw std::invalid_argument("gpt2: hidden not divisible by heads");
  allocate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 0.02f);
  for (auto& [name, p] : named_parameters()) {
    const bool is_norm = name.find("ln_") != std::string::npos;
    const bool is_bias = name.ends_with(".bias");
    if (is_norm || is_bias) continue;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = dist(rng);
  }
}

std::unique_ptr<Gpt2LM> Gpt2LM::load(const fs::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw WeightsError("gpt2: no config.json in '" + dir.string() + "'");
  const auto cfg = nlohmann::json::parse(in);
  auto lm = std::unique_ptr<Gpt2LM>(new Gpt2LM());
  Gpt2Config& c = lm->config_;
  c.vocab_size = cfg.value("vocab_size", c.vocab_size);
  c.positions = cfg.value("n_positions", cfg.value("n_ctx", c.positions));
  c.hidden = cfg.value("n_embd", c.hidden);
  c.layers = cfg.value("n_layer", c.layers);
  c.heads = cfg.value("n_head", c.heads);
  c.layer_norm_eps = cfg.value("layer_norm_epsilon", c.layer_norm_eps);
  lm->tokenizer_ = BpeTokenizer::from_files(dir / "vocab.json", dir / "merges.txt");
  lm->allocate();
  const auto weights = read_safetensors(dir / "model.safetensors");
  for (auto& [name, p] : lm->named_parameters()) {
    const NamedTensor* found = nullptr;
    for (const auto& alias : {name, "transformer." + name}) {
      if (const auto it = weights.tensors.find(alias); it != weights.tensors.end()) {
        found = &it->second;
        break;
      }
    }
    if (!found) throw WeightsError("gpt2: weights lack '" + name + "'");
    if (found->value.rows() != p->value.rows() || found->value.cols() != p->value.cols()) {
      throw WeightsError("gpt2: '" + name + "' has an unexpected shape");
    }
    p->value = found->value;
  }
  if (lm->tokenizer_.eos_id() < 0) throw WeightsError("gpt2: vocabulary lacks <|endoftext|>");
  return lm;
}

void Gpt2LM::save(const fs::path& dir) const {
  fs::create_directories(dir);
  const nlohmann::json cfg = {{"model_type", "gpt2"},
                              {"vocab_size", config_.vocab_size},
                              {"n_positions", config_.positions},
                              {"n_embd", config_.hidden},
                              {"n_layer", config_.layers},
                              {"n_head", config_.heads},
                              {"layer_norm_epsilon", config_.layer_norm_eps}};
  std::ofstream(dir / "config.json", std::ios::trunc) << cfg.dump(2) << '\n';
  tokenizer_.save(dir / "vocab.json", dir / "merges.txt");
  std::map<std::string, const Matrix*> tensors;
  for (auto& [name, p] : const_cast<Gpt2LM*>(this)->named_parameters()) tensors.emplace(name, &p->value);
  write_safetensors(dir / "model.safetensors", tensors);
}

Matrix Gpt2LM::logits(std::span<const int> ids) const {
  const auto& c = config_;
  const int n = static_cast<int>(ids.size());
  if (n == 0) throw std::invalid_argument("gpt2: empty input");
  if (n > c.positions) throw std::length_error("gpt2: input exceeds the context window");
  // Inference only: the graph records no gradients, so parameters are read
  // but never written.
  auto& self = const_cast<Gpt2LM&>(*this);
  nn::Graph g(false);
  std::vector<int> positions(static_cast<std::size_t>(n));
  std::iota(positions.begin(), positions.end(), 0);
  const Var wte = g.param(self.wte_);
  Var x = g.add(g.embedding(wte, ids), g.embedding(g.param(self.wpe_), positions));
  const int head_dim = c.hidden / c.heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
  for (auto& b : self.blocks_) {
    const Var a = g.layer_norm(x, g.param(b.ln1_g), g.param(b.ln1_b), c.layer_norm_eps);
    const Var qkv = g.affine(a, g.param(b.attn_w), g.param(b.attn_b));
    std::vector<Var> heads;
    for (int h = 0; h < c.heads; ++h) {
      const Var q = g.slice_cols(qkv, h * head_dim, head_dim);
      const Var k = g.slice_cols(qkv, c.hidden + h * head_dim, head_dim);
      const Var v = g.slice_cols(qkv, 2 * c.hidden + h * head_dim, head_dim);
      const Var p = g.softmax_rows(g.scale(g.matmul_bt(q, k), scale), true);
      heads.push_back(g.matmul(p, v));
    }
    x = g.add(x, g.affine(g.concat_cols(heads), g.param(b.proj_w), g.param(b.proj_b)));
    const Var m = g.layer_norm(x, g.param(b.ln2_g), g.param(b.ln2_b), c.layer_norm_eps);
    const Var f = g.gelu_tanh(g.affine(m, g.param(b.fc_w), g.param(b.fc_b)));
    x = g.add(x, g.affine(f, g.param(b.out_w), g.param(b.out_b)));
  }
  x = g.layer_norm(x, g.param(self.lnf_g_), g.param(self.lnf_b_), c.layer_norm_eps);
  return g.value(x) * wte_.value.transpose();
}

namespace {

double log_softmax_at(const Eigen::Ref<const Eigen::RowVectorXf>& row, int index) {
  const double mx = row.maxCoeff();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < row.size(); ++i) sum += std::exp(static_cast<double>(row[i]) - mx);
  return static_cast<double>(row[index]) - mx - std::log(sum);
}

}  // namespace

std::vector<double> Gpt2LM::token_logprobs(std::span<const int> ids) const {
  if (ids.size() < 2) return {};
  const Matrix z = logits(ids.first(ids.size() - 1));
  std::vector<double> out;
  out.reserve(ids.size() - 1);
  for (std::size_t i = 1; i < ids.size(); ++i) out.push_back(log_softmax_at(z.row(static_cast<Eigen::Index>(i - 1)), ids[i]));
  return out;
}

std::vector<double> Gpt2LM::next_token_logprobs(std::span<const int> prefix) const {
  const Matrix z = logits(prefix);
  const auto last = z.row(z.rows() - 1);
  const double mx = last.maxCoeff();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < last.size(); ++i) sum += std::exp(static_cast<double>(last[i]) - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(static_cast<std::size_t>(last.size()));
  for (Eigen::Index i = 0; i < last.size(); ++i) out[static_cast<std::size_t>(i)] = last[i] - lse;
  return out;
}

std::vector<double> Gpt2LM::word_logprobs(std::string_view sentence) const {
  const auto words = word_tokenize(sentence);
  if (words.empty()) throw std::invalid_argument("gpt2: empty sentence");
  const auto pieces = tokenizer_.encode(sentence);
  std::vector<int> ids = {tokenizer_.eos_id()};
  for (const auto& p : pieces) ids.push_back(p.id);
  const auto lp = token_logprobs(ids);

  std::vector<double> out(words.size(), 0.0);
  for (std::size_t j = 0; j < pieces.size(); ++j) {
    // Last non-space byte of the piece; whitespace-only pieces go to the
    // following word.
    std::size_t anchor = pieces[j].end;
    while (anchor > pieces[j].begin && (sentence[anchor - 1] == ' ' || sentence[anchor - 1] == '\t' ||
                                        sentence[anchor - 1] == '\n' || sentence[anchor - 1] == '\r')) {
      --anchor;
    }
    std::size_t w = 0;
    if (anchor == pieces[j].begin) {
      while (w + 1 < words.size() && words[w].end <= pieces[j].begin) ++w;
    } else {
      const std::size_t byte = anchor - 1;
      while (w + 1 < words.size() && words[w + 1].begin <= byte) ++w;
    }
    out[w] += lp[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// n-gram

namespace {

constexpr double kLog10Floor = -99.0;
const std::string kBos = "<s>";
const std::string kEos = "</s>";
const std::string kUnk = "<unk>";

std::string join(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace

NgramLM NgramLM::load_arpa(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ARPA file '" + path.string() + "'");
  NgramLM lm;
  std::string line;
  int section = 0;
  bool seen_data = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "\\data\\") {
      seen_data = true;
      continue;
    }
    if (line == "\\end\\") break;
    if (line.rfind("ngram ", 0) == 0) {
      const auto eq = line.find('=');
      const int n = std::stoi(line.substr(6, eq - 6));
      if (static_cast<int>(lm.counts_.size()) < n) lm.counts_.resize(static_cast<std::size_t>(n));
      lm.counts_[static_cast<std::size_t>(n - 1)] = std::stoul(line.substr(eq + 1));
      lm.order_ = std::max(lm.order_, n);
      continue;
    }
    if (line.front() == '\\' && line.find("-grams:") != std::string::npos) {
      section = std::stoi(line.substr(1));
      continue;
    }
    if (!seen_data || section == 0) continue;
    std::istringstream fields(line);
    double prob = 0.0;
    if (!(fields >> prob)) throw std::runtime_error("ARPA line " + std::to_string(line_no) + ": bad probability");
    std::vector<std::string> words(static_cast<std::size_t>(section));
    for (auto& w : words) {
      if (!(fields >> w)) throw std::runtime_error("ARPA line " + std::to_string(line_no) + ": short n-gram");
    }
    Entry e;
    e.log10_prob = prob;
    double bow = 0.0;
    if (fields >> bow) e.log10_backoff = bow;
    if (section == 1 && words[0] == kUnk) lm.has_unk_ = true;
    lm.entries_[join(words)] = e;
  }
  if (!seen_data || lm.order_ == 0) throw std::runtime_error("'" + path.string() + "' is not an ARPA file");
  return lm;
}

void NgramLM::save_arpa(const fs::path& path) const {
  std::vector<std::vector<std::pair<std::string, Entry>>> by_order(static_cast<std::size_t>(order_));
  for (const auto& [key, e] : entries_) {
    const auto n = static_cast<std::size_t>(std::count(key.begin(), key.end(), ' ') + 1);
    by_order[n - 1].emplace_back(key, e);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "\\data\\\n";
  for (std::size_t n = 0; n < by_order.size(); ++n) out << "ngram " << n + 1 << '=' << by_order[n].size() << '\n';
  char buf[64];
  for (std::size_t n = 0; n < by_order.size(); ++n) {
    auto& list = by_order[n];
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    out << "\n\\" << n + 1 << "-grams:\n";
    for (const auto& [key, e] : list) {
      std::snprintf(buf, sizeof buf, "%.9g", e.log10_prob);
      out << buf << '\t' << key;
      if (n + 1 < by_order.size()) {
        std::snprintf(buf, sizeof buf, "%.9g", e.log10_backoff);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

NgramLM NgramLM::train(std::span<const std::string> sentences, int order, double discount, std::size_t min_count) {
  if (order < 1) throw std::invalid_argument("n-gram order must be positive");
  if (!(discount > 0.0 && discount < 1.0)) throw std::invalid_argument("discount must lie in (0, 1)");
  std::vector<std::vector<std::string>> corpus;
  std::map<std::string, std::size_t> freq;
  for (const auto& s : sentences) {
    auto words = word_strings(s);
    for (const auto& w : words) ++freq[w];
    corpus.push_back(std::move(words));
  }
  if (corpus.empty()) throw std::invalid_argument("n-gram training needs sentences");

  // Raw counts per order; n-grams never end in <s>.
  using Key = std::vector<std::string>;
  std::vector<std::map<Key, double>> raw(static_cast<std::size_t>(order));
  for (auto& words : corpus) {
    Key toks = {kBos};
    for (auto& w : words) toks.push_back(freq[w] >= min_count ? w : kUnk);
    toks.push_back(kEos);
    for (std::size_t end = 1; end < toks.size(); ++end) {
      for (int n = 1; n <= order; ++n) {
        if (static_cast<std::size_t>(n) > end + 1) break;
        raw[static_cast<std::size_t>(n - 1)][Key(toks.begin() + static_cast<long>(end + 1 - n),
                                                 toks.begin() + static_cast<long>(end + 1))] += 1.0;
      }
    }
  }

  // Adjusted counts: raw for the top order and for n-grams starting at <s>,
  // continuation counts otherwise.
  std::vector<std::map<Key, double>> adj(static_cast<std::size_t>(order));
  adj[static_cast<std::size_t>(order - 1)] = raw[static_cast<std::size_t>(order - 1)];
  for (int n = order - 1; n >= 1; --n) {
    auto& a = adj[static_cast<std::size_t>(n - 1)];
    for (const auto& [g, c] : raw[static_cast<std::size_t>(n - 1)]) {
      if (g.front() == kBos) a[g] = c;
    }
    for (const auto& [g, c] : raw[static_cast<std::size_t>(n)]) {
      const Key tail(g.begin() + 1, g.end());
      if (tail.front() != kBos) a[tail] += 1.0;
    }
  }

  // Vocabulary for the uniform floor: every predicted unigram plus <unk>.
  std::set<std::string> vocab = {kUnk};
  for (const auto& [g, c] : raw[0]) {
    if (g[0] != kBos) vocab.insert(g[0]);
  }

  // Context totals and type counts per order.
  std::vector<std::map<Key, std::pair<double, double>>> ctx(static_cast<std::size_t>(order));
  for (int n = 1; n <= order; ++n) {
    for (const auto& [g, c] : adj[static_cast<std::size_t>(n - 1)]) {
      auto& t = ctx[static_cast<std::size_t>(n - 1)][Key(g.begin(), g.end() - 1)];
      t.first += c;
      t.second += 1.0;
    }
  }

  NgramLM lm;
  lm.order_ = order;
  lm.has_unk_ = true;
  lm.counts_.assign(static_cast<std::size_t>(order), 0);
  std::map<Key, double> prob;  // interpolated probabilities of observed n-grams

  const auto lower = [&](const Key& g) -> double {
    // Interpolated estimate for an n-gram that may be unseen at its order.
    std::function<double(const Key&)> p = [&](const Key& k) -> double {
      const std::size_t n = k.size();
      if (n == 0) return 1.0 / static_cast<double>(vocab.size());
      const Key h(k.begin(), k.end() - 1);
      const Key shorter(k.begin() + 1, k.end());
      const auto& totals = ctx[n - 1];
      const auto it = totals.find(h);
      if (it == totals.end()) return n == 1 ? p({}) : p(shorter);
      const auto& counts = adj[n - 1];
      const auto c = counts.find(k);
      const double num = c == counts.end() ? 0.0 : std::max(c->second - discount, 0.0);
      const double gamma = discount * it->second.second / it->second.first;
      return num / it->second.first + gamma * (n == 1 ? p({}) : p(shorter));
    };
    return p(g);
  };

  for (int n = 1; n <= order; ++n) {
    for (const auto& [g, c] : raw[static_cast<std::size_t>(n - 1)]) {
      Entry e;
      if (n == 1 && g[0] == kBos) {
        e.log10_prob = kLog10Floor;
      } else {
        e.log10_prob = std::log10(lower(g));
      }
      lm.entries_[join(g)] = e;
      ++lm.counts_[static_cast<std::size_t>(n - 1)];
    }
  }
  if (!lm.entries_.contains(kUnk)) {
    lm.entries_[kUnk] = Entry{std::log10(lower({kUnk})), 0.0};
    ++lm.counts_[0];
  }
  // <s> is never predicted but carries the back-off weight of sentence starts.
  if (!lm.entries_.contains(kBos)) {
    lm.entries_[kBos] = Entry{kLog10Floor, 0.0};
    ++lm.counts_[0];
  }
  // Back-off weight of context h is the interpolation weight of the order
  // above it.
  for (int n = 1; n < order; ++n) {
    for (const auto& [h, t] : ctx[static_cast<std::size_t>(n)]) {
      const auto it = lm.entries_.find(join(h));
      if (it == lm.entries_.end()) continue;
      it->second.log10_backoff = std::log10(discount * t.second / t.first);
    }
  }
  return lm;
}

double NgramLM::log10_prob(std::span<const std::string> context, const std::string& word) const {
  const std::string& w = entries_.contains(word) ? word : kUnk;
  if (!entries_.contains(w)) return kLog10Floor;
  const std::size_t max_ctx = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
  double backoff = 0.0;
  for (std::size_t len = max_ctx + 1; len-- > 0;) {
    const auto h = context.last(len);
    std::string key = join(h);
    const std::string full = key.empty() ? w : key + ' ' + w;
    if (const auto it = entries_.find(full); it != entries_.end()) return it->second.log10_prob + backoff;
    if (const auto it = entries_.find(key); !key.empty() && it != entries_.end()) {
      backoff += it->second.log10_backoff;
    }
  }
  return kLog10Floor;
}

std::vector<double> NgramLM::word_logprobs(std::span<const std::string> words) const {
  if (words.empty()) throw std::invalid_argument("n-gram: empty sentence");
  std::vector<std::string> context = {kBos};
  std::vector<double> out;
  out.reserve(words.size());
  for (const auto& word : words) {
    out.push_back(log10_prob(context, word) * std::numbers::ln10);
    context.push_back(entries_.contains(word) ? word : kUnk);
  }
  return out;
}

std::vector<double> NgramLM::word_logprobs(std::string_view sentence) const {
  const auto words = word_strings(sentence);
  return word_logprobs(std::span<const std::string>(words));
}

std::unique_ptr<CausalLM> load_language_model(const std::string& lm_id, const ModelCache& cache) {
  const fs::path path = cache.resolve(lm_id);
  if (fs::is_regular_file(path) && path.extension() == ".arpa") {
    return std::make_unique<NgramLM>(NgramLM::load_arpa(path));
  }
  if (fs::is_directory(path)) {
    if (fs::exists(path / "model.arpa")) return std::make_unique<NgramLM>(NgramLM::load_arpa(path / "model.arpa"));
    if (fs::exists(path / "vocab.json")) return Gpt2LM::load(path);
  }
  throw std::runtime_error("language model '" + lm_id + "' not found (looked at '" + path.string() + "')");
}

// ---------------------------------------------------------------------------

std::vector<double> threshold_candidates(std::span<const ScoredSentence> scores) {
  std::vector<double> values;
  for (const auto& s : scores) values.push_back(s.logprob);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> out;
  if (values.empty()) return out;
  out.push_back(values.front() - 1.0);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) out.push_back(0.5 * (values[i] + values[i + 1]));
  out.push_back(values.back() + 1.0);
  return out;
}

ThresholdResult lm_threshold_search(std::span<const ScoredSentence> scores) {
  if (scores.empty()) throw std::invalid_argument("threshold search: no scores");
  std::size_t positives = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.logprob)) throw std::invalid_argument("threshold search: non-finite score");
    positives += s.label == 1;
  }
  if (positives == 0 || positives == scores.size()) {
    throw std::invalid_argument("threshold search: both labels are required");
  }
  std::vector<ScoredSentence> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.logprob < b.logprob; });
  const auto candidates = threshold_candidates(scores);

  // Sweep: below the first candidate nothing is called funny, so every
  // serious sentence is right. Each step moves one score group across.
  std::size_t correct = scores.size() - positives;
  std::size_t best_correct = correct;
  double best = candidates.front();
  std::size_t i = 0;
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    while (i < sorted.size() && sorted[i].logprob < candidates[c]) {
      if (sorted[i].label == 1) {
        ++correct;
      } else {
        --correct;
      }
      ++i;
    }
    if (correct > best_correct) {
      best_correct = correct;
      best = candidates[c];
    }
  }
  return {best, static_cast<double>(best_correct) / static_cast<double>(scores.size())};
}

PairPrediction lm_pair_predict(double first_logprob, double second_logprob) {
  PairPrediction p;
  p.first_logprob = first_logprob;
  p.second_logprob = second_logprob;
  p.tie = first_logprob == second_logprob;
  p.funny_index = second_logprob < first_logprob ? 1 : 0;
  return p;
}

PairPrediction lm_pair_predict(const CausalLM& lm, std::string_view first, std::string_view second) {
  return lm_pair_predict(lm.sentence_logprob(first), lm.sentence_logprob(second));
}

}  // namespace punchline
