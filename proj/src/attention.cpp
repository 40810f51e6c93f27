#include "punchline/attention.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <random>

namespace punchline {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// AttentionTensor

AttentionTensor AttentionTensor::zeros(int layers, int heads, int seq_len) {
  if (layers < 0 || heads < 0 || seq_len < 0) throw std::invalid_argument("negative attention tensor shape");
  AttentionTensor t;
  t.layers = layers;
  t.heads = heads;
  t.seq_len = seq_len;
  t.weights.assign(static_cast<std::size_t>(layers) * heads * seq_len * seq_len, 0.0f);
  return t;
}

double AttentionTensor::received(int layer, int head, int key) const {
  double sum = 0.0;
  for (int q = 0; q < seq_len; ++q) sum += at(layer, head, q, key);
  return sum;
}

double AttentionTensor::max_row_error() const {
  double worst = 0.0;
  for (int l = 0; l < layers; ++l) {
    for (int h = 0; h < heads; ++h) {
      for (int q = 0; q < seq_len; ++q) {
        double sum = 0.0;
        for (const float w : row(l, h, q)) {
          if (w < 0.0f) worst = std::max(worst, static_cast<double>(-w));
          sum += w;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
      }
    }
  }
  return worst;
}

std::optional<HeadId> HeadId::parse(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos || dash == 0 || dash + 1 == text.size()) return std::nullopt;
  const auto number = [](std::string_view s) -> std::optional<int> {
    int v = 0;
    for (const char c : s) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + (c - '0');
      if (v > 100000) return std::nullopt;
    }
    return v;
  };
  const auto l = number(text.substr(0, dash));
  const auto h = number(text.substr(dash + 1));
  if (!l || !h || *l < 1 || *h < 1) return std::nullopt;
  return HeadId{*l, *h};
}

namespace {

constexpr char kMagic[8] = {'P', 'L', 'A', 'T', 'T', 'N', '0', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("attention file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_attention_file(const fs::path& path, std::span<const AttentionTensor> tensors) {
  static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.layers));
    put_u32(out, static_cast<std::uint32_t>(t.heads));
    put_u32(out, static_cast<std::uint32_t>(t.seq_len));
    put_u32(out, static_cast<std::uint32_t>(t.sentence_id.size()));
    out.write(t.sentence_id.data(), static_cast<std::streamsize>(t.sentence_id.size()));
    for (const float w : t.weights) {
      std::uint32_t bits;
      std::memcpy(&bits, &w, 4);
      put_u32(out, bits);
    }
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<AttentionTensor> read_attention_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("'" + path.string() + "' is not an attention file");
  }
  const std::uint32_t count = get_u32(in);
  std::vector<AttentionTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto layers = get_u32(in), heads = get_u32(in), seq = get_u32(in), id_len = get_u32(in);
    if (layers > 4096 || heads > 4096 || seq > 65536 || id_len > (1u << 20)) {
      throw std::runtime_error("attention file record " + std::to_string(i) + " has an implausible header");
    }
    auto t = AttentionTensor::zeros(static_cast<int>(layers), static_cast<int>(heads), static_cast<int>(seq));
    t.sentence_id.resize(id_len);
    if (!in.read(t.sentence_id.data(), id_len)) throw std::runtime_error("attention file truncated");
    for (float& w : t.weights) {
      const std::uint32_t bits = get_u32(in);
      std::memcpy(&w, &bits, 4);
    }
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Divergences

namespace {

template <typename T>
double js_impl(std::span<const T> p, std::span<const T> q) {
  if (p.size() != q.size()) throw std::invalid_argument("js_divergence: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p[i], b = q[i];
    const double m = 0.5 * (a + b);
    if (a > 0.0) sum += 0.5 * a * std::log2(a / m);
    if (b > 0.0) sum += 0.5 * b * std::log2(b / m);
  }
  // Rounding can push identical inputs a hair below 0 or disjoint ones
  // above 1.
  return std::clamp(sum, 0.0, 1.0);
}

void require_same_shape(const AttentionTensor& a, const AttentionTensor& b) {
  if (a.layers != b.layers || a.heads != b.heads || a.seq_len != b.seq_len) {
    throw std::invalid_argument("attention tensors differ in shape (" + std::to_string(a.seq_len) + " vs " +
                                std::to_string(b.seq_len) + " positions); the models must share a tokenizer");
  }
}

}  // namespace

double js_divergence(std::span<const double> p, std::span<const double> q) { return js_impl(p, q); }
double js_divergence(std::span<const float> p, std::span<const float> q) { return js_impl(p, q); }

HeadMatrix HeadMatrix::zeros(int layers, int heads) {
  HeadMatrix m;
  m.layers = layers;
  m.heads = heads;
  m.values.assign(static_cast<std::size_t>(layers * heads), 0.0);
  return m;
}

HeadId argmax_head(const HeadMatrix& m) {
  if (m.values.empty()) throw std::invalid_argument("argmax of an empty head matrix");
  const auto it = std::max_element(m.values.begin(), m.values.end());
  const int index = static_cast<int>(it - m.values.begin());
  return HeadId{index / m.heads + 1, index % m.heads + 1};
}

double sentence_head_distance(const AttentionTensor& a, const AttentionTensor& b, int layer, int head) {
  require_same_shape(a, b);
  if (a.seq_len == 0) throw std::invalid_argument("empty attention tensor");
  double sum = 0.0;
  for (int q = 0; q < a.seq_len; ++q) sum += js_divergence(a.row(layer, head, q), b.row(layer, head, q));
  return sum / a.seq_len;
}

HeadMatrix sentence_distance_matrix(const AttentionTensor& a, const AttentionTensor& b) {
  require_same_shape(a, b);
  auto m = HeadMatrix::zeros(a.layers, a.heads);
  for (int l = 0; l < a.layers; ++l) {
    for (int h = 0; h < a.heads; ++h) m.at(l, h) = sentence_head_distance(a, b, l, h);
  }
  return m;
}

HeadMatrix model_head_distance(std::span<const AttentionTensor> model_a, std::span<const AttentionTensor> model_b) {
  if (model_a.size() != model_b.size()) throw std::invalid_argument("models were run on different sentence sets");
  if (model_a.empty()) throw std::invalid_argument("model distance over no sentences");
  auto total = HeadMatrix::zeros(model_a[0].layers, model_a[0].heads);
  for (std::size_t s = 0; s < model_a.size(); ++s) {
    const auto m = sentence_distance_matrix(model_a[s], model_b[s]);
    if (m.layers != total.layers || m.heads != total.heads) throw std::invalid_argument("head layout changes");
    for (std::size_t i = 0; i < total.values.size(); ++i) total.values[i] += m.values[i];
  }
  for (auto& v : total.values) v /= static_cast<double>(model_a.size());
  return total;
}

double model_head_distance(std::span<const AttentionTensor> model_a, std::span<const AttentionTensor> model_b,
                           HeadId head) {
  if (model_a.size() != model_b.size()) throw std::invalid_argument("models were run on different sentence sets");
  if (model_a.empty()) throw std::invalid_argument("model distance over no sentences");
  double sum = 0.0;
  for (std::size_t s = 0; s < model_a.size(); ++s) {
    sum += sentence_head_distance(model_a[s], model_b[s], head.layer - 1, head.head - 1);
  }
  return sum / static_cast<double>(model_a.size());
}

std::vector<double> layer_distance(const HeadMatrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.layers), 0.0);
  for (int l = 0; l < m.layers; ++l) {
    for (int h = 0; h < m.heads; ++h) out[static_cast<std::size_t>(l)] += m.at(l, h);
    out[static_cast<std::size_t>(l)] /= m.heads;
  }
  return out;
}

std::optional<double> funny_serious_distance(const AttentionTensor& funny, const AttentionTensor& serious,
                                             HeadId head) {
  if (funny.seq_len != serious.seq_len) return std::nullopt;
  return sentence_head_distance(funny, serious, head.layer - 1, head.head - 1);
}

FunnySeriousDistance funny_serious_distance(std::span<const AttentionTensor> funny,
                                            std::span<const AttentionTensor> serious) {
  if (funny.size() != serious.size()) throw std::invalid_argument("funny/serious lists differ in length");
  FunnySeriousDistance out;
  for (std::size_t i = 0; i < funny.size(); ++i) {
    if (funny[i].seq_len != serious[i].seq_len) {
      ++out.excluded;
      out.excluded_ids.push_back(funny[i].sentence_id);
      continue;
    }
    const auto m = sentence_distance_matrix(funny[i], serious[i]);
    if (out.used == 0) out.distance = HeadMatrix::zeros(m.layers, m.heads);
    for (std::size_t k = 0; k < m.values.size(); ++k) out.distance.values[k] += m.values[k];
    ++out.used;
  }
  for (auto& v : out.distance.values) v /= static_cast<double>(out.used);
  return out;
}

// ---------------------------------------------------------------------------
// Received attention

bool valid_chunk_map(std::span<const Span> word_positions, int seq_len) {
  std::size_t next = 1;
  for (const auto& s : word_positions) {
    if (s.begin != next || s.end < s.begin) return false;
    next = s.end;
  }
  return static_cast<int>(next) == seq_len - 1;
}

std::vector<int> chunk_positions(std::span<const Span> word_positions, Span words) {
  std::vector<int> out;
  for (std::size_t w = words.begin; w < words.end; ++w) {
    const Span& s = word_positions[w];
    for (std::size_t p = s.begin; p < s.end; ++p) out.push_back(static_cast<int>(p));
  }
  return out;
}

double received_total(const AttentionTensor& t, std::span<const int> positions) {
  double sum = 0.0;
  for (int l = 0; l < t.layers; ++l) {
    for (int h = 0; h < t.heads; ++h) {
      for (const int k : positions) sum += t.received(l, h, k);
    }
  }
  return sum;
}

SentenceAttention extract_attention(TransformerEncoder& encoder, const std::string& sentence_id,
                                    std::string_view sentence) {
  SentenceAttention s;
  s.sentence_id = sentence_id;
  s.text = std::string(sentence);
  s.words = word_strings(sentence);
  if (s.words.empty()) throw std::invalid_argument("attention of an empty sentence");
  const auto input = encoder.tokenize(std::span<const std::string>(s.words));
  s.word_positions = input.word_positions;
  s.attention = encoder.attention(input, sentence_id);
  return s;
}

SentenceAttention extract_attention(HumorClassifier& classifier, const std::string& sentence_id,
                                    std::string_view sentence) {
  auto* t = dynamic_cast<TransformerEncoder*>(&classifier.encoder());
  if (!t) {
    throw std::invalid_argument(std::string("attention analysis needs a transformer encoder, not ") +
                                std::string(to_string(classifier.encoder().kind())));
  }
  return extract_attention(*t, sentence_id, sentence);
}

namespace {

std::size_t first_content_word(std::span<const std::string> words) {
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!is_punctuation_token(words[i])) return i;
  }
  return 0;
}

}  // namespace

std::size_t last_word_baseline(std::span<const std::string> words) {
  if (words.empty()) throw std::invalid_argument("last word of an empty sentence");
  for (std::size_t i = words.size(); i-- > 0;) {
    if (!is_punctuation_token(words[i])) return i;
  }
  return words.size() - 1;
}

SpecialPositionTotals special_position_attention(std::span<const SentenceAttention> sentences) {
  SpecialPositionTotals out;
  for (const auto& s : sentences) {
    if (s.words.empty()) throw std::invalid_argument("special positions of an empty sentence");
    const std::size_t first = first_content_word(s.words);
    const std::size_t last = last_word_baseline(s.words);
    const auto pf = chunk_positions(s.word_positions, {first, first + 1});
    const auto pl = chunk_positions(s.word_positions, {last, last + 1});
    const int cls[1] = {0};
    const int sep[1] = {s.attention.seq_len - 1};
    out.first_word_values.push_back(received_total(s.attention, pf));
    out.last_word_values.push_back(received_total(s.attention, pl));
    out.cls_values.push_back(received_total(s.attention, cls));
    out.sep_values.push_back(received_total(s.attention, sep));
  }
  out.sentences = sentences.size();
  const auto mean = [](const std::vector<double>& v) {
    double sum = 0.0;
    for (const double x : v) sum += x;
    return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
  };
  out.first_word = mean(out.first_word_values);
  out.last_word = mean(out.last_word_values);
  out.cls = mean(out.cls_values);
  out.sep = mean(out.sep_values);
  return out;
}

ChunkMaps chunk_attention_maps(std::span<const PairAttention> pairs) {
  if (pairs.empty()) throw std::invalid_argument("chunk maps over no pairs");
  const int L = pairs[0].funny.attention.layers, H = pairs[0].funny.attention.heads;
  ChunkMaps out;
  for (auto* m : {&out.funny_chunk, &out.funny_other, &out.serious_chunk, &out.serious_other, &out.funny_chunk_raw,
                  &out.funny_other_raw, &out.funny_special_raw}) {
    *m = HeadMatrix::zeros(L, H);
  }
  std::size_t n_a = 0, n_b = 0, n_c = 0, n_d = 0;
  double length_sum = 0.0;

  // Adds received/size per head into `target` and the raw sums into `raw`.
  const auto accumulate = [&](const AttentionTensor& t, const std::vector<int>& positions, HeadMatrix* target,
                              HeadMatrix* raw) {
    if (t.layers != L || t.heads != H) throw std::invalid_argument("head layout changes across pairs");
    for (int l = 0; l < L; ++l) {
      for (int h = 0; h < H; ++h) {
        double sum = 0.0;
        for (const int k : positions) sum += t.received(l, h, k);
        if (raw) raw->at(l, h) += sum;
        if (target && !positions.empty()) target->at(l, h) += sum / static_cast<double>(positions.size());
      }
    }
  };

  for (const auto& p : pairs) {
    const auto& f = p.funny;
    const auto& s = p.serious;
    const Span fspan = p.alignment.funny_span;
    const Span sspan = p.alignment.serious_span;
    if (f.words.size() != p.alignment.funny_tokens.size() || s.words.size() != p.alignment.serious_tokens.size()) {
      throw std::invalid_argument("pair '" + p.pair_id + "': attention words do not match the alignment");
    }
    const auto fa = chunk_positions(f.word_positions, fspan);
    std::vector<int> fb = chunk_positions(f.word_positions, {0, fspan.begin});
    const auto fb_tail = chunk_positions(f.word_positions, {fspan.end, f.words.size()});
    fb.insert(fb.end(), fb_tail.begin(), fb_tail.end());
    const auto sc = chunk_positions(s.word_positions, sspan);
    std::vector<int> sd = chunk_positions(s.word_positions, {0, sspan.begin});
    const auto sd_tail = chunk_positions(s.word_positions, {sspan.end, s.words.size()});
    sd.insert(sd.end(), sd_tail.begin(), sd_tail.end());
    const std::vector<int> specials = {0, f.attention.seq_len - 1};

    accumulate(f.attention, fa, fa.empty() ? nullptr : &out.funny_chunk, &out.funny_chunk_raw);
    accumulate(f.attention, fb, fb.empty() ? nullptr : &out.funny_other, &out.funny_other_raw);
    accumulate(f.attention, specials, nullptr, &out.funny_special_raw);
    accumulate(s.attention, sc, sc.empty() ? nullptr : &out.serious_chunk, nullptr);
    accumulate(s.attention, sd, sd.empty() ? nullptr : &out.serious_other, nullptr);
    fa.empty() ? ++out.empty_funny_chunk : ++n_a;
    fb.empty() ? ++out.empty_funny_other : ++n_b;
    sc.empty() ? ++out.empty_serious_chunk : ++n_c;
    sd.empty() ? ++out.empty_serious_other : ++n_d;
    length_sum += f.attention.seq_len;
  }
  const auto divide = [](HeadMatrix& m, std::size_t n) {
    for (auto& v : m.values) v = n ? v / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  };
  out.pairs = pairs.size();
  divide(out.funny_chunk, n_a);
  divide(out.funny_other, n_b);
  divide(out.serious_chunk, n_c);
  divide(out.serious_other, n_d);
  divide(out.funny_chunk_raw, out.pairs);
  divide(out.funny_other_raw, out.pairs);
  divide(out.funny_special_raw, out.pairs);
  out.mean_funny_length = length_sum / static_cast<double>(out.pairs);
  return out;
}

// ---------------------------------------------------------------------------
// Localization

std::vector<double> word_received(const SentenceAttention& s, int layer, int head) {
  std::vector<double> out(s.words.size(), 0.0);
  for (std::size_t w = 0; w < s.words.size(); ++w) {
    for (std::size_t p = s.word_positions[w].begin; p < s.word_positions[w].end; ++p) {
      out[w] += s.attention.received(layer, head, static_cast<int>(p));
    }
  }
  return out;
}

Localization localize_from_totals(std::span<const double> word_totals, Span gold) {
  if (word_totals.empty()) throw std::invalid_argument("localization over no words");
  const auto it = std::max_element(word_totals.begin(), word_totals.end());
  Localization out;
  out.predicted_word = static_cast<std::size_t>(it - word_totals.begin());
  out.hit = gold.contains(out.predicted_word);
  return out;
}

Localization localize_edit(const SentenceAttention& s, HeadId head, Span gold) {
  if (head.layer > s.attention.layers || head.head > s.attention.heads) {
    throw std::invalid_argument("head " + head.str() + " is outside the model");
  }
  return localize_from_totals(word_received(s, head.layer - 1, head.head - 1), gold);
}

std::size_t pos_baseline(std::span<const std::string> words, std::span<const PosTag> tags, PosTag tag) {
  for (std::size_t i = 0; i < words.size() && i < tags.size(); ++i) {
    if (tags[i] == tag) return i;
  }
  return last_word_baseline(words);
}

std::size_t lm_baseline(std::span<const double> word_logprobs) {
  if (word_logprobs.empty()) throw std::invalid_argument("likelihood baseline over no words");
  return static_cast<std::size_t>(std::min_element(word_logprobs.begin(), word_logprobs.end()) -
                                  word_logprobs.begin());
}

PosTag most_edited_tag(const PosTagger& tagger, std::span<const TokenAlignment> alignments) {
  std::map<PosTag, std::size_t> counts;
  for (const auto& a : alignments) {
    const auto tags = tagger.tag(a.funny_tokens);
    for (std::size_t i = a.funny_span.begin; i < a.funny_span.end; ++i) ++counts[tags[i]];
  }
  PosTag best = PosTag::verb;
  std::size_t best_count = 0;
  for (const auto& [tag, n] : counts) {
    if (tag == PosTag::punct) continue;
    if (n > best_count) {
      best = tag;
      best_count = n;
    }
  }
  return best;
}

LocalizationReport localization_report(std::span<const PairAttention> pairs, HeadId head, const PosTagger& tagger,
                                       PosTag pos_tag, const CausalLM* lm) {
  LocalizationReport r;
  r.head = head;
  r.pos_tag = pos_tag;
  for (const auto& p : pairs) {
    const Span gold = p.alignment.funny_span;
    if (gold.empty()) {
      ++r.skipped;
      continue;
    }
    const auto& s = p.funny;
    r.head_hits.push_back(localize_edit(s, head, gold).hit ? 1.0 : 0.0);
    r.last_word_hits.push_back(gold.contains(last_word_baseline(s.words)) ? 1.0 : 0.0);
    const auto tags = tagger.tag(s.words);
    r.pos_hits.push_back(gold.contains(pos_baseline(s.words, tags, pos_tag)) ? 1.0 : 0.0);
    if (lm) {
      const auto lp = lm->word_logprobs(s.text);
      r.lm_hits.push_back(gold.contains(lm_baseline(lp)) ? 1.0 : 0.0);
    }
  }
  r.sentences = r.head_hits.size();
  const auto mean = [](const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (const double x : v) sum += x;
    return sum / static_cast<double>(v.size());
  };
  r.head_accuracy = mean(r.head_hits);
  r.last_word_accuracy = mean(r.last_word_hits);
  r.pos_accuracy = mean(r.pos_hits);
  r.lm_accuracy = mean(r.lm_hits);
  return r;
}

ReplacementResult random_replacement_activation(TransformerEncoder& encoder, HeadId head,
                                                std::span<const ReplacementItem> items, std::uint64_t seed,
                                                std::span<const std::string> vocabulary) {
  if (vocabulary.empty()) throw std::invalid_argument("replacement vocabulary is empty");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, vocabulary.size() - 1);
  const int l = head.layer - 1, h = head.head - 1;
  ReplacementResult r;
  double before_sum = 0.0, after_sum = 0.0;

  const auto per_position = [&](const std::vector<std::string>& words, Span gold) {
    const auto input = encoder.tokenize(std::span<const std::string>(words));
    const auto t = encoder.attention(input);
    if (l >= t.layers || h >= t.heads) throw std::invalid_argument("head " + head.str() + " is outside the model");
    const auto positions = chunk_positions(input.word_positions, gold);
    double sum = 0.0;
    for (const int k : positions) sum += t.received(l, h, k);
    return positions.empty() ? 0.0 : sum / static_cast<double>(positions.size());
  };

  for (const auto& item : items) {
    auto words = word_strings(item.sentence);
    if (item.gold.empty() || item.gold.end > words.size()) {
      ++r.skipped;
      continue;
    }
    before_sum += per_position(words, item.gold);
    for (std::size_t w = item.gold.begin; w < item.gold.end; ++w) words[w] = vocabulary[pick(rng)];
    after_sum += per_position(words, item.gold);
    ++r.items;
  }
  if (r.items == 0) throw std::invalid_argument("no items with an edited span");
  r.mean_before = before_sum / static_cast<double>(r.items);
  r.mean_after = after_sum / static_cast<double>(r.items);
  r.ratio = r.mean_after / r.mean_before;
  return r;
}

}  // namespace punchline
