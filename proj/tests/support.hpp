#pragma once

// Synthetic corpora and tiny models shared by the test binaries.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "punchline/corpus.hpp"
#include "punchline/encoders.hpp"
#include "punchline/language_model.hpp"
#include "punchline/word_vectors.hpp"

namespace punchline::testing {

namespace fs = std::filesystem;

inline fs::path scratch_dir(const std::string& name) {
  static const auto stamp = std::to_string(std::chrono::steady_clock::now().time_since_epoch().count());
  auto dir = fs::temp_directory_path() / ("punchline-test-" + stamp) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline const std::vector<std::string>& subjects() {
  static const std::vector<std::string> v = {"senate", "local man", "area woman", "nation", "congress",
                                             "ceo",    "mayor",     "scientists", "pope",   "study"};
  return v;
}
inline const std::vector<std::string>& verbs() {
  static const std::vector<std::string> v = {"announces", "unveils", "rejects", "approves", "debates", "delays"};
  return v;
}
inline const std::vector<std::string>& serious_objects() {
  static const std::vector<std::string> v = {"budget", "plan", "policy", "tax", "bill", "report", "merger", "vote"};
  return v;
}
inline const std::vector<std::string>& funny_objects() {
  static const std::vector<std::string> v = {"nap", "clown", "sandwich", "puppy", "divorce", "toilet", "sex",
                                             "hug"};
  return v;
}

// Template headlines whose funny side swaps the object for a silly one
// (sometimes inserting "disposable" instead). Splits are 70/15/15 by
// position; test pairs with quality 3 are the HQ ones.
inline std::vector<SentencePair> synthetic_pairs(std::size_t n, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  const auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };
  std::vector<SentencePair> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; out.size() < n; ++i) {
    const auto subj = pick(subjects()), verb = pick(verbs()), obj = pick(serious_objects());
    const bool tail = rng() % 3 == 0;
    const std::string head = subj + " " + verb + " new ";
    const std::string end = tail ? " for next year" : "";
    SentencePair p;
    p.pair_id = "p" + std::to_string(out.size());
    p.serious = head + obj + end;
    if (rng() % 5 == 0) {
      p.funny = head + "disposable " + obj + end;
    } else {
      p.funny = head + pick(funny_objects()) + end;
    }
    if (!seen.insert(p.funny + "|" + p.serious).second) continue;
    const std::size_t k = out.size();
    p.split = k * 100 < n * 70 ? Split::train : (k * 100 < n * 85 ? Split::val : Split::test);
    p.quality = static_cast<int>(1 + rng() % 3);
    if (p.split == Split::test && rng() % 2 == 0) p.humor_type = kHumorTypes[rng() % kHumorTypes.size()];
    out.push_back(std::move(p));
  }
  return out;
}

inline void write_tsv(const fs::path& path, const std::vector<SentencePair>& pairs) {
  std::ofstream out(path);
  out << "pair_id\tfunny\tserious\tsplit\tquality\thumor_type\n";
  for (const auto& p : pairs) {
    out << p.pair_id << '\t' << p.funny << '\t' << p.serious << '\t' << to_string(p.split) << '\t'
        << (p.quality ? std::to_string(*p.quality) : "") << '\t'
        << (p.humor_type ? std::string(to_string(*p.humor_type)) : "") << '\n';
  }
}

inline Corpus synthetic_corpus(std::size_t n, std::uint64_t seed = 1) {
  auto pairs = synthetic_pairs(n, seed);
  std::set<std::string> hq;
  for (const auto& p : pairs) {
    if (p.split == Split::test && p.quality == 3) hq.insert(p.pair_id);
  }
  return Corpus(std::move(pairs), std::move(hq));
}

inline std::vector<std::string> synthetic_words() {
  std::set<std::string> words = {"new", "for", "next", "year", "disposable"};
  for (const auto* list : {&subjects(), &verbs(), &serious_objects(), &funny_objects()}) {
    for (const auto& phrase : *list) {
      for (auto& w : word_strings(phrase)) words.insert(w);
    }
  }
  return {words.begin(), words.end()};
}

// Random vectors for every synthetic word (and nothing else).
inline WordVectors synthetic_vectors(int dim, std::uint64_t seed = 3) {
  const auto words = synthetic_words();
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  nn::Matrix table(static_cast<Eigen::Index>(words.size()), dim);
  for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = normal(rng);
  return WordVectors(words, table);
}

// WordPiece vocabulary in which "disposable" and "scientists" split into
// two pieces each.
inline WordPieceTokenizer tiny_wordpiece() {
  std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "dispos", "##able",
                                     "scien", "##tists"};
  for (const auto& w : synthetic_words()) {
    if (w != "disposable" && w != "scientists") tokens.push_back(w);
  }
  return WordPieceTokenizer::from_tokens(tokens);
}

inline TransformerConfig tiny_transformer_config(int vocab) {
  TransformerConfig c;
  c.vocab_size = vocab;
  c.hidden = 16;
  c.layers = 2;
  c.heads = 2;
  c.intermediate = 32;
  c.max_positions = 32;
  return c;
}

// A pretrained-style encoder directory with random weights.
inline fs::path make_tiny_mlm(const fs::path& dir, std::uint64_t seed = 5) {
  auto tok = tiny_wordpiece();
  TransformerEncoder enc(tiny_transformer_config(static_cast<int>(tok.size())), tok, EncoderKind::pretrained_mlm,
                         seed);
  enc.save(dir);
  return dir;
}

inline Gpt2Config tiny_gpt2_config(int vocab) {
  Gpt2Config c;
  c.vocab_size = vocab;
  c.positions = 64;
  c.hidden = 16;
  c.layers = 2;
  c.heads = 2;
  return c;
}

inline fs::path make_tiny_gpt2(const fs::path& dir, std::uint64_t seed = 7) {
  auto tok = BpeTokenizer::byte_level({{"e", "s"}, {"t", "h"}, {" ", "n"}, {" n", "e"}});
  Gpt2LM lm(tiny_gpt2_config(static_cast<int>(tok.size())), tok, seed);
  lm.save(dir);
  return dir;
}

}  // namespace punchline::testing
