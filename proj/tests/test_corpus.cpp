#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "punchline/corpus.hpp"
#include "punchline/hashing.hpp"
#include "support.hpp"

using namespace punchline;
namespace pt = punchline::testing;

namespace {

std::vector<std::string> residual(const std::vector<std::string>& t, Span s) {
  std::vector<std::string> out(t.begin(), t.begin() + static_cast<long>(s.begin));
  out.insert(out.end(), t.begin() + static_cast<long>(s.end), t.end());
  return out;
}

// Smallest total span length over every pair of contiguous deletions that
// leaves equal residuals.
std::size_t brute_force_min_edit(const std::vector<std::string>& f, const std::vector<std::string>& s) {
  std::size_t best = f.size() + s.size();
  for (std::size_t i1 = 0; i1 <= f.size(); ++i1) {
    for (std::size_t j1 = i1; j1 <= f.size(); ++j1) {
      for (std::size_t i2 = 0; i2 <= s.size(); ++i2) {
        for (std::size_t j2 = i2; j2 <= s.size(); ++j2) {
          if ((j1 - i1) + (j2 - i2) >= best) continue;
          if (residual(f, {i1, j1}) == residual(s, {i2, j2})) best = (j1 - i1) + (j2 - i2);
        }
      }
    }
  }
  return best;
}

std::set<std::string> token_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(Alignment, SwappedLastWord) {
  const auto a = compute_token_alignment(word_strings("tiger woods announces return to sex"),
                                         word_strings("tiger woods announces return to golf"));
  EXPECT_EQ(a.funny_span, (Span{5, 6}));
  EXPECT_EQ(a.serious_span, (Span{5, 6}));
  EXPECT_EQ(a.funny_tokens[5], "sex");
  EXPECT_EQ(a.serious_tokens[5], "golf");
  EXPECT_FALSE(a.widened);
}

TEST(Alignment, InsertedWordLeavesSeriousSpanEmpty) {
  const auto a = compute_token_alignment(word_strings("general motors reports record sales of new disposable car"),
                                         word_strings("general motors reports record sales of new car"));
  EXPECT_EQ(a.funny_span, (Span{7, 8}));
  EXPECT_EQ(a.funny_tokens[7], "disposable");
  EXPECT_TRUE(a.serious_span.empty());
  EXPECT_TRUE(alignment_round_trips(a));
}

TEST(Alignment, IdenticalSentencesThrow) {
  EXPECT_THROW(compute_token_alignment(word_strings("Same Words"), word_strings("same words")), CorpusError);
  EXPECT_THROW(compute_token_alignment(std::vector<std::string>{}, word_strings("a")), CorpusError);
}

TEST(Alignment, TailReplacementIsMinimalAgainstBruteForce) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 6;
    std::vector<std::string> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back("w" + std::to_string(rng() % 4));
    // Fresh tokens never occur elsewhere in the sentence.
    std::vector<std::string> f = s;
    const std::size_t k = trial < 100 ? 2 : 1 + rng() % n;
    const std::size_t start = trial < 100 ? n - 2 : rng() % (n - k + 1);
    const std::size_t repl = trial < 100 ? 2 : rng() % 3;
    std::vector<std::string> fresh;
    for (std::size_t i = 0; i < repl; ++i) fresh.push_back("new" + std::to_string(i));
    f.erase(f.begin() + static_cast<long>(start), f.begin() + static_cast<long>(start + k));
    f.insert(f.begin() + static_cast<long>(start), fresh.begin(), fresh.end());
    if (f == s || f.empty()) continue;
    const auto a = compute_token_alignment(f, s);
    EXPECT_TRUE(alignment_round_trips(a));
    EXPECT_EQ(a.funny_span.size() + a.serious_span.size(), brute_force_min_edit(f, s)) << "trial " << trial;
    if (trial < 100) {
      EXPECT_EQ(a.funny_span.size(), 2u);
      EXPECT_EQ(a.funny_span.end, f.size());
    }
  }
}

TEST(Alignment, TiesKeepTheLongestPrefix) {
  // "a a" vs "a": the extra token could be either one; the prefix wins.
  const auto a = compute_token_alignment(std::vector<std::string>{"a", "a"}, std::vector<std::string>{"a"});
  EXPECT_EQ(a.funny_span, (Span{1, 2}));
  EXPECT_TRUE(a.serious_span.empty());
}

TEST(Alignment, TwoRegionsAreWidenedAndFlagged) {
  const auto a = compute_token_alignment(word_strings("red cat sat on blue mat"), word_strings("big cat sat on small mat"));
  EXPECT_EQ(a.funny_span, (Span{0, 5}));
  EXPECT_TRUE(a.widened);
  EXPECT_TRUE(alignment_round_trips(a));
}

TEST(Alignment, RoundTripsOnEverySyntheticPair) {
  const auto corpus = pt::synthetic_corpus(400);
  for (const auto& p : corpus.pairs()) {
    const auto& a = corpus.alignment(p.pair_id);
    EXPECT_TRUE(alignment_round_trips(a)) << p.pair_id;
    EXPECT_FALSE(a.funny_span.empty() && a.serious_span.empty());
    EXPECT_LE(a.funny_span.end, a.funny_tokens.size());
    EXPECT_LE(a.serious_span.end, a.serious_tokens.size());
  }
}

TEST(Tokenize, PunctuationAndCase) {
  const auto w = word_strings("Obama's Plan: 'Tax' the RICH!");
  const std::vector<std::string> expected = {"obama", "'", "s", "plan", ":", "'", "tax", "'", "the", "rich", "!"};
  EXPECT_EQ(w, expected);
  EXPECT_TRUE(is_punctuation_token("!"));
  EXPECT_FALSE(is_punctuation_token("rich"));
}

TEST(Jaccard, HandCases) {
  EXPECT_DOUBLE_EQ(jaccard_distance({"a", "b"}, {"b", "a"}), 0.0);
  EXPECT_DOUBLE_EQ(jaccard_distance({"a", "b"}, {"c", "d"}), 1.0);
  EXPECT_NEAR(jaccard_distance({"a", "b", "c", "d"}, {"a", "b", "c", "e"}), 0.4, 1e-12);
}

TEST(Jaccard, SymmetricOrderInvariantAndPositiveOnPairs) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> a, b;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 6); ++i) a.push_back(std::string(1, static_cast<char>('a' + rng() % 6)));
    for (int i = 0; i < 1 + static_cast<int>(rng() % 6); ++i) b.push_back(std::string(1, static_cast<char>('a' + rng() % 6)));
    const double d = jaccard_distance(a, b);
    EXPECT_DOUBLE_EQ(d, jaccard_distance(b, a));
    auto shuffled = a;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_DOUBLE_EQ(d, jaccard_distance(shuffled, b));
    // Oracle: direct set arithmetic.
    const auto sa = token_set(a), sb = token_set(b);
    std::size_t inter = 0;
    for (const auto& x : sa) inter += sb.count(x);
    const double expected = 1.0 - static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
    EXPECT_NEAR(d, expected, 1e-12);
  }
  for (const auto& p : pt::synthetic_corpus(200).pairs()) EXPECT_GT(jaccard_distance(p), 0.0);
}

TEST(Instances, SingleSetupIsBalanced) {
  const auto corpus = pt::synthetic_corpus(120);
  const auto inst = make_instances(corpus, Setup::single, 3);
  ASSERT_EQ(inst.size(), 240u);
  EXPECT_EQ(std::count_if(inst.begin(), inst.end(), [](const Instance& i) { return i.label == 1; }), 120);
}

TEST(Instances, DeterministicPerSeed) {
  const auto corpus = pt::synthetic_corpus(120);
  const auto a = make_instances(corpus, Setup::paired, 9);
  const auto b = make_instances(corpus, Setup::paired, 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_EQ(a[i].label, b[i].label);
  }
}

TEST(Instances, PairedLabelsFollowABinomialBand) {
  const auto corpus = pt::synthetic_corpus(200);
  const double n = 200.0;
  // 99% two-sided binomial band around 1/2 for one seed.
  const double band = 2.5758 * std::sqrt(0.25 / n);
  double mean = 0.0;
  int outside = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto inst = make_instances(corpus, Setup::paired, seed);
    double pos = 0.0;
    for (const auto& i : inst) {
      pos += i.label;
      EXPECT_EQ(i.label == 1, i.first == corpus.pair(i.pair_id).funny);
    }
    const double frac = pos / n;
    mean += frac / 1000.0;
    outside += std::abs(frac - 0.5) > band;
  }
  // The mean over seeds is far tighter than a single draw.
  EXPECT_NEAR(mean, 0.5, 3.0 * band / std::sqrt(1000.0) + 1e-9);
  // About 1% of seeds may fall outside the band; allow generous slack.
  EXPECT_LE(outside, 30);
}

TEST(Filter, HqTypeAndJaccardCompose) {
  const auto corpus = pt::synthetic_corpus(400);
  PairFilter none;
  EXPECT_EQ(filter(corpus, none).size(), corpus.size());
  PairFilter zero;
  zero.min_jaccard = 0.0;
  EXPECT_EQ(filter(corpus, zero).size(), corpus.size());
  PairFilter hq;
  hq.hq_only = true;
  const auto hq_set = filter(corpus, hq);
  EXPECT_EQ(hq_set.size(), corpus.hq_ids().size());
  for (const auto& p : hq_set.pairs()) EXPECT_EQ(p.split, Split::test);

  std::size_t typed = 0;
  for (const auto t : kHumorTypes) {
    PairFilter f;
    f.humor_type = t;
    typed += filter(corpus, f).size();
  }
  std::size_t annotated = 0;
  for (const auto& p : corpus.pairs()) annotated += p.humor_type.has_value();
  EXPECT_EQ(typed, annotated);

  PairFilter both;
  both.hq_only = true;
  both.min_jaccard = 0.3;
  const auto inter = filter(corpus, both);
  PairFilter j;
  j.min_jaccard = 0.3;
  const auto jset = filter(corpus, j);
  for (const auto& p : inter.pairs()) {
    EXPECT_TRUE(hq_set.is_hq(p.pair_id));
    EXPECT_NO_THROW(jset.pair(p.pair_id));
  }
  PairFilter impossible;
  impossible.min_jaccard = 1.0;
  EXPECT_TRUE(filter(corpus, impossible).empty());
}

TEST(Load, CountsSplitsAndHq) {
  const auto dir = pt::scratch_dir("corpus-load");
  const auto pairs = pt::synthetic_pairs(200);
  pt::write_tsv(dir / "pairs.tsv", pairs);
  const auto corpus = load_corpus(dir / "pairs.tsv");
  EXPECT_EQ(corpus.count(Split::train), 140u);
  EXPECT_EQ(corpus.count(Split::val), 30u);
  EXPECT_EQ(corpus.count(Split::test), 30u);
  std::size_t hq = 0;
  for (const auto& p : pairs) hq += p.split == Split::test && p.quality == 3;
  EXPECT_EQ(corpus.hq_ids().size(), hq);
}

TEST(Load, Errors) {
  const auto dir = pt::scratch_dir("corpus-errors");
  EXPECT_THROW(load_corpus(dir / "missing.tsv"), CorpusError);
  { std::ofstream(dir / "empty.tsv"); }
  try {
    load_corpus(dir / "empty.tsv");
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("no pairs"), std::string::npos);
  }
  {
    std::ofstream out(dir / "dup.tsv");
    out << "pair_id\tfunny\tserious\tsplit\n"
        << "a\tman bites dog\tdog bites man\ttrain\n"
        << "a\tcat naps\tcat works\ttest\n";
  }
  try {
    load_corpus(dir / "dup.tsv");
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
  }
  {
    std::ofstream out(dir / "bad.tsv");
    out << "pair_id\tfunny\tserious\tsplit\n"
        << "a\tman bites dog\tdog bites man\tholdout\n";
  }
  EXPECT_THROW(load_corpus(dir / "bad.tsv"), CorpusError);
  {
    std::ofstream out(dir / "same.tsv");
    out << "pair_id\tfunny\tserious\tsplit\n"
        << "a\tSame Thing\tsame thing\ttrain\n"
        << "b\tcat naps\tcat works\ttrain\n";
  }
  std::vector<RowDiagnostic> rejected;
  const auto c = load_corpus(dir / "same.tsv", {}, &rejected);
  EXPECT_EQ(c.size(), 1u);
  ASSERT_EQ(rejected.size(), 1u);
  EXPECT_EQ(rejected[0].row, 2u);
}

TEST(Prepared, RoundTripAndStableBytes) {
  const auto dir = pt::scratch_dir("corpus-prepared");
  const auto corpus = pt::synthetic_corpus(150);
  write_prepared_corpus(corpus, dir / "a.jsonl", 4);
  write_prepared_corpus(corpus, dir / "b.jsonl", 4);
  EXPECT_EQ(sha256_file(dir / "a.jsonl"), sha256_file(dir / "b.jsonl"));
  const auto back = read_prepared_corpus(dir / "a.jsonl");
  ASSERT_EQ(back.size(), corpus.size());
  EXPECT_EQ(back.hq_ids(), corpus.hq_ids());
  for (const auto& p : corpus.pairs()) {
    EXPECT_EQ(back.pair(p.pair_id).funny, p.funny);
    EXPECT_EQ(back.alignment(p.pair_id).funny_span, corpus.alignment(p.pair_id).funny_span);
    EXPECT_EQ(back.pair(p.pair_id).humor_type, p.humor_type);
  }
}

TEST(HumorTypes, ParseForms) {
  EXPECT_EQ(parse_humor_type("non-obscene/obscene"), HumorType::nonobscene_obscene);
  EXPECT_EQ(parse_humor_type("good_bad_intentions"), HumorType::good_bad_intentions);
  EXPECT_EQ(parse_humor_type("1"), HumorType::normal_abnormal);
  EXPECT_FALSE(parse_humor_type("sarcasm"));
  EXPECT_EQ(kHumorTypes.size(), 7u);
}
