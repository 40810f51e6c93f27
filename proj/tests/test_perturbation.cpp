#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "punchline/perturbation.hpp"
#include "support.hpp"

using namespace punchline;
namespace pt = punchline::testing;

namespace {

HumorClassifier bow(const WordVectors& vectors, Setup setup = Setup::single) {
  ModelVariant v;
  v.encoder_kind = EncoderKind::bag_of_vectors;
  v.setup = setup;
  v.frozen = true;
  return HumorClassifier(v, std::make_unique<BagOfVectorsEncoder>(vectors));
}

// Probability with word `skip` left out of the average, computed straight
// from the vector table.
double masked_oracle(const WordVectors& vectors, const nn::Matrix& w, float b, const std::vector<std::string>& words,
                     std::size_t skip) {
  std::vector<double> mean(static_cast<std::size_t>(vectors.dim()), 0.0);
  int known = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto id = vectors.find(words[i]);
    if (i == skip || !id) continue;
    for (int d = 0; d < vectors.dim(); ++d) mean[static_cast<std::size_t>(d)] += vectors.table()(*id, d);
    ++known;
  }
  double z = b;
  for (int d = 0; d < vectors.dim(); ++d) z += w(0, d) * (known ? mean[static_cast<std::size_t>(d)] / known : 0.0);
  return 1.0 / (1.0 + std::exp(-z));
}

}  // namespace

TEST(MaskSweep, OneClassificationPerWordAndMatchesOracle) {
  const auto vectors = pt::synthetic_vectors(6);
  auto clf = bow(vectors);
  std::mt19937_64 rng(3);
  std::normal_distribution<float> normal(0.0f, 2.0f);
  nn::Matrix w(1, 6);
  for (int d = 0; d < 6; ++d) w(0, d) = normal(rng);
  clf.set_head(w, 0.05f);
  const auto corpus = pt::synthetic_corpus(40);
  std::size_t sentences = 0;
  for (const auto& p : corpus.pairs()) {
    const auto& a = corpus.alignment(p.pair_id);
    for (const bool funny : {true, false}) {
      const auto& text = funny ? p.funny : p.serious;
      const auto r = mask_sweep(clf, p.pair_id, text, funny ? a.funny_span : a.serious_span, funny);
      const auto words = word_strings(text);
      ASSERT_EQ(r.classifications, words.size());
      EXPECT_TRUE(r.restored);
      EXPECT_NEAR(r.original_probability, masked_oracle(vectors, w, 0.05f, words, words.size()), 1e-6);
      for (std::size_t i = 0; i < words.size(); ++i) {
        const double expected = masked_oracle(vectors, w, 0.05f, words, i);
        EXPECT_NEAR(r.masked_probability[i], expected, 1e-6);
        EXPECT_EQ(r.flipped[i], (expected > 0.5) != (r.original_probability > 0.5));
        EXPECT_EQ(r.in_gold[i], (funny ? a.funny_span : a.serious_span).contains(i));
      }
      ++sentences;
    }
  }
  EXPECT_GE(sentences, 20u);
}

TEST(MaskSweep, ConstantHeadNeverFlips) {
  const auto corpus = pt::synthetic_corpus(30);
  auto clf = bow(pt::synthetic_vectors(6));
  clf.set_head(nn::Matrix::Zero(1, 6), 0.8f);
  const auto results = sweep_corpus(clf, corpus);
  ASSERT_EQ(results.size(), 2 * corpus.size());
  for (const auto& r : results) {
    for (const bool f : r.flipped) EXPECT_FALSE(f);
    EXPECT_TRUE(r.restored);
  }
  const auto t = flip_rate_table(results);
  EXPECT_EQ(t.modified[0].flips + t.other[0].flips + t.modified[1].flips + t.other[1].flips, 0u);
}

TEST(MaskSweep, TransformerMaskingLeavesTheModelUntouched) {
  const auto dir = pt::scratch_dir("sweep-transformer");
  pt::make_tiny_mlm(dir / "mlm");
  ModelVariant v;
  v.encoder_kind = EncoderKind::pretrained_mlm;
  v.setup = Setup::single;
  HumorClassifier clf(v, TransformerEncoder::load(dir / "mlm", EncoderKind::pretrained_mlm));
  clf.randomize_head(5);
  const auto before = nn::checksum(clf.trainable_parameters());
  const auto r = mask_sweep(clf, "s", "scientists unveil disposable nap", {2, 3}, true);
  EXPECT_EQ(r.classifications, 4u);
  EXPECT_TRUE(r.restored);
  EXPECT_EQ(nn::checksum(clf.trainable_parameters()), before);
}

TEST(MaskSweep, RejectsPairedModelsAndBadSpans) {
  auto paired = bow(pt::synthetic_vectors(4), Setup::paired);
  paired.randomize_head(1);
  EXPECT_THROW(mask_sweep(paired, "x", "pope hugs puppy", {0, 1}, true), std::invalid_argument);
  auto single = bow(pt::synthetic_vectors(4));
  single.randomize_head(1);
  EXPECT_THROW(mask_sweep(single, "x", "pope hugs puppy", {2, 5}, true), std::invalid_argument);
}

TEST(FlipTable, MatchesBruteForce) {
  std::mt19937_64 rng(10);
  std::vector<MaskSweepResult> results;
  for (int s = 0; s < 60; ++s) {
    MaskSweepResult r;
    r.sentence_id = std::to_string(s);
    r.funny = s % 2 == 0;
    const std::size_t n = 2 + rng() % 6;
    const std::size_t g0 = rng() % n, g1 = g0 + (s % 7 == 0 ? 0 : 1 + rng() % (n - g0));
    for (std::size_t i = 0; i < n; ++i) {
      r.words.push_back("w");
      r.in_gold.push_back(i >= g0 && i < g1);
      r.flipped.push_back(rng() % (r.in_gold.back() ? 3 : 5) == 0);
    }
    results.push_back(r);
  }
  const auto t = flip_rate_table(results);
  for (int row = 0; row < 2; ++row) {
    std::size_t mf = 0, mn = 0, of = 0, on = 0, sentences = 0;
    std::vector<double> mr, orate;
    for (const auto& r : results) {
      if (r.funny != (row == 0)) continue;
      ++sentences;
      std::size_t a = 0, an = 0, b = 0, bn = 0;
      for (std::size_t i = 0; i < r.words.size(); ++i) {
        (r.in_gold[i] ? an : bn) += 1;
        (r.in_gold[i] ? a : b) += r.flipped[i];
      }
      mf += a;
      mn += an;
      of += b;
      on += bn;
      if (an && bn) {
        mr.push_back(static_cast<double>(a) / an);
        orate.push_back(static_cast<double>(b) / bn);
      }
    }
    EXPECT_EQ(t.sentences[row], sentences);
    EXPECT_EQ(t.modified[row].flips, mf);
    EXPECT_EQ(t.modified[row].maskings, mn);
    EXPECT_EQ(t.other[row].flips, of);
    EXPECT_EQ(t.other[row].maskings, on);
    EXPECT_NEAR(t.modified[row].rate(), static_cast<double>(mf) / mn, 1e-12);
    EXPECT_EQ(t.paired_sentences[row], mr.size());
    const auto expected = paired_t_test(mr, orate);
    EXPECT_NEAR(t.test[row].t, expected.t, 1e-12);
    EXPECT_NEAR(t.test[row].p_value, expected.p_value, 1e-12);
  }
}

TEST(FlipTable, SweepFileHasOneLinePerSentence) {
  const auto corpus = pt::synthetic_corpus(12);
  auto clf = bow(pt::synthetic_vectors(4));
  clf.randomize_head(2);
  const auto results = sweep_corpus(clf, corpus);
  const auto dir = pt::scratch_dir("sweep-jsonl");
  write_sweep_jsonl(dir / "sweep.jsonl", results);
  std::ifstream in(dir / "sweep.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) lines += !line.empty();
  EXPECT_EQ(lines, results.size());
}
