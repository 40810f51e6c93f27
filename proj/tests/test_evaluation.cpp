#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "punchline/evaluation.hpp"
#include "support.hpp"

using namespace punchline;
namespace pt = punchline::testing;

namespace {

// Two-sided p-value of Student's t by Simpson integration of the density.
double student_p_simpson(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  const auto pdf = [&](double x) { return c * std::pow(1.0 + x * x / df, -(df + 1) / 2); };
  const double a = std::abs(t);
  const int n = 20000;
  const double h = a / n;
  double s = pdf(0) + pdf(a);
  for (int i = 1; i < n; ++i) s += pdf(i * h) * (i % 2 ? 4 : 2);
  const double half = s * h / 3.0;  // P(0 < T < |t|)
  return std::max(0.0, 1.0 - 2.0 * half);
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

std::vector<ItemOutcome> random_outcomes(const Corpus& corpus, std::uint64_t seed, double p_correct) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution ok(p_correct);
  std::vector<ItemOutcome> out;
  for (const auto& p : corpus.pairs()) {
    for (const int gold : {1, 0}) {
      ItemOutcome o;
      o.pair_id = p.pair_id;
      o.item_id = p.pair_id + (gold ? "/funny" : "/serious");
      o.gold = gold;
      o.predicted = ok(rng) ? gold : 1 - gold;
      out.push_back(o);
    }
  }
  return out;
}

}  // namespace

TEST(Accuracy, CountsMatches) {
  const std::vector<Prediction> p = {{1, 1}, {0, 1}, {0, 0}, {1, 0}, {1, 1}};
  EXPECT_DOUBLE_EQ(accuracy(p), 0.6);
  EXPECT_THROW(accuracy(std::vector<Prediction>{}), std::invalid_argument);
}

TEST(Bootstrap, WidthNearTheNormalApproximation) {
  std::mt19937_64 rng(8);
  for (const double p : {0.3, 0.5, 0.7}) {
    for (const int n : {200, 600}) {
      std::bernoulli_distribution b(p);
      std::vector<double> x(static_cast<std::size_t>(n));
      for (auto& v : x) v = b(rng) ? 1.0 : 0.0;
      const double m = mean(x);
      const double analytic = 2 * 2.5758293 * std::sqrt(m * (1 - m) / n);
      const auto ci = bootstrap_ci(x, 1000, 0.99, 4);
      EXPECT_NEAR((ci.high - ci.low) / analytic, 1.0, 0.25) << p << " " << n;
      EXPECT_LE(ci.low, m);
      EXPECT_GE(ci.high, m);
    }
  }
  const std::vector<double> same(50, 1.0);
  const auto ci = bootstrap_ci(same);
  EXPECT_DOUBLE_EQ(ci.low, 1.0);
  EXPECT_DOUBLE_EQ(ci.high, 1.0);
}

TEST(Bootstrap, DeterministicPerSeed) {
  const std::vector<double> x = {1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0};
  const auto a = bootstrap_ci(x, 500, 0.95, 3), b = bootstrap_ci(x, 500, 0.95, 3);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
}

TEST(TTest, PairedMatchesDirectComputation) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial) * 3;
    std::vector<double> a(n), b(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = normal(rng);
      b[i] = a[i] + 0.3 * normal(rng) + 0.1 * (trial % 3);
      d[i] = a[i] - b[i];
    }
    const double t = mean(d) / std::sqrt(sample_var(d) / static_cast<double>(n));
    const auto r = paired_t_test(a, b);
    EXPECT_NEAR(r.t, t, 1e-9);
    EXPECT_DOUBLE_EQ(r.df, static_cast<double>(n - 1));
    EXPECT_NEAR(r.p_value, student_p_simpson(t, static_cast<double>(n - 1)), 1e-6);
    EXPECT_EQ(r.significant, r.p_value < 0.01);
    EXPECT_NEAR(r.mean_difference, mean(d), 1e-12);
  }
}

TEST(TTest, WelchMatchesDirectComputation) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(4 + trial % 7), b(9 + trial % 4);
    for (auto& v : a) v = normal(rng) * 2.0;
    for (auto& v : b) v = normal(rng) + 0.5;
    const double va = sample_var(a) / a.size(), vb = sample_var(b) / b.size();
    const double t = (mean(a) - mean(b)) / std::sqrt(va + vb);
    const double df = (va + vb) * (va + vb) /
                      (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    const auto r = welch_t_test(a, b);
    EXPECT_NEAR(r.t, t, 1e-9);
    EXPECT_NEAR(r.df, df, 1e-9);
    EXPECT_NEAR(r.p_value, student_p_simpson(t, df), 1e-6);
  }
}

TEST(TTest, DegenerateInputs) {
  const std::vector<double> a = {1, 2, 3}, b = {0, 1, 2};
  const auto r = paired_t_test(a, b);
  EXPECT_FALSE(r.defined);
  EXPECT_FALSE(r.significant);
  EXPECT_THROW(paired_t_test(std::vector<double>{1.0}, std::vector<double>{2.0}), std::invalid_argument);
  EXPECT_THROW(paired_t_test(a, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST(TTest, NullFalsePositiveRate) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  int hits = 0;
  for (int sim = 0; sim < 1000; ++sim) {
    std::vector<double> a(30), b(30);
    for (std::size_t i = 0; i < 30; ++i) {
      a[i] = normal(rng);
      b[i] = normal(rng);
    }
    hits += paired_t_test(a, b).significant;
  }
  EXPECT_NEAR(hits / 1000.0, 0.01, 0.01);
}

TEST(Reports, MakeReportAndEmptyStratum) {
  std::vector<ItemOutcome> items;
  for (int i = 0; i < 10; ++i) items.push_back({"i" + std::to_string(i), "p", 0.0, i < 7 ? 1 : 0, 1, false});
  const auto r = make_report("m", "full", items, 1);
  EXPECT_DOUBLE_EQ(r.point_estimate, 0.7);
  EXPECT_EQ(r.n, 10u);
  EXPECT_FALSE(r.omitted);
  const auto empty = make_report("m", "none", std::vector<ItemOutcome>{}, 1);
  EXPECT_TRUE(empty.omitted);
  EXPECT_EQ(empty.n, 0u);
}

TEST(Reports, ByTypeMatchesBruteForce) {
  const auto corpus = pt::synthetic_corpus(600);
  const auto items = random_outcomes(corpus, 3, 0.65);
  const auto reports = accuracy_by_type(items, corpus, "m", 5);
  ASSERT_EQ(reports.size(), kHumorTypes.size());
  for (std::size_t k = 0; k < kHumorTypes.size(); ++k) {
    double correct = 0, n = 0;
    for (const auto& it : items) {
      if (corpus.pair(it.pair_id).humor_type == kHumorTypes[k]) {
        correct += it.predicted == it.gold;
        n += 1;
      }
    }
    if (n == 0) {
      EXPECT_TRUE(reports[k].omitted);
      continue;
    }
    EXPECT_EQ(reports[k].n, static_cast<std::size_t>(n));
    EXPECT_NEAR(reports[k].point_estimate, correct / n, 1e-12);
    EXPECT_EQ(reports[k].stratum, std::string(to_string(kHumorTypes[k])));
  }
}

TEST(Reports, JaccardCurveMatchesBruteForce) {
  const auto corpus = pt::synthetic_corpus(400);
  const auto items = random_outcomes(corpus, 4, 0.6);
  const auto thresholds = default_jaccard_thresholds();
  ASSERT_EQ(thresholds.size(), 8u);
  EXPECT_DOUBLE_EQ(thresholds.front(), 0.0);
  EXPECT_NEAR(thresholds.back(), 0.7, 1e-12);
  const auto points = accuracy_vs_jaccard(items, corpus, thresholds, "m", 2);
  ASSERT_EQ(points.size(), thresholds.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    std::vector<double> above, rest;
    for (const auto& it : items) {
      const double d = jaccard_distance(corpus.pair(it.pair_id));
      (d > thresholds[k] ? above : rest).push_back(it.predicted == it.gold ? 1.0 : 0.0);
    }
    if (above.empty()) {
      EXPECT_TRUE(points[k].report.omitted);
      continue;
    }
    EXPECT_EQ(points[k].report.n, above.size());
    EXPECT_NEAR(points[k].report.point_estimate, mean(above), 1e-12);
    if (above.size() >= 2 && rest.size() >= 2 && (sample_var(above) > 0 || sample_var(rest) > 0)) {
      EXPECT_NEAR(points[k].versus_rest.t, welch_t_test(above, rest).t, 1e-9);
    } else {
      EXPECT_FALSE(points[k].versus_rest.defined);
    }
  }
  const std::vector<double> descending = {0.5, 0.1};
  EXPECT_THROW(accuracy_vs_jaccard(items, corpus, descending, "m", 2), std::invalid_argument);
}

TEST(Reports, AlignItemsRequiresTheSameItems) {
  const std::vector<ItemOutcome> a = {{"x", "p", 0, 1, 1, false}, {"y", "p", 0, 0, 1, false}};
  const std::vector<ItemOutcome> b = {{"y", "p", 0, 1, 1, false}, {"x", "p", 0, 1, 1, false}};
  const auto [ca, cb] = align_items(a, b);
  EXPECT_EQ(ca, (std::vector<double>{1, 0}));
  EXPECT_EQ(cb, (std::vector<double>{1, 1}));
  const std::vector<ItemOutcome> c = {{"x", "p", 0, 1, 1, false}};
  EXPECT_THROW(align_items(a, c), std::invalid_argument);
}

TEST(Evaluate, ClassifierItemsFollowTheSetup) {
  const auto corpus = pt::synthetic_corpus(60);
  ModelVariant v;
  v.encoder_kind = EncoderKind::bag_of_vectors;
  v.frozen = true;
  v.setup = Setup::single;
  HumorClassifier single(v, std::make_unique<BagOfVectorsEncoder>(pt::synthetic_vectors(8)));
  single.randomize_head(2);
  const auto items = evaluate_classifier(single, corpus, 7);
  ASSERT_EQ(items.size(), 2 * corpus.size());
  for (const auto& it : items) {
    const auto& p = corpus.pair(it.pair_id);
    const bool funny = it.item_id == it.pair_id + "/funny";
    EXPECT_EQ(it.gold, funny ? 1 : 0);
    const double prob = single.predict_single(funny ? p.funny : p.serious);
    EXPECT_NEAR(it.score, prob, 1e-9);
    EXPECT_EQ(it.predicted, prob > 0.5 ? 1 : 0);
  }

  v.setup = Setup::paired;
  HumorClassifier paired(v, std::make_unique<BagOfVectorsEncoder>(pt::synthetic_vectors(8)));
  paired.randomize_head(2);
  const auto pitems = evaluate_classifier(paired, corpus, 7);
  ASSERT_EQ(pitems.size(), corpus.size());
  for (const auto& it : pitems) {
    const auto& p = corpus.pair(it.pair_id);
    const bool ff = funny_first(p.pair_id, 7);
    EXPECT_EQ(it.gold, ff ? 1 : 0);
    const double prob = ff ? paired.predict_pair(p.funny, p.serious) : paired.predict_pair(p.serious, p.funny);
    EXPECT_NEAR(it.score, prob, 1e-9);
  }
}

TEST(Evaluate, LikelihoodRulesAgreeWithDirectScores) {
  const auto corpus = pt::synthetic_corpus(80);
  std::vector<std::string> train;
  for (const auto& p : corpus.pairs()) train.push_back(p.serious);
  const auto lm = NgramLM::train(train, 2);
  const auto pitems = evaluate_lm_pair(lm, corpus, 3);
  ASSERT_EQ(pitems.size(), corpus.size());
  for (const auto& it : pitems) {
    const auto& p = corpus.pair(it.pair_id);
    const double f = lm.sentence_logprob(p.funny), s = lm.sentence_logprob(p.serious);
    const bool ff = funny_first(p.pair_id, 3);
    const double first = ff ? f : s, second = ff ? s : f;
    EXPECT_EQ(it.gold, ff ? 1 : 0);
    EXPECT_EQ(it.predicted, first <= second ? 1 : 0);
    EXPECT_EQ(it.tie, first == second);
  }
  const auto sitems = evaluate_lm_single(lm, -12.0, corpus);
  ASSERT_EQ(sitems.size(), 2 * corpus.size());
  for (const auto& it : sitems) {
    const auto& p = corpus.pair(it.pair_id);
    const double lp = lm.sentence_logprob(it.gold ? p.funny : p.serious);
    EXPECT_EQ(it.predicted, lp < -12.0 ? 1 : 0);
  }
  const auto scored = score_sentences(lm, corpus);
  EXPECT_EQ(scored.size(), 2 * corpus.size());
}

TEST(Evaluate, SelectItemsKeepsOrder) {
  const auto corpus = pt::synthetic_corpus(100);
  const auto items = random_outcomes(corpus, 1, 0.5);
  PairFilter hq;
  hq.hq_only = true;
  const auto sub = filter(corpus, hq);
  const auto sel = select_items(items, sub);
  EXPECT_EQ(sel.size(), 2 * sub.size());
  std::size_t last = 0;
  for (const auto& it : sel) {
    const auto pos = static_cast<std::size_t>(
        std::find_if(items.begin(), items.end(), [&](const ItemOutcome& o) { return o.item_id == it.item_id; }) -
        items.begin());
    EXPECT_GE(pos, last);
    last = pos;
  }
}
