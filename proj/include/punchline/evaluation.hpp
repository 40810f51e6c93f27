#pragma once

// Accuracy, bootstrap intervals, t-tests and the stratified accuracy
// reports (per humor type, per Jaccard threshold).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "punchline/classifier.hpp"
#include "punchline/corpus.hpp"
#include "punchline/language_model.hpp"

namespace punchline {

struct Prediction {
  int predicted = 0;
  int gold = 0;
};

// Fraction of predictions equal to the gold label; throws on empty input.
double accuracy(std::span<const Prediction> predictions);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Percentile interval of resampled means (with replacement, mt19937_64
// seeded by `seed`). The interval is widened to contain the sample mean.
Interval bootstrap_ci(std::span<const double> per_item, int resamples = 1000, double level = 0.99,
                      std::uint64_t seed = 0);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  bool defined = true;   // false when the statistic's variance is zero
  bool significant = false;
  double mean_difference = 0.0;
  std::size_t n = 0;
};

// Two-sided paired t-test on item-aligned lists of equal length >= 2.
// A zero-variance difference vector is reported undefined and not
// significant.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, double alpha = 0.01);
// Two-sided Welch t-test for unpaired samples (each of size >= 2).
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b, double alpha = 0.01);

// ---------------------------------------------------------------------------

// One scored test item. In the single setup each pair yields two items
// ("<pair_id>/funny", "<pair_id>/serious"); in the paired setup one item
// per pair keyed by the pair id.
struct ItemOutcome {
  std::string item_id;
  std::string pair_id;
  double score = 0.0;  // model probability or log-probability
  int predicted = 0;
  int gold = 0;
  bool tie = false;

  double correct() const { return predicted == gold ? 1.0 : 0.0; }
};

struct MetricsReport {
  std::string name;
  std::string stratum;
  double point_estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
  // Set when the stratum was empty; the numbers are then meaningless.
  bool omitted = false;
};

MetricsReport make_report(const std::string& name, const std::string& stratum,
                          std::span<const ItemOutcome> items, std::uint64_t seed,
                          int resamples = 1000, double level = 0.99);

std::vector<double> correctness(std::span<const ItemOutcome> items);

// Items whose pair belongs to `subset`, in input order.
std::vector<ItemOutcome> select_items(std::span<const ItemOutcome> items, const Corpus& subset);

// Runs a classifier over every pair of `corpus`. In the paired setup the
// presentation order comes from funny_first(pair_id, order_seed).
std::vector<ItemOutcome> evaluate_classifier(HumorClassifier& classifier, const Corpus& corpus,
                                             std::uint64_t order_seed);

// Single-sentence likelihood rule with a fitted threshold.
std::vector<ItemOutcome> evaluate_lm_single(const CausalLM& lm, double threshold, const Corpus& corpus);
// Pairwise likelihood comparison; order as in evaluate_classifier.
std::vector<ItemOutcome> evaluate_lm_pair(const CausalLM& lm, const Corpus& corpus, std::uint64_t order_seed);
// Scores both sentences of every pair, for threshold fitting.
std::vector<ScoredSentence> score_sentences(const CausalLM& lm, const Corpus& corpus);

// One report per humor type, over the annotated pairs of `corpus`.
// Types without pairs are returned with omitted = true.
std::vector<MetricsReport> accuracy_by_type(std::span<const ItemOutcome> items, const Corpus& corpus,
                                            const std::string& name, std::uint64_t seed);

struct JaccardPoint {
  double threshold = 0.0;
  MetricsReport report;
  // Welch test of items above the threshold against the items at or below
  // it; undefined when either side has fewer than two items.
  TTestResult versus_rest;
};

// Accuracy over pairs with Jaccard distance strictly above each threshold.
// Thresholds must be ascending; empty subsets come back omitted.
std::vector<JaccardPoint> accuracy_vs_jaccard(std::span<const ItemOutcome> items, const Corpus& corpus,
                                              std::span<const double> thresholds, const std::string& name,
                                              std::uint64_t seed);

// 0, 0.1, ..., 0.7
std::vector<double> default_jaccard_thresholds();

// Aligns two outcome lists on item_id and returns the per-item correctness
// of each, in the order of `a`. Throws when the item sets differ.
std::pair<std::vector<double>, std::vector<double>> align_items(std::span<const ItemOutcome> a,
                                                                std::span<const ItemOutcome> b);

}  // namespace punchline
