#include "punchline/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

namespace punchline {

double accuracy(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw std::invalid_argument("accuracy of an empty prediction list");
  std::size_t correct = 0;
  for (const auto& p : predictions) correct += p.predicted == p.gold;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

Interval bootstrap_ci(std::span<const double> per_item, int resamples, double level, std::uint64_t seed) {
  if (per_item.empty()) throw std::invalid_argument("bootstrap of an empty list");
  if (resamples < 1) throw std::invalid_argument("bootstrap needs at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
  const std::size_t n = per_item.size();
  double mean = 0.0;
  for (const double v : per_item) mean += v;
  mean /= static_cast<double>(n);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += per_item[pick(rng)];
    m = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  // Percentiles with linear interpolation between order statistics.
  const double alpha = (1.0 - level) / 2.0;
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(resamples - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, means.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return means[lo] * (1.0 - frac) + means[hi] * frac;
  };
  Interval ci{at(alpha), at(1.0 - alpha)};
  ci.low = std::min(ci.low, mean);
  ci.high = std::max(ci.high, mean);
  return ci;
}

namespace {

TTestResult finish(double mean_diff, double se, double df, std::size_t n, double alpha) {
  TTestResult r;
  r.mean_difference = mean_diff;
  r.n = n;
  r.df = df;
  if (!(se > 0.0) || !std::isfinite(se) || !(df > 0.0)) {
    r.defined = false;
    r.p_value = std::numeric_limits<double>::quiet_NaN();
    r.significant = false;
    return r;
  }
  r.t = mean_diff / se;
  const boost::math::students_t dist(df);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  r.significant = r.p_value < alpha;
  return r;
}

}  // namespace

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.size() != b.size()) throw std::invalid_argument("paired t-test: lists differ in length");
  if (a.size() < 2) throw std::invalid_argument("paired t-test: at least two items are required");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(n - 1);
  return finish(mean, std::sqrt(var / static_cast<double>(n)), static_cast<double>(n - 1), n, alpha);
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.size() < 2 || b.size() < 2) {
    TTestResult r;
    r.defined = false;
    r.p_value = std::numeric_limits<double>::quiet_NaN();
    r.n = a.size() + b.size();
    return r;
  }
  const auto moments = [](std::span<const double> x) {
    double m = 0.0;
    for (const double v : x) m += v;
    m /= static_cast<double>(x.size());
    double ss = 0.0;
    for (const double v : x) ss += (v - m) * (v - m);
    return std::pair{m, ss / static_cast<double>(x.size() - 1)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double sa = va / na, sb = vb / nb;
  const double se = std::sqrt(sa + sb);
  const double df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1) + sb * sb / (nb - 1));
  return finish(ma - mb, se, df, a.size() + b.size(), alpha);
}

// ---------------------------------------------------------------------------

std::vector<double> correctness(std::span<const ItemOutcome> items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& i : items) out.push_back(i.correct());
  return out;
}

MetricsReport make_report(const std::string& name, const std::string& stratum, std::span<const ItemOutcome> items,
                          std::uint64_t seed, int resamples, double level) {
  MetricsReport r;
  r.name = name;
  r.stratum = stratum;
  r.n = items.size();
  if (items.empty()) {
    r.omitted = true;
    return r;
  }
  const auto c = correctness(items);
  double sum = 0.0;
  for (const double v : c) sum += v;
  r.point_estimate = sum / static_cast<double>(c.size());
  const auto ci = bootstrap_ci(c, resamples, level, seed);
  r.ci_low = ci.low;
  r.ci_high = ci.high;
  return r;
}

std::vector<ItemOutcome> select_items(std::span<const ItemOutcome> items, const Corpus& subset) {
  std::set<std::string> ids;
  for (const auto& pair : subset.pairs()) ids.insert(pair.pair_id);
  std::vector<ItemOutcome> out;
  for (const auto& i : items) {
    if (ids.contains(i.pair_id)) out.push_back(i);
  }
  return out;
}

std::vector<ItemOutcome> evaluate_classifier(HumorClassifier& clf, const Corpus& corpus, std::uint64_t order_seed) {
  std::vector<ItemOutcome> out;
  for (const auto& pair : corpus.pairs()) {
    if (clf.variant().setup == Setup::single) {
      for (const int funny : {1, 0}) {
        ItemOutcome o;
        o.pair_id = pair.pair_id;
        o.item_id = pair.pair_id + (funny ? "/funny" : "/serious");
        o.score = clf.predict_single(funny ? pair.funny : pair.serious);
        o.predicted = o.score > 0.5 ? 1 : 0;
        o.gold = funny;
        out.push_back(std::move(o));
      }
    } else {
      const bool ff = funny_first(pair.pair_id, order_seed);
      ItemOutcome o;
      o.pair_id = o.item_id = pair.pair_id;
      o.score = ff ? clf.predict_pair(pair.funny, pair.serious) : clf.predict_pair(pair.serious, pair.funny);
      o.predicted = o.score > 0.5 ? 1 : 0;
      o.gold = ff ? 1 : 0;
      out.push_back(std::move(o));
    }
  }
  return out;
}

std::vector<ScoredSentence> score_sentences(const CausalLM& lm, const Corpus& corpus) {
  std::vector<ScoredSentence> out;
  out.reserve(corpus.size() * 2);
  for (const auto& pair : corpus.pairs()) {
    out.push_back({lm.sentence_logprob(pair.funny), 1});
    out.push_back({lm.sentence_logprob(pair.serious), 0});
  }
  return out;
}

std::vector<ItemOutcome> evaluate_lm_single(const CausalLM& lm, double threshold, const Corpus& corpus) {
  std::vector<ItemOutcome> out;
  for (const auto& pair : corpus.pairs()) {
    for (const int funny : {1, 0}) {
      ItemOutcome o;
      o.pair_id = pair.pair_id;
      o.item_id = pair.pair_id + (funny ? "/funny" : "/serious");
      o.score = lm.sentence_logprob(funny ? pair.funny : pair.serious);
      o.predicted = o.score < threshold ? 1 : 0;
      o.gold = funny;
      out.push_back(std::move(o));
    }
  }
  return out;
}

std::vector<ItemOutcome> evaluate_lm_pair(const CausalLM& lm, const Corpus& corpus, std::uint64_t order_seed) {
  std::vector<ItemOutcome> out;
  for (const auto& pair : corpus.pairs()) {
    const bool ff = funny_first(pair.pair_id, order_seed);
    const auto p = ff ? lm_pair_predict(lm, pair.funny, pair.serious) : lm_pair_predict(lm, pair.serious, pair.funny);
    ItemOutcome o;
    o.pair_id = o.item_id = pair.pair_id;
    o.score = p.first_logprob - p.second_logprob;
    o.predicted = p.funny_index == 0 ? 1 : 0;
    o.gold = ff ? 1 : 0;
    o.tie = p.tie;
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<MetricsReport> accuracy_by_type(std::span<const ItemOutcome> items, const Corpus& corpus,
                                            const std::string& name, std::uint64_t seed) {
  std::vector<MetricsReport> out;
  for (const auto type : kHumorTypes) {
    PairFilter f;
    f.humor_type = type;
    const auto subset = filter(corpus, f);
    const auto selected = select_items(items, subset);
    out.push_back(make_report(name, std::string(to_string(type)), selected, seed));
  }
  return out;
}

std::vector<double> default_jaccard_thresholds() {
  std::vector<double> out;
  for (int i = 0; i <= 7; ++i) out.push_back(i / 10.0);
  return out;
}

std::vector<JaccardPoint> accuracy_vs_jaccard(std::span<const ItemOutcome> items, const Corpus& corpus,
                                              std::span<const double> thresholds, const std::string& name,
                                              std::uint64_t seed) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw std::invalid_argument("Jaccard thresholds must be ascending");
  }
  std::map<std::string, double> distance;
  for (const auto& pair : corpus.pairs()) distance[pair.pair_id] = jaccard_distance(pair);

  std::vector<JaccardPoint> out;
  for (const double x : thresholds) {
    std::vector<ItemOutcome> above;
    std::vector<double> in, rest;
    for (const auto& item : items) {
      const auto it = distance.find(item.pair_id);
      if (it == distance.end()) continue;
      if (it->second > x) {
        above.push_back(item);
        in.push_back(item.correct());
      } else {
        rest.push_back(item.correct());
      }
    }
    std::ostringstream stratum;
    stratum << "jaccard>" << x;
    JaccardPoint p;
    p.threshold = x;
    p.report = make_report(name, stratum.str(), above, seed);
    p.versus_rest = welch_t_test(in, rest);
    out.push_back(std::move(p));
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> align_items(std::span<const ItemOutcome> a,
                                                                std::span<const ItemOutcome> b) {
  std::map<std::string, double> by_id;
  for (const auto& i : b) by_id[i.item_id] = i.correct();
  if (by_id.size() != a.size()) throw std::invalid_argument("outcome lists cover different items");
  std::vector<double> xa, xb;
  for (const auto& i : a) {
    const auto it = by_id.find(i.item_id);
    if (it == by_id.end()) throw std::invalid_argument("item '" + i.item_id + "' missing from the second list");
    xa.push_back(i.correct());
    xb.push_back(it->second);
  }
  return {std::move(xa), std::move(xb)};
}

}  // namespace punchline
