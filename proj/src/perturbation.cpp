#include "punchline/perturbation.hpp"

#include <fstream>

#include <json.hpp>

namespace punchline {

MaskSweepResult mask_sweep(HumorClassifier& clf, const std::string& sentence_id, std::string_view sentence,
                           Span gold, bool funny) {
  if (clf.variant().setup != Setup::single) throw std::invalid_argument("mask sweep needs a single-sentence classifier");
  MaskSweepResult r;
  r.sentence_id = sentence_id;
  r.funny = funny;
  r.words = word_strings(sentence);
  if (r.words.empty()) throw std::invalid_argument("mask sweep of an empty sentence");
  if (gold.end > r.words.size()) throw std::invalid_argument("gold span outside sentence '" + sentence_id + "'");
  const auto input = clf.encoder().tokenize(std::span<const std::string>(r.words));
  r.original_probability = clf.probability(input, nullptr);
  r.original_decision = r.original_probability > 0.5 ? 1 : 0;
  for (std::size_t i = 0; i < r.words.size(); ++i) {
    EncodedSentence masked = input;
    clf.encoder().mask_word(masked, i);
    const double p = clf.probability(masked, nullptr);
    ++r.classifications;
    r.masked_probability.push_back(p);
    r.flipped.push_back((p > 0.5 ? 1 : 0) != r.original_decision);
    r.in_gold.push_back(gold.contains(i));
  }
  r.restored = clf.probability(input, nullptr) == r.original_probability;
  return r;
}

FlipRateTable flip_rate_table(std::span<const MaskSweepResult> results) {
  FlipRateTable t;
  std::vector<double> mod_rates[2], other_rates[2];
  for (const auto& r : results) {
    const int row = r.funny ? 0 : 1;
    ++t.sentences[row];
    std::size_t mf = 0, mn = 0, of = 0, on = 0;
    for (std::size_t i = 0; i < r.flipped.size(); ++i) {
      if (r.in_gold[i]) {
        ++mn;
        mf += r.flipped[i];
      } else {
        ++on;
        of += r.flipped[i];
      }
    }
    t.modified[row].flips += mf;
    t.modified[row].maskings += mn;
    t.other[row].flips += of;
    t.other[row].maskings += on;
    if (mn && on) {
      mod_rates[row].push_back(static_cast<double>(mf) / static_cast<double>(mn));
      other_rates[row].push_back(static_cast<double>(of) / static_cast<double>(on));
    }
  }
  for (int row = 0; row < 2; ++row) {
    t.paired_sentences[row] = mod_rates[row].size();
    if (mod_rates[row].size() >= 2) {
      t.test[row] = paired_t_test(mod_rates[row], other_rates[row]);
    } else {
      t.test[row].defined = false;
      t.test[row].p_value = std::numeric_limits<double>::quiet_NaN();
      t.test[row].n = mod_rates[row].size();
    }
  }
  return t;
}

std::vector<MaskSweepResult> sweep_corpus(HumorClassifier& clf, const Corpus& corpus) {
  std::vector<MaskSweepResult> out;
  for (const auto& pair : corpus.pairs()) {
    const auto& a = corpus.alignment(pair.pair_id);
    out.push_back(mask_sweep(clf, pair.pair_id + "/funny", pair.funny, a.funny_span, true));
    out.push_back(mask_sweep(clf, pair.pair_id + "/serious", pair.serious, a.serious_span, false));
  }
  return out;
}

void write_sweep_jsonl(const std::filesystem::path& path, std::span<const MaskSweepResult> results) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (const auto& r : results) {
    nlohmann::json j = {{"sentence_id", r.sentence_id},
                        {"funny", r.funny},
                        {"words", r.words},
                        {"original_decision", r.original_decision},
                        {"original_probability", r.original_probability},
                        {"masked_probability", r.masked_probability},
                        {"flipped", r.flipped},
                        {"in_gold", r.in_gold},
                        {"restored", r.restored}};
    out << j.dump() << '\n';
  }
}

}  // namespace punchline
