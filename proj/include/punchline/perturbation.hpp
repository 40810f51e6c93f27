#pragma once

// Occlusion probe: mask one word at a time and record whether the
// single-sentence classifier changes its decision.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "punchline/classifier.hpp"
#include "punchline/corpus.hpp"
#include "punchline/evaluation.hpp"

namespace punchline {

struct MaskSweepResult {
  std::string sentence_id;
  bool funny = false;  // which side of the pair the sentence is
  std::vector<std::string> words;
  int original_decision = 0;
  double original_probability = 0.0;
  std::vector<double> masked_probability;  // per word
  std::vector<bool> flipped;               // per word
  std::vector<bool> in_gold;               // per word
  std::size_t classifications = 0;         // beyond the unmasked one
  // The unmasked input classified again after the sweep gave the same
  // probability.
  bool restored = false;
};

// Every subword of word i is replaced by the encoder's mask input in turn.
MaskSweepResult mask_sweep(HumorClassifier& classifier, const std::string& sentence_id, std::string_view sentence,
                           Span gold, bool funny);

struct FlipCell {
  std::size_t flips = 0;
  std::size_t maskings = 0;
  double rate() const { return maskings ? static_cast<double>(flips) / static_cast<double>(maskings) : 0.0; }
};

struct FlipRateTable {
  // Row 0 holds funny sentences, row 1 serious ones. `modified` counts
  // maskings of edited words, `other` the remaining words.
  FlipCell modified[2];
  FlipCell other[2];
  // Per row: paired t-test over sentences of the flip rate among edited
  // words against the rate among the other words. Sentences lacking
  // either kind of word are left out.
  TTestResult test[2];
  std::size_t sentences[2] = {0, 0};
  std::size_t paired_sentences[2] = {0, 0};
};

FlipRateTable flip_rate_table(std::span<const MaskSweepResult> results);

// Sweeps both sentences of every pair of `corpus`.
std::vector<MaskSweepResult> sweep_corpus(HumorClassifier& classifier, const Corpus& corpus);

// One JSON object per line.
void write_sweep_jsonl(const std::filesystem::path& path, std::span<const MaskSweepResult> results);

}  // namespace punchline
