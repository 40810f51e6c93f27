#pragma once

// Fitting classifiers with binary cross-entropy and Adam, keeping the
// checkpoint with the best validation accuracy.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "punchline/classifier.hpp"
#include "punchline/corpus.hpp"

namespace punchline {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  // Unset: 2e-5 when the encoder is finetuned, 1e-3 when only the head is.
  std::optional<double> learning_rate;
  int batch_size = 32;
  int max_epochs = 10;
  int early_stop_patience = 3;
  std::uint64_t seed = 13;

  double effective_learning_rate(const ModelVariant& variant) const;
  // Throws std::invalid_argument when a field is not positive.
  void validate() const;
};

// INI-style "key = value" file; keys inside a [section] are returned as
// "section.key". Comments start with ';'.
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);

// Applies one "key = value" setting; unknown keys throw.
void set_train_option(TrainConfig& config, const std::string& key, const std::string& value);
// Applies the top-level and [train] keys of a key-value file.
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  double first_batch_loss = 0.0;  // before any update
  bool early_stopped = false;
  std::uint64_t encoder_checksum_before = 0;
  std::uint64_t encoder_checksum_after = 0;
  std::size_t train_instances = 0;
  std::size_t val_instances = 0;
  double learning_rate = 0.0;
};

// Trains on the train split and selects on the val split of `corpus`,
// building instances with the classifier's setup and config.seed. The
// classifier ends holding the best-validation weights and is marked
// trained. Non-finite losses abort with TrainingError.
TrainLog train(HumorClassifier& classifier, const Corpus& corpus, const TrainConfig& config,
               const std::function<void(const EpochLog&)>& on_epoch = {});

// Same, on explicit instance lists.
TrainLog train(HumorClassifier& classifier, const std::vector<Instance>& train_set,
               const std::vector<Instance>& val_set, const TrainConfig& config,
               const std::function<void(const EpochLog&)>& on_epoch = {});

// Probability that each instance's first sentence is funny.
std::vector<double> predict_instances(HumorClassifier& classifier, const std::vector<Instance>& instances);
double instance_accuracy(HumorClassifier& classifier, const std::vector<Instance>& instances);

}  // namespace punchline
