#include "punchline/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace punchline {

namespace fs = std::filesystem;
using nn::Matrix;

double TrainConfig::effective_learning_rate(const ModelVariant& variant) const {
  if (learning_rate) return *learning_rate;
  return variant.frozen ? 1e-3 : 2e-5;
}

void TrainConfig::validate() const {
  if (learning_rate && !(*learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (max_epochs <= 0) throw std::invalid_argument("max_epochs must be positive");
  if (early_stop_patience <= 0) throw std::invalid_argument("early_stop_patience must be positive");
}

std::map<std::string, std::string> read_key_value_file(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("config file '" + path.string() + "' not found");
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::runtime_error("config file: " + std::string(e.what()));
  }
  std::map<std::string, std::string> out;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      out[key] = node.data();
    } else {
      for (const auto& [sub, leaf] : node) out[key + "." + sub] = leaf.data();
    }
  }
  return out;
}

void set_train_option(TrainConfig& config, const std::string& key, const std::string& value) {
  const auto as_int = [&] {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  };
  try {
    if (key == "learning_rate" || key == "lr") {
      std::size_t used = 0;
      config.learning_rate = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("");
    } else if (key == "batch_size") {
      config.batch_size = as_int();
    } else if (key == "max_epochs" || key == "epochs") {
      config.max_epochs = as_int();
    } else if (key == "early_stop_patience" || key == "patience") {
      config.early_stop_patience = as_int();
    } else if (key == "seed") {
      std::size_t used = 0;
      config.seed = std::stoull(value, &used);
      if (used != value.size()) throw std::invalid_argument("");
    } else {
      throw std::out_of_range("unknown training option '" + key + "'");
    }
  } catch (const std::out_of_range& e) {
    throw std::invalid_argument(e.what());
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("bad value '" + value + "' for training option '" + key + "'");
  }
}

TrainConfig load_train_config(const fs::path& path, TrainConfig base) {
  static const std::set<std::string> kKeys = {"learning_rate", "lr", "batch_size", "max_epochs", "epochs",
                                              "early_stop_patience", "patience", "seed"};
  for (const auto& [key, value] : read_key_value_file(path)) {
    std::string k = key;
    if (k.rfind("train.", 0) == 0) k = k.substr(6);
    if (kKeys.contains(k)) set_train_option(base, k, value);
  }
  base.validate();
  return base;
}

// ---------------------------------------------------------------------------

namespace {

struct AdamState {
  std::vector<Matrix> m, v;
  long step = 0;
};

void adam_step(std::span<nn::Parameter* const> params, AdamState& s, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (s.m.empty()) {
    for (auto* p : params) {
      s.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      s.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    if (p->grad.size() == 0) continue;
    auto m = s.m[i].array();
    auto v = s.v[i].array();
    const auto g = p->grad.array();
    m = static_cast<float>(b1) * m + static_cast<float>(1 - b1) * g;
    v = static_cast<float>(b2) * v + static_cast<float>(1 - b2) * g.square();
    p->value.array() -= static_cast<float>(lr) * (m / static_cast<float>(c1)) /
                        ((v / static_cast<float>(c2)).sqrt() + static_cast<float>(eps));
  }
}

std::uint64_t encoder_checksum(HumorClassifier& clf) {
  const auto params = clf.encoder().parameters();
  return nn::checksum(params);
}

struct Tokenized {
  EncodedSentence first;
  std::optional<EncodedSentence> second;
  int label = 0;
};

std::vector<Tokenized> tokenize_all(const Encoder& enc, const std::vector<Instance>& instances, Setup setup) {
  std::vector<Tokenized> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    out.push_back({enc.tokenize(inst.first), std::nullopt, inst.label});
    if (setup == Setup::paired) out.back().second.emplace(enc.tokenize(inst.second));
  }
  return out;
}

}  // namespace

std::vector<double> predict_instances(HumorClassifier& clf, const std::vector<Instance>& instances) {
  const auto tok = tokenize_all(clf.encoder(), instances, clf.variant().setup);
  std::vector<double> out;
  out.reserve(tok.size());
  for (const auto& t : tok) out.push_back(clf.probability(t.first, t.second ? &*t.second : nullptr));
  return out;
}

double instance_accuracy(HumorClassifier& clf, const std::vector<Instance>& instances) {
  if (instances.empty()) throw std::invalid_argument("accuracy over no instances");
  const auto probs = predict_instances(clf, instances);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) correct += (probs[i] > 0.5 ? 1 : 0) == instances[i].label;
  return static_cast<double>(correct) / static_cast<double>(instances.size());
}

TrainLog train(HumorClassifier& clf, const std::vector<Instance>& train_set, const std::vector<Instance>& val_set,
               const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (train_set.empty()) throw TrainingError("empty train split");
  if (val_set.empty()) throw TrainingError("empty validation split");
  const Setup setup = clf.variant().setup;
  const bool frozen = clf.variant().frozen;

  TrainLog log;
  log.train_instances = train_set.size();
  log.val_instances = val_set.size();
  log.learning_rate = config.effective_learning_rate(clf.variant());
  log.encoder_checksum_before = encoder_checksum(clf);

  const auto train_tok = tokenize_all(clf.encoder(), train_set, setup);
  const auto val_tok = tokenize_all(clf.encoder(), val_set, setup);

  // Frozen encoders are run once; only the head sees gradient steps.
  const auto embed = [&](const Tokenized& t) {
    nn::Graph g(false);
    nn::Var e = clf.encoder().forward(g, t.first, {});
    if (t.second) {
      const nn::Var parts[2] = {e, clf.encoder().forward(g, *t.second, {})};
      e = g.concat_cols(parts);
    }
    return Matrix(g.value(e));
  };
  std::vector<Matrix> train_emb, val_emb;
  if (frozen) {
    for (const auto& t : train_tok) train_emb.push_back(embed(t));
    for (const auto& t : val_tok) val_emb.push_back(embed(t));
  }

  const auto params = frozen ? clf.head_parameters() : clf.trainable_parameters();
  const auto val_accuracy = [&] {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < val_tok.size(); ++i) {
      nn::Graph g(false);
      const nn::Var z = frozen ? clf.head_logit(g, g.constant(val_emb[i]))
                               : clf.logit(g, val_tok[i].first, val_tok[i].second ? &*val_tok[i].second : nullptr, {});
      correct += (g.scalar(z) > 0.0f ? 1 : 0) == val_tok[i].label;
    }
    return static_cast<double>(correct) / static_cast<double>(val_tok.size());
  };

  std::mt19937_64 order_rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamState adam;
  std::vector<Matrix> best_values;
  double best = -1.0;
  int since_best = 0;
  std::vector<std::size_t> order(train_tok.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const std::size_t end = std::min(order.size(), start + batch);
      const float inv = 1.0f / static_cast<float>(end - start);
      for (auto* p : params) p->zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& t = train_tok[order[k]];
        nn::Graph g(true);
        ForwardOptions opts;
        opts.training = true;
        opts.rng = &dropout_rng;
        const nn::Var z = frozen ? clf.head_logit(g, g.constant(train_emb[order[k]]))
                                 : clf.logit(g, t.first, t.second ? &*t.second : nullptr, opts);
        const nn::Var loss = g.bce_with_logits(z, static_cast<float>(t.label));
        const double value = g.scalar(loss);
        if (!std::isfinite(value)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", batch " << b + 1 << " (instance " << order[k]
              << ", logit " << g.scalar(z) << ")";
          throw TrainingError(msg.str());
        }
        batch_loss += value;
        g.backward(g.scale(loss, inv));
      }
      if (epoch == 1 && b == 0) log.first_batch_loss = batch_loss / static_cast<double>(end - start);
      loss_sum += batch_loss;
      for (auto* p : params) {
        if (p->grad.size() && !p->grad.allFinite()) {
          throw TrainingError("non-finite gradient at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(b + 1));
        }
      }
      adam_step(params, adam, log.learning_rate);
    }

    EpochLog e;
    e.epoch = epoch;
    e.train_loss = loss_sum / static_cast<double>(order.size());
    e.val_accuracy = val_accuracy();
    log.epochs.push_back(e);
    if (on_epoch) on_epoch(e);
    if (e.val_accuracy > best) {
      best = e.val_accuracy;
      log.best_epoch = epoch;
      best_values.clear();
      for (auto* p : params) best_values.push_back(p->value);
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      log.early_stopped = epoch < config.max_epochs;
      break;
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  for (auto* p : params) p->grad.resize(0, 0);
  log.best_val_accuracy = best;
  clf.mark_trained();
  log.encoder_checksum_after = encoder_checksum(clf);
  if (frozen && log.encoder_checksum_after != log.encoder_checksum_before) {
    throw TrainingError("frozen encoder parameters changed during training");
  }
  return log;
}

TrainLog train(HumorClassifier& clf, const Corpus& corpus, const TrainConfig& config,
               const std::function<void(const EpochLog&)>& on_epoch) {
  const Setup setup = clf.variant().setup;
  PairFilter train_only, val_only;
  train_only.split = Split::train;
  val_only.split = Split::val;
  const auto train_set = make_instances(filter(corpus, train_only), setup, config.seed);
  const auto val_set = make_instances(filter(corpus, val_only), setup, config.seed);
  return train(clf, train_set, val_set, config, on_epoch);
}

}  // namespace punchline
