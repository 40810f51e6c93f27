#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "punchline/training.hpp"
#include "support.hpp"

using namespace punchline;
namespace pt = punchline::testing;

namespace {

ModelVariant variant(EncoderKind kind, Setup setup, bool frozen) {
  ModelVariant v;
  v.encoder_kind = kind;
  v.setup = setup;
  v.frozen = frozen;
  return v;
}

HumorClassifier bow_classifier(Setup setup, int dim = 32) {
  return HumorClassifier(variant(EncoderKind::bag_of_vectors, setup, true),
                         std::make_unique<BagOfVectorsEncoder>(pt::synthetic_vectors(dim)));
}

HumorClassifier tiny_transformer(Setup setup, bool frozen, EncoderKind kind = EncoderKind::vanilla_transformer) {
  auto tok = pt::tiny_wordpiece();
  return HumorClassifier(variant(kind, setup, frozen),
                         std::make_unique<TransformerEncoder>(pt::tiny_transformer_config(static_cast<int>(tok.size())),
                                                              tok, kind, 4));
}

std::vector<Instance> first_pairs(const Corpus& corpus, Setup setup, std::size_t n, std::uint64_t seed) {
  std::vector<SentencePair> pairs(corpus.pairs().begin(), corpus.pairs().begin() + static_cast<long>(n));
  return make_instances(Corpus(pairs, {}), setup, seed);
}

}  // namespace

TEST(Training, FirstLossIsLogTwo) {
  const auto corpus = pt::synthetic_corpus(80);
  for (const auto setup : {Setup::single, Setup::paired}) {
    auto clf = bow_classifier(setup);
    TrainConfig cfg;
    cfg.max_epochs = 1;
    const auto log = train(clf, corpus, cfg);
    EXPECT_NEAR(log.first_batch_loss, std::log(2.0), 1e-6);
  }
}

TEST(Training, FrozenEncoderKeepsItsWeights) {
  const auto corpus = pt::synthetic_corpus(60);
  auto clf = tiny_transformer(Setup::single, true, EncoderKind::pretrained_mlm);
  const auto before = nn::checksum(clf.encoder().parameters());
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.learning_rate = 0.05;
  const auto log = train(clf, corpus, cfg);
  EXPECT_EQ(log.encoder_checksum_before, log.encoder_checksum_after);
  EXPECT_EQ(nn::checksum(clf.encoder().parameters()), before);
  EXPECT_TRUE(clf.trained());
}

TEST(Training, FinetuningMovesTheEncoder) {
  const auto corpus = pt::synthetic_corpus(40);
  auto clf = tiny_transformer(Setup::single, false);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.learning_rate = 1e-3;
  const auto log = train(clf, corpus, cfg);
  EXPECT_NE(log.encoder_checksum_before, log.encoder_checksum_after);
}

TEST(Training, SameSeedSameModel) {
  const auto corpus = pt::synthetic_corpus(60);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.learning_rate = 1e-3;
  cfg.seed = 5;
  auto a = tiny_transformer(Setup::paired, false);
  auto b = tiny_transformer(Setup::paired, false);
  const auto la = train(a, corpus, cfg);
  const auto lb = train(b, corpus, cfg);
  ASSERT_EQ(la.epochs.size(), lb.epochs.size());
  for (std::size_t i = 0; i < la.epochs.size(); ++i) EXPECT_EQ(la.epochs[i].train_loss, lb.epochs[i].train_loss);
  EXPECT_EQ(nn::checksum(a.trainable_parameters()), nn::checksum(b.trainable_parameters()));
}

TEST(Training, OverfitsTenPairs) {
  const auto corpus = pt::synthetic_corpus(200);
  for (const auto setup : {Setup::single, Setup::paired}) {
    const auto inst = first_pairs(corpus, setup, 10, 2);
    auto clf = bow_classifier(setup);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 4;
    cfg.max_epochs = 300;
    cfg.early_stop_patience = 300;
    train(clf, inst, inst, cfg);
    EXPECT_DOUBLE_EQ(instance_accuracy(clf, inst), 1.0) << to_string(setup);
  }
  const auto inst = first_pairs(corpus, Setup::paired, 10, 2);
  auto tf = tiny_transformer(Setup::paired, false);
  TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 4;
  cfg.max_epochs = 40;
  cfg.early_stop_patience = 40;
  const auto log = train(tf, inst, inst, cfg);
  EXPECT_GE(instance_accuracy(tf, inst), 0.9);
  EXPECT_LT(log.epochs.back().train_loss, log.epochs.front().train_loss);
}

TEST(Training, EarlyStoppingKeepsTheBestEpoch) {
  const auto train_set = first_pairs(pt::synthetic_corpus(60), Setup::single, 20, 1);
  // The same sentence under both labels: validation accuracy is 0.5 forever.
  const std::vector<Instance> val = {{"v", "senate approves budget", "", 1}, {"v", "senate approves budget", "", 0}};
  auto clf = bow_classifier(Setup::single);
  TrainConfig cfg;
  cfg.max_epochs = 10;
  cfg.early_stop_patience = 2;
  const auto log = train(clf, train_set, val, cfg);
  EXPECT_EQ(log.best_epoch, 1);
  EXPECT_EQ(log.epochs.size(), 3u);
  EXPECT_TRUE(log.early_stopped);
  EXPECT_DOUBLE_EQ(log.best_val_accuracy, 0.5);
}

TEST(Training, NonFiniteLossAborts) {
  const auto corpus = pt::synthetic_corpus(40);
  auto clf = bow_classifier(Setup::single, 4);
  clf.set_head(nn::Matrix::Constant(1, 4, std::numeric_limits<float>::quiet_NaN()), 0.0f);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  EXPECT_THROW(train(clf, corpus, cfg), TrainingError);
}

TEST(Training, EmptySplitsAreErrors) {
  auto clf = bow_classifier(Setup::single, 4);
  std::vector<Instance> none;
  const auto some = first_pairs(pt::synthetic_corpus(20), Setup::single, 3, 1);
  EXPECT_THROW(train(clf, none, some, {}), TrainingError);
  EXPECT_THROW(train(clf, some, none, {}), TrainingError);
}

TEST(TrainConfig, KeyValueFileAndValidation) {
  const auto dir = pt::scratch_dir("train-config");
  {
    std::ofstream out(dir / "run.ini");
    out << "; shared settings\nseed = 21\n\n[train]\nlr = 0.004\nbatch_size = 8\nepochs = 3\n";
  }
  const auto cfg = load_train_config(dir / "run.ini");
  EXPECT_EQ(cfg.seed, 21u);
  EXPECT_DOUBLE_EQ(*cfg.learning_rate, 0.004);
  EXPECT_EQ(cfg.batch_size, 8);
  EXPECT_EQ(cfg.max_epochs, 3);
  {
    std::ofstream out(dir / "bad.ini");
    out << "[train]\nbatch_size = 0\n";
  }
  EXPECT_THROW(load_train_config(dir / "bad.ini"), std::invalid_argument);
  TrainConfig c;
  EXPECT_THROW(set_train_option(c, "momentum", "0.9"), std::invalid_argument);
  EXPECT_THROW(set_train_option(c, "epochs", "3x"), std::invalid_argument);
  EXPECT_DOUBLE_EQ(c.effective_learning_rate(variant(EncoderKind::pretrained_mlm, Setup::single, false)), 2e-5);
  EXPECT_DOUBLE_EQ(c.effective_learning_rate(variant(EncoderKind::pretrained_mlm, Setup::single, true)), 1e-3);
}
