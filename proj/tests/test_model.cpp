// Copyright 2026 The causex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "causex/error.hpp"
#include "causex/model.hpp"
#include "causex/synthetic.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

namespace causex {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr ArchKind kAllArchs[] = {ArchKind::kMeanMlp, ArchKind::kCnn, ArchKind::kLstm,
                                  ArchKind::kBiLstm, ArchKind::kCnnLstm};

EmbeddingTable two_word_table() {
  return parse_embeddings("a 1 2\nb -3 0.5\n", 2);
}

TEST(Arch, IdsRoundTrip) {
  for (ArchKind k : kAllArchs) EXPECT_EQ(parse_arch(arch_id(k)), k);
  EXPECT_THROW(parse_arch("transformer"), Error);
  EXPECT_EQ(arch_label(ArchKind::kCnnLstm), "CNN-LSTM");
}

TEST(Arch, InvalidSizesRejected) {
  Architecture a = Architecture::defaults(ArchKind::kCnn);
  a.filters = -1;
  EXPECT_THROW(a.validate(), Error);
  a = Architecture::defaults(ArchKind::kMeanMlp);
  a.dense_sizes = {0};
  EXPECT_THROW(a.validate(), Error);
  a = Architecture::defaults(ArchKind::kLstm);
  a.hidden_size = -4;
  EXPECT_THROW(a.validate(), Error);
  EXPECT_THROW(init_model(a, two_word_table(), 1), Error);
}

TEST(Forward, HandComputedMeanMlp) {
  Architecture a = Architecture::defaults(ArchKind::kMeanMlp);
  a.dense_sizes = {2};
  Model m = init_model(a, two_word_table(), 3);
  MatrixXd w0(2, 2);
  w0 << 0.5, -1.0, 0.25, 2.0;
  MatrixXd b0(2, 1);
  b0 << 0.1, -0.2;
  MatrixXd w1 = MatrixXd::Zero(kNumClasses, 2);
  w1(0, 0) = 1.0;
  w1(1, 1) = -2.0;
  w1(2, 0) = 0.5;
  w1(2, 1) = 0.5;
  MatrixXd b1 = MatrixXd::Zero(kNumClasses, 1);
  b1(5, 0) = 0.3;
  m.params().at("dense0.weight") = w0;
  m.params().at("dense0.bias") = b0;
  m.params().at("output.weight") = w1;
  m.params().at("output.bias") = b1;

  // mean of a=(1,2), b=(-3,0.5) is (-1, 1.25)
  // hidden pre = (0.5*-1 - 1*1.25 + 0.1, 0.25*-1 + 2*1.25 - 0.2) = (-1.65, 2.05)
  // relu -> (0, 2.05); logits = (0, -4.1, 1.025, 0, 0, 0.3)
  const double expect[kNumClasses] = {0.0, -4.1, 1.025, 0.0, 0.0, 0.3};
  const std::vector<std::string> toks{"a", "b"};
  const auto ids = m.encode(toks);
  const VectorXd z = logits(m, m.embed(ids));
  for (int c = 0; c < kNumClasses; ++c) EXPECT_NEAR(z(c), expect[c], 1e-12) << c;

  double denom = 0.0;
  for (double v : expect) denom += std::exp(v);
  const auto p = predict_tokens(m, toks);
  for (int c = 0; c < kNumClasses; ++c) EXPECT_NEAR(p[c], std::exp(expect[c]) / denom, 1e-12);
  EXPECT_EQ(argmax(p), 2);
}

TEST(Forward, ProbabilitiesSumToOne) {
  for (ArchKind k : kAllArchs) {
    const Model m = test::random_small_model(k, 4, 9);
    const std::vector<std::string> toks{"w0", "w3", "w1", "zzz", "w5"};
    const auto p = predict_tokens(m, toks);
    double s = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12) << arch_id(k);
  }
}

TEST(Forward, SoftmaxStableForLargeLogits) {
  VectorXd z(kNumClasses);
  z << 1000, 999, -1000, 0, 0, 0;
  const auto p = softmax(z);
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_TRUE(std::isfinite(p[2]));
}

TEST(Forward, PadIdsMasked) {
  const Model m = test::random_small_model(ArchKind::kLstm, 4, 2);
  const std::vector<int> plain{2, 3, 4};
  const std::vector<int> padded{2, 3, 4, kPadId, kPadId};
  const auto a = forward(m, plain);
  const auto b = forward(m, padded);
  for (int c = 0; c < kNumClasses; ++c) EXPECT_DOUBLE_EQ(a[c], b[c]);
}

TEST(Encode, UnknownAndTruncation) {
  Model m = init_model(Architecture::defaults(ArchKind::kCnn), two_word_table(), 1, {}, 3);
  const std::vector<std::string> toks{"b", "nope", "a", "a", "b"};
  EXPECT_EQ(m.encode(toks), (std::vector<int>{3, kUnkId, 2}));
  EXPECT_EQ(m.embeddings().col(kPadId), VectorXd::Zero(2));
  EXPECT_EQ(m.embeddings().col(kUnkId), VectorXd::Zero(2));
}

TEST(Init, DeterministicPerSeed) {
  const auto t = two_word_table();
  for (ArchKind k : kAllArchs) {
    const Model a = init_model(Architecture::defaults(k), t, 42);
    const Model b = init_model(Architecture::defaults(k), t, 42);
    const Model c = init_model(Architecture::defaults(k), t, 43);
    ASSERT_EQ(a.params().size(), b.params().size());
    bool any_diff = false;
    for (size_t i = 0; i < a.params().size(); ++i) {
      EXPECT_EQ(a.params().entries()[i].value, b.params().entries()[i].value);
      any_diff |= a.params().entries()[i].value != c.params().entries()[i].value;
    }
    EXPECT_TRUE(any_diff) << arch_id(k);
  }
}

TEST(Init, ShapesFollowArchitecture) {
  const auto t = two_word_table();
  const Model mlp = init_model(Architecture::defaults(ArchKind::kMeanMlp), t, 1);
  EXPECT_EQ(mlp.params().at("dense0.weight").cols(), 2);
  EXPECT_EQ(mlp.params().at("dense0.weight").rows(), 64);
  EXPECT_EQ(mlp.params().at("output.weight").rows(), kNumClasses);

  const Model cnn = init_model(Architecture::defaults(ArchKind::kCnn), t, 1);
  EXPECT_EQ(cnn.params().at("conv4.weight").rows(), 64);
  EXPECT_EQ(cnn.params().at("conv4.weight").cols(), 8);
  EXPECT_EQ(cnn.params().at("output.weight").cols(), 192);

  const Model bi = init_model(Architecture::defaults(ArchKind::kBiLstm), t, 1);
  EXPECT_EQ(bi.params().at("output.weight").cols(), 128);
  EXPECT_EQ(bi.params().at("lstm_fwd.wx").rows(), 256);

  // Glorot bound on the output layer.
  const double limit = std::sqrt(6.0 / (kNumClasses + 192));
  EXPECT_LE(cnn.params().at("output.weight").cwiseAbs().maxCoeff(), limit);
}

class GradientCheck : public ::testing::TestWithParam<ArchKind> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = test::check_gradients(GetParam(), seed);
    EXPECT_LT(r.param_error, 1e-4) << "seed " << seed;
    EXPECT_LT(r.input_error, 1e-4) << "seed " << seed;
    EXPECT_LT(r.logit_input_error, 1e-4) << "seed " << seed;
  }
}

TEST_P(GradientCheck, LongerSequence) {
  const auto r = test::check_gradients(GetParam(), 77, 3, 7);
  EXPECT_LT(r.param_error, 1e-4);
  EXPECT_LT(r.input_error, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(AllArchitectures, GradientCheck, ::testing::ValuesIn(kAllArchs),
                         [](const auto& info) { return std::string(arch_id(info.param)); });

TEST(Gradients, ZeroOutputWeightsGiveZeroInputGradient) {
  for (ArchKind k : kAllArchs) {
    Model m = test::random_small_model(k, 4, 5);
    m.params().at("output.weight").setZero();
    const MatrixXd x = MatrixXd::Random(4, 3);
    EXPECT_EQ(input_gradients(m, x, 2), MatrixXd::Zero(4, 3)) << arch_id(k);
  }
}

TEST(Gradients, LinearMeanModelHasClosedForm) {
  Architecture a = Architecture::defaults(ArchKind::kMeanMlp);
  a.dense_sizes.clear();
  Model m = init_model(a, two_word_table(), 8);
  const MatrixXd x = MatrixXd::Random(2, 4);
  const MatrixXd g = input_gradients(m, x, 3);
  const VectorXd w = m.params().at("output.weight").row(3).transpose() / 4.0;
  for (int t = 0; t < 4; ++t) EXPECT_LT((g.col(t) - w).norm(), 1e-15);
}

TEST(Metrics, FromConfusion) {
  std::array<std::array<int, kNumClasses>, kNumClasses> conf{};
  conf[0][0] = 2;
  conf[0][1] = 1;
  conf[1][1] = 3;
  const auto r = metrics_from_confusion(conf);
  EXPECT_NEAR(r.per_class_f1[0], 0.8, 1e-12);
  EXPECT_NEAR(r.per_class_f1[1], 6.0 / 7.0, 1e-12);
  EXPECT_EQ(r.per_class_f1[2], 0.0);
  EXPECT_NEAR(r.accuracy, 5.0 / 6.0, 1e-12);
  EXPECT_EQ(r.support[0], 3);
  EXPECT_NEAR(r.precision[1], 0.75, 1e-12);
  EXPECT_NEAR(r.recall[0], 2.0 / 3.0, 1e-12);
}

TEST(Metrics, PerfectPredictor) {
  std::array<std::array<int, kNumClasses>, kNumClasses> conf{};
  for (int c = 0; c < kNumClasses; ++c) conf[c][c] = c + 1;
  const auto r = metrics_from_confusion(conf);
  for (double f : r.per_class_f1) EXPECT_EQ(f, 1.0);
  EXPECT_EQ(r.accuracy, 1.0);
}

TEST(Metrics, JsonRoundTrip) {
  std::array<std::array<int, kNumClasses>, kNumClasses> conf{};
  conf[2][3] = 4;
  conf[3][3] = 5;
  conf[5][5] = 1;
  const auto r = metrics_from_confusion(conf);
  const auto back = metrics_from_json(metrics_to_json(r));
  EXPECT_EQ(back.confusion, r.confusion);
  EXPECT_EQ(back.per_class_f1, r.per_class_f1);
  EXPECT_EQ(back.accuracy, r.accuracy);
}

struct SmallCorpus {
  SyntheticCorpus corpus;
  CorpusSplit parts;
};

const SmallCorpus& small_corpus() {
  static const SmallCorpus c = [] {
    SyntheticConfig cfg;
    cfg.docs_per_class = 20;
    cfg.dim = 12;
    cfg.filler_vocabulary = 60;
    SmallCorpus out{make_synthetic(cfg), {}};
    out.parts = split(out.corpus.docs, SplitCounts{90, 10, 20}, 4);
    return out;
  }();
  return c;
}

Model small_cnn(uint64_t seed) {
  Architecture a = Architecture::defaults(ArchKind::kCnn);
  a.filters = 8;
  return init_model(a, small_corpus().corpus.table, seed);
}

TEST(Train, ZeroEpochsIsIdentity) {
  const Model m = small_cnn(1);
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto r = train(m, small_corpus().parts.train, {}, cfg);
  EXPECT_TRUE(r.history.empty());
  for (size_t i = 0; i < m.params().size(); ++i) {
    EXPECT_EQ(r.model.params().entries()[i].value, m.params().entries()[i].value);
  }
}

TEST(Train, DeterministicAcrossJobs) {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 32;
  cfg.seed = 9;
  const auto a = train(small_cnn(2), small_corpus().parts.train, small_corpus().parts.validation, cfg, 1);
  const auto b = train(small_cnn(2), small_corpus().parts.train, small_corpus().parts.validation, cfg, 3);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(model_to_bytes(a.model), model_to_bytes(b.model));
}

TEST(Train, LossDecreases) {
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 16;
  cfg.seed = 3;
  const auto r = train(small_cnn(3), small_corpus().parts.train, {}, cfg);
  ASSERT_EQ(r.history.size(), 20u);
  double head = 0.0;
  double tail = 0.0;
  for (int i = 0; i < 5; ++i) {
    head += r.history[i].train_loss / 5;
    tail += r.history[15 + i].train_loss / 5;
  }
  EXPECT_LT(tail, head - 0.2);
}

TEST(Train, OverfitsSingleExample) {
  for (ArchKind k : kAllArchs) {
    Architecture a = Architecture::defaults(k);
    a.filters = 8;
    a.hidden_size = 8;
    if (k == ArchKind::kMeanMlp) a.dense_sizes = {16};
    a.dropout = 0.0;
    const Model m = init_model(a, small_corpus().corpus.table, 5);
    const std::vector<Document> one{small_corpus().parts.train[0]};
    TrainConfig cfg = TrainConfig::defaults_for(k);
    cfg.learning_rate = 0.01;
    cfg.batch_size = 1;
    cfg.epochs = 500;
    const auto r = train(m, one, {}, cfg);
    int reached = -1;
    for (const auto& rec : r.history) {
      if (rec.train_loss < 0.01) {
        reached = rec.epoch;
        break;
      }
    }
    EXPECT_GT(reached, 0) << arch_id(k) << " final " << r.history.back().train_loss;
  }
}

TEST(Train, DefaultLearningRates) {
  EXPECT_DOUBLE_EQ(TrainConfig::defaults_for(ArchKind::kCnn).learning_rate, 1.46e-3);
  EXPECT_DOUBLE_EQ(TrainConfig::defaults_for(ArchKind::kCnnLstm).learning_rate, 0.0005);
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Train, FrozenEmbeddingsUnchanged) {
  TrainConfig cfg;
  cfg.epochs = 1;
  const Model m = small_cnn(4);
  const auto r = train(m, small_corpus().parts.train, {}, cfg);
  EXPECT_EQ(r.model.embeddings(), m.embeddings());
}

TEST(BiLstm, PalindromeWithTiedDirections) {
  Model m = test::random_small_model(ArchKind::kBiLstm, 4, 6);
  for (const char* part : {".wx", ".wh", ".bias"}) {
    m.params().at(std::string("lstm_bwd") + part) = m.params().at(std::string("lstm_fwd") + part);
  }
  MatrixXd x = MatrixXd::Random(4, 5);
  x.col(3) = x.col(1);
  x.col(4) = x.col(0);
  const VectorXd f = encoder_features(m, x);
  ASSERT_EQ(f.size(), 6);
  EXPECT_LT((f.head(3) - f.tail(3)).norm(), 1e-14);

  x.col(4) = x.col(2);
  const VectorXd g = encoder_features(m, x);
  EXPECT_GT((g.head(3) - g.tail(3)).norm(), 1e-6);
}

TEST(ModelFile, RoundTripPreservesPredictions) {
  test::TempDir dir;
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 2;
  const auto trained = train(small_cnn(6), small_corpus().parts.train, {}, cfg);
  save_model(dir / "m.bin", trained.model);
  const Model back = load_model(dir / "m.bin");
  EXPECT_EQ(back.vocabulary(), trained.model.vocabulary());
  EXPECT_EQ(back.architecture(), trained.model.architecture());
  EXPECT_EQ(back.history, trained.model.history);
  EXPECT_EQ(model_to_bytes(back), model_to_bytes(trained.model));
  for (const auto& d : small_corpus().parts.test) {
    const auto a = predict_tokens(back, d.tokens);
    const auto b = predict_tokens(trained.model, d.tokens);
    for (int c = 0; c < kNumClasses; ++c) EXPECT_NEAR(a[c], b[c], 1e-5);
  }
}

TEST(ModelFile, BadMagicRejected) {
  try {
    model_from_bytes("NOTAMODEL.......");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSchema);
  }
  std::string bytes = model_to_bytes(small_cnn(1));
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(model_from_bytes(bytes), Error);
}

}  // namespace
}  // namespace causex
