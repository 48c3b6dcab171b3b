#include "fgnn/train.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fgnn/config.hpp"
#include "fgnn/errors.hpp"
#include "test_util.hpp"

namespace fgnn {
namespace {

TrainingConfig small_config() {
  TrainingConfig c;
  c.dim = 8;
  c.layers = 1;
  c.heads = 2;
  c.steps = 2;
  c.epochs = 1;
  c.seed = 3;
  return c;
}

Dataset synthetic_dataset(std::size_t items, std::size_t sessions, std::uint64_t seed) {
  const auto s = synth_generate({.items = items, .sessions = sessions, .seed = seed});
  ItemVocabulary vocab;
  for (std::size_t i = 0; i < items; ++i) vocab.add("i" + std::to_string(i));
  return temporal_split(s, vocab, {0.1, 1.0});
}

Dataset examples_dataset(std::vector<TrainingExample> train, std::size_t items) {
  Dataset ds;
  for (std::size_t i = 0; i < items; ++i) ds.vocab.add("i" + std::to_string(i));
  ds.train_examples = std::move(train);
  return ds;
}

std::vector<std::vector<double>> snapshot(const ModelParams& p) {
  std::vector<std::vector<double>> out;
  for (const auto& t : p.parameters()) out.emplace_back(t.tensor.values().begin(), t.tensor.values().end());
  return out;
}

TEST(Defaults, MatchPublishedHyperparameters) {
  const TrainingConfig c;
  EXPECT_EQ(c.lr, 1e-3);
  EXPECT_EQ(c.decay_factor, 0.1);
  EXPECT_EQ(c.decay_every_epochs, 3u);
  EXPECT_EQ(c.l2, 1e-5);
  EXPECT_EQ(c.batch_size, 100u);
  EXPECT_EQ(c.dim, 100u);
  EXPECT_EQ(c.layers, 3u);
  EXPECT_EQ(c.heads, 8u);
  EXPECT_EQ(c.steps, 3u);
  EXPECT_EQ(c.init_stddev, 0.1);
  EXPECT_EQ(c.combine, HeadCombine::kMean);
  EXPECT_EQ(c.readout, ReadoutKind::kSet2Set);
}

TEST(InitModel, SeededAndDistributedAsSpecified) {
  TrainingConfig c;
  c.dim = 100;
  Rng a(5), b(5);
  const auto p = init_model(c, 120, a);
  const auto q = init_model(c, 120, b);
  EXPECT_EQ(snapshot(p), snapshot(q));

  const auto emb = p.embedding.weights.values();
  double mean = 0.0, sq = 0.0;
  for (const double v : emb) mean += v;
  mean /= static_cast<double>(emb.size());
  for (const double v : emb) sq += (v - mean) * (v - mean);
  EXPECT_GE(emb.size(), 10000u);
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(emb.size() - 1)), 0.1, 0.01);

  const std::size_t d = c.dim;
  const auto u = p.set2set.gru.hidden_weights;
  for (std::size_t gate = 0; gate < 3; ++gate) {
    double worst = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += u.at(gate * d + i, k) * u.at(gate * d + j, k);
        worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
      }
    }
    EXPECT_LE(worst, 1e-8) << gate;
  }
  EXPECT_THROW(init_model(c, 0, a), UsageError);
}

TEST(Adam, ZeroGradientWithoutL2LeavesParameters) {
  auto t = ad::Tensor::from({3}, {0.5, -1.0, 2.0}, true);
  t.zero_grad();
  std::vector<NamedTensor> params = {{"t", t}};
  auto state = make_adam_state(params);
  adam_step(params, state, 1e-3, 0.0);
  EXPECT_EQ(t[0], 0.5);
  EXPECT_EQ(t[1], -1.0);
  EXPECT_EQ(t[2], 2.0);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  auto t = ad::Tensor::from({3}, {0.0, 0.0, 0.0}, true);
  const auto g = t.mutable_grad();
  g[0] = 0.3;
  g[1] = -7.0;
  g[2] = 1e-3;
  std::vector<NamedTensor> params = {{"t", t}};
  auto state = make_adam_state(params);
  adam_step(params, state, 1e-3, 0.0);
  EXPECT_NEAR(t[0], -1e-3, 1e-9);
  EXPECT_NEAR(t[1], 1e-3, 1e-9);
  EXPECT_NEAR(t[2], -1e-3, 1e-7);
}

TEST(Adam, MissingGradientIsAContractError) {
  auto t = ad::Tensor::from({2}, {1, 2}, true);
  std::vector<NamedTensor> params = {{"t", t}};
  auto state = make_adam_state(params);
  EXPECT_THROW(adam_step(params, state, 1e-3, 0.0), ContractError);
}

TEST(Adam, L2AloneShrinksMagnitudes) {
  std::mt19937_64 rng(6);
  auto t = testing::random_tensor({20}, rng, true, 0.05, 1.0);
  for (std::size_t i = 0; i < 20; i += 2) t.mutable_values()[i] *= -1.0;
  std::vector<NamedTensor> params = {{"t", t}};
  auto state = make_adam_state(params);
  for (int step = 0; step < 5; ++step) {
    const std::vector<double> before(t.values().begin(), t.values().end());
    t.zero_grad();
    adam_step(params, state, 1e-3, 1e-5);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_LT(std::abs(t[i]), std::abs(before[i]));
  }
}

TEST(LrSchedule, StepDecay) {
  const TrainingConfig c;
  EXPECT_DOUBLE_EQ(lr_schedule(0, c), 1e-3);
  EXPECT_DOUBLE_EQ(lr_schedule(2, c), 1e-3);
  EXPECT_DOUBLE_EQ(lr_schedule(3, c), 1e-4);
  EXPECT_DOUBLE_EQ(lr_schedule(7, c), 1e-5);
}

TEST(LrSchedule, LinearInterpolatesBetweenAnchors) {
  TrainingConfig c;
  c.schedule = Schedule::kLinear;
  EXPECT_DOUBLE_EQ(lr_schedule(0, c), 1e-3);
  EXPECT_DOUBLE_EQ(lr_schedule(3, c), 1e-4);
  EXPECT_NEAR(lr_schedule(1, c), 1e-3 - 0.9e-3 / 3.0, 1e-18);
  EXPECT_GT(lr_schedule(1, c), lr_schedule(2, c));
}

TEST(Train, OneExampleOneStep) {
  auto c = small_config();
  const auto ds = examples_dataset({{{0, 1}, 2}}, 4);
  const auto r = train(c, ds);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log[0].steps, 1u);
  EXPECT_EQ(r.adam.step, 1u);
}

TEST(Train, LastPartialBatchIsKept) {
  auto c = small_config();
  std::vector<TrainingExample> ex(250, TrainingExample{{0, 1}, 2});
  const auto r = train(c, examples_dataset(ex, 4));
  EXPECT_EQ(r.log[0].steps, 3u);
}

TEST(Train, EmptyTrainingSplitIsUsageError) {
  EXPECT_THROW(train(small_config(), examples_dataset({}, 3)), UsageError);
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
  auto c = small_config();
  c.epochs = 0;
  const auto ds = examples_dataset({{{0}, 1}}, 3);
  const auto r = train(c, ds);
  Rng rng(c.seed);
  EXPECT_EQ(snapshot(r.params), snapshot(init_model(c, 3, rng)));
  EXPECT_TRUE(r.log.empty());
}

TEST(Train, IdenticalRunsGiveIdenticalParameters) {
  auto c = small_config();
  c.epochs = 5;
  const auto ds = synthetic_dataset(15, 60, 2);
  const auto a = train(c, ds);
  const auto b = train(c, ds);
  EXPECT_EQ(snapshot(a.params), snapshot(b.params));
  for (std::size_t e = 0; e < 5; ++e) EXPECT_EQ(a.log[e].train_loss, b.log[e].train_loss);
}

TEST(Train, LossDecreasesOnSyntheticCorpus) {
  auto c = small_config();
  c.dim = 16;
  c.layers = 2;
  c.epochs = 5;
  c.batch_size = 50;
  const auto ds = synthetic_dataset(50, 400, 7);
  const auto r = train(c, ds);
  for (std::size_t e = 1; e < 5; ++e) {
    EXPECT_LT(r.log[e].train_loss, r.log[e - 1].train_loss) << "epoch " << e;
  }
}

TEST(Train, EvaluatesEachEpochWhenAsked) {
  auto c = small_config();
  c.epochs = 2;
  const auto ds = synthetic_dataset(10, 50, 4);
  std::size_t calls = 0;
  TrainOptions opts;
  opts.evaluate_each_epoch = true;
  opts.on_epoch = [&](const EpochLog& log) {
    ++calls;
    ASSERT_TRUE(log.test_recall.has_value());
    EXPECT_LE(*log.test_mrr, *log.test_recall);
  };
  train(c, ds, opts);
  EXPECT_EQ(calls, 2u);
}

TEST(Gradients, OneBatchCoversEveryParameter) {
  auto c = small_config();
  c.layers = 2;
  Rng rng(8);
  const auto p = init_model(c, 5, rng);
  const std::vector<TrainingExample> batch = {{{0, 1, 2}, 3}, {{4, 3}, 0}};
  accumulate_batch_gradients(p, batch);
  for (const auto& t : p.parameters()) {
    ASSERT_TRUE(t.tensor.has_grad()) << t.name;
    EXPECT_EQ(t.tensor.grad().size(), t.tensor.size());
    bool nonzero = false;
    for (const double g : t.tensor.grad()) nonzero |= g != 0.0;
    EXPECT_TRUE(nonzero) << t.name;
  }
}

TEST(Config, ParsesCommentsAndRejectsDuplicates) {
  std::istringstream ok("# comment\nlr = 0.01\n\nreadout=mean  # trailing\n");
  const auto kv = parse_key_values(ok);
  EXPECT_EQ(kv.at("lr"), "0.01");
  EXPECT_EQ(kv.at("readout"), "mean");
  const auto c = apply_key_values(kv);
  EXPECT_EQ(c.lr, 0.01);
  EXPECT_EQ(c.readout, ReadoutKind::kMean);

  std::istringstream dup("lr=1\nlr=2\n");
  EXPECT_THROW(parse_key_values(dup), UsageError);
  std::istringstream bad("just words\n");
  EXPECT_THROW(parse_key_values(bad), UsageError);
}

TEST(Config, ErrorsNameTheKey) {
  const auto message = [](const KeyValues& kv) {
    try {
      apply_key_values(kv);
    } catch (const UsageError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message({{"learning_rate", "1"}}).find("learning_rate"), std::string::npos);
  EXPECT_NE(message({{"batch_size", "-3"}}).find("batch_size"), std::string::npos);
  EXPECT_NE(message({{"batch_size", "0"}}).find("batch_size"), std::string::npos);
  EXPECT_NE(message({{"readout", "sortpool"}}).find("readout"), std::string::npos);
}

TEST(Config, RoundTripsThroughKeyValues) {
  TrainingConfig c;
  c.lr = 0.0037;
  c.readout = ReadoutKind::kLastAttention;
  c.selfloop_clamp = true;
  c.schedule = Schedule::kLinear;
  const auto back = apply_key_values(to_key_values(c));
  EXPECT_EQ(to_key_values(back), to_key_values(c));
  const auto text = format_key_values(to_key_values(TrainingConfig{}));
  EXPECT_NE(text.find("lr=0.001\n"), std::string::npos);
  EXPECT_NE(text.find("batch_size=100\n"), std::string::npos);
  EXPECT_NE(text.find("l2=1e-05\n"), std::string::npos);
}

}  // namespace
}  // namespace fgnn
