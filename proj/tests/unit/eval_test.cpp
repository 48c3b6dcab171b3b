#include "fgnn/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>
#include <set>

#include "fgnn/errors.hpp"
#include "test_util.hpp"

namespace fgnn {
namespace {

using Rankings = std::vector<std::vector<std::size_t>>;
using Labels = std::vector<std::size_t>;

// Ranking of length k with `label` at position `rank` (1-based), or absent
// when rank is 0.
std::vector<std::size_t> ranking_with(std::size_t label, std::size_t rank, std::size_t k) {
  std::vector<std::size_t> out;
  std::size_t filler = 1000;
  for (std::size_t p = 1; p <= k; ++p) out.push_back(p == rank ? label : filler++);
  return out;
}

class RandomRanker : public Ranker {
 public:
  explicit RandomRanker(std::size_t m) : m_(m) {}
  std::string name() const override { return "random"; }
  std::size_t item_count() const override { return m_; }
  std::vector<std::size_t> rank(std::span<const std::size_t>, std::size_t k) const override {
    std::vector<std::size_t> all(m_);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng_);
    all.resize(k);
    return all;
  }
  std::size_t m_;
  mutable std::mt19937_64 rng_{99};
};

TEST(Recall, PerfectAndNone) {
  const Rankings r = {{3, 1}, {2, 0}};
  EXPECT_EQ(recall_at_k(r, Labels{3, 2}, 2), 1.0);
  EXPECT_EQ(recall_at_k(r, Labels{5, 5}, 2), 0.0);
}

TEST(Recall, RanksOneTwentyOneSeven) {
  const Rankings r = {ranking_with(7, 1, 20), ranking_with(7, 0, 20), ranking_with(7, 7, 20)};
  EXPECT_DOUBLE_EQ(recall_at_k(r, Labels{7, 7, 7}, 20), 2.0 / 3.0);
}

TEST(Mrr, HandValues) {
  const Rankings r = {ranking_with(4, 1, 20), ranking_with(4, 2, 20), ranking_with(4, 0, 20)};
  EXPECT_DOUBLE_EQ(mrr_at_k(r, Labels{4, 4, 4}, 20), 0.5);
  EXPECT_EQ(mrr_at_k(Rankings{{1}}, Labels{1}, 1), 1.0);
}

TEST(Metrics, RejectEmptyOrMismatchedInput) {
  EXPECT_THROW(recall_at_k(Rankings{}, Labels{}, 5), UsageError);
  EXPECT_THROW(mrr_at_k(Rankings{{1}}, Labels{1, 2}, 5), UsageError);
}

TEST(Metrics, MatchBruteForceOnRandomScoreMatrices) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng() % 49;
    const std::size_t n = 1 + rng() % 30;
    std::vector<std::vector<double>> scores(n, std::vector<double>(m));
    Labels labels(n);
    std::uniform_int_distribution<int> level(0, 9);  // coarse values force ties
    for (std::size_t c = 0; c < n; ++c) {
      for (auto& s : scores[c]) s = level(rng) * 0.1;
      labels[c] = rng() % m;
    }
    for (const std::size_t k : {1u, 5u, 10u, 20u}) {
      const std::size_t kk = std::min<std::size_t>(k, m);
      Rankings rankings;
      for (const auto& s : scores) rankings.push_back(predict_topk(s, kk));
      const auto [recall, mrr] = testing::brute_force_metrics(scores, labels, kk);
      EXPECT_EQ(recall_at_k(rankings, labels, kk), recall);
      EXPECT_EQ(mrr_at_k(rankings, labels, kk), mrr);
    }
  }
}

TEST(Pop, RanksByTrainFrequency) {
  const std::vector<Session> train = {{0, 0, 1}, {0}};
  const PopRanker pop(train, 3);
  EXPECT_EQ(pop.rank(Session{2}, 1), (Session{0}));
  EXPECT_EQ(pop.rank(Session{}, 3), (Session{0, 1, 2}));
  EXPECT_EQ(pop.counts(), (std::vector<std::size_t>{3, 1, 0}));
}

TEST(SPop, PrefersPrefixThenBackfills) {
  const std::vector<Session> train = {{0, 0, 0, 1, 2, 2, 3}};
  const SPopRanker spop(train, 5);
  // Prefix [B, B, A] with B = 1, A = 0.
  EXPECT_EQ(spop.rank(Session{1, 1, 0}, 1), (Session{1}));
  // Distinct prefix items come first, the rest follow POP order.
  const PopRanker pop(train, 5);
  const auto r = spop.rank(Session{3, 4}, 5);
  EXPECT_EQ(r[0], 3u);  // tie in prefix count, more popular globally
  EXPECT_EQ(r[1], 4u);
  Session rest;
  for (const auto i : pop.order()) {
    if (i != 3 && i != 4) rest.push_back(i);
  }
  EXPECT_EQ(Session(r.begin() + 2, r.end()), rest);
}

TEST(ItemKnn, NonCooccurringItemsHaveZeroSimilarity) {
  const std::vector<Session> train = {{0, 1}, {2, 3}};
  const ItemKnnRanker knn(train, 4, 0.0);
  EXPECT_EQ(knn.similarity(0, 2), 0.0);
  EXPECT_EQ(knn.similarity(0, 1), 1.0);
}

TEST(ItemKnn, MatchesIncidenceMatrixCosine) {
  const std::vector<Session> train = {{0, 1, 2}, {1, 2, 2}, {0, 3}, {4, 1}, {2, 3, 4, 0}};
  const std::size_t m = 5;
  std::vector<std::vector<int>> incidence(m, std::vector<int>(train.size(), 0));
  for (std::size_t s = 0; s < train.size(); ++s) {
    for (const auto i : train[s]) incidence[i][s] = 1;
  }
  for (const double lambda : {0.0, 20.0}) {
    const ItemKnnRanker knn(train, m, lambda);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double dot = 0.0, ni = 0.0, nj = 0.0;
        for (std::size_t s = 0; s < train.size(); ++s) {
          dot += incidence[i][s] * incidence[j][s];
          ni += incidence[i][s];
          nj += incidence[j][s];
        }
        const double expected = i == j ? 0.0 : dot / (std::sqrt(ni) * std::sqrt(nj) + lambda);
        EXPECT_NEAR(knn.similarity(i, j), expected, 1e-15) << i << "," << j;
      }
    }
  }
}

TEST(ItemKnn, ScoresSumOverPrefixAndCanExcludeSeen) {
  const std::vector<Session> train = {{0, 1}, {1, 2}, {0, 2}, {0, 1, 2}};
  const ItemKnnRanker knn(train, 3, 20.0);
  const auto s = knn.scores(Session{0, 0, 1});
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(s[c], 2 * knn.similarity(0, c) + knn.similarity(1, c), 1e-15);
  }
  EXPECT_EQ(knn.rank(Session{0, 1}, 3).front(), 2u);
  const ItemKnnRanker strict(train, 3, 20.0, true);
  const auto r = strict.rank(Session{2}, 3);
  EXPECT_EQ(r.back(), 2u);
}

TEST(SessionsFromExamples, RecoversSessions) {
  const std::vector<Session> sessions = {{0, 1, 2}, {2, 2}, {1, 0, 1, 3}};
  std::vector<TrainingExample> ex;
  for (const auto& s : sessions) {
    const auto a = augment(s);
    ex.insert(ex.end(), a.begin(), a.end());
  }
  EXPECT_EQ(sessions_from_examples(ex), sessions);
}

TEST(Evaluate, OracleScoresPerfectly) {
  // Every test label is the single most popular training item.
  const std::vector<Session> train = {{3, 3, 3, 1}};
  const PopRanker pop(train, 5);
  const std::vector<TrainingExample> test = {{{0}, 3}, {{1, 2}, 3}};
  const auto report = evaluate(pop, test);
  ASSERT_EQ(report.rows.size(), 3u);
  for (const auto& row : report.rows) {
    EXPECT_EQ(row.recall, 1.0);
    EXPECT_EQ(row.mrr, 1.0);
  }
  EXPECT_EQ(report.n_test, 2u);
  EXPECT_EQ(report.method, "POP");
}

TEST(Evaluate, UniformRandomRankerHitsAboutOneFifth) {
  const RandomRanker random(100);
  std::vector<TrainingExample> test;
  for (std::size_t i = 0; i < 2000; ++i) test.push_back({{0}, i % 100});
  const auto report = evaluate(random, test, {20});
  EXPECT_NEAR(report.rows[0].recall, 0.2, 0.05);
}

TEST(Evaluate, ReportsAreMonotoneAndDeterministic) {
  const auto sessions = synth_generate({.items = 30, .sessions = 400, .concentration = 0.2, .seed = 4});
  ItemVocabulary vocab;
  for (std::size_t i = 0; i < 30; ++i) vocab.add("i" + std::to_string(i));
  const auto ds = temporal_split(sessions, vocab, {0.2, 1.0});
  const auto train = sessions_from_examples(ds.train_examples);
  const PopRanker pop(train, 30);
  const SPopRanker spop(train, 30);
  const ItemKnnRanker knn(train, 30);
  Rng rng(5);
  ModelConfig mc = testing::toy_config();
  mc.item_count = 30;
  const auto params = make_model(mc, 0.1, rng);
  const ModelRanker model(params);
  for (const Ranker* r : std::vector<const Ranker*>{&pop, &spop, &knn, &model}) {
    const auto a = evaluate(*r, ds.test_examples);
    const auto b = evaluate(*r, ds.test_examples);
    EXPECT_EQ(to_jsonl(a), to_jsonl(b));
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      EXPECT_LE(a.rows[i].mrr, a.rows[i].recall);
      if (i > 0) {
        EXPECT_LE(a.rows[i - 1].recall, a.rows[i].recall);
        EXPECT_LE(a.rows[i - 1].mrr, a.rows[i].mrr);
      }
    }
  }
}

TEST(Reporting, JsonLinesAndTable) {
  EvalReport r{"POP", {{5, 0.25, 0.125}, {10, 0.5, 0.2}}, 8};
  const auto jsonl = to_jsonl(r);
  EXPECT_EQ(jsonl,
            "{\"method\":\"POP\",\"K\":5,\"recall\":0.25,\"mrr\":0.125,\"n_test\":8}\n"
            "{\"method\":\"POP\",\"K\":10,\"recall\":0.5,\"mrr\":0.2,\"n_test\":8}\n");
  const std::vector<EvalReport> reports = {r};
  const auto table = format_table(reports);
  EXPECT_NE(table.find("R@5"), std::string::npos);
  EXPECT_NE(table.find("MRR@10"), std::string::npos);
  EXPECT_NE(table.find("POP"), std::string::npos);
}

TEST(Reporting, SplitByLength) {
  const std::vector<TrainingExample> ex = {{{0, 1, 2, 3, 4}, 1}, {{0, 1, 2, 3, 4, 5}, 1}, {{0}, 2}};
  const auto [short_side, long_side] = split_by_length(ex);
  EXPECT_EQ(short_side.size(), 2u);
  EXPECT_EQ(long_side.size(), 1u);
}

}  // namespace
}  // namespace fgnn
