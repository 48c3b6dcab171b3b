#include "fgnn/data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fgnn/errors.hpp"
#include "test_util.hpp"

namespace fgnn {
namespace {

using Keys = std::vector<std::string>;

KeyedSession keyed(std::string key, Keys items, std::int64_t t = 0) {
  return {std::move(key), std::move(items), t};
}

std::vector<Keys> as_keys(const FilterResult& r) {
  std::vector<Keys> out;
  for (const auto& s : r.sessions) {
    Keys k;
    for (const auto i : s) k.push_back(r.vocab.key(i));
    out.push_back(k);
  }
  return out;
}

LoadResult load(const std::string& text, LogFormat format) {
  std::istringstream in(text);
  return load_events(in, format);
}

TEST(LoadEvents, CanonicalRow) {
  const auto r = load("session_id,timestamp_ms,item_id\ns1,1000,itemA\n", LogFormat::kCanonical);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0], (RawEvent{"s1", 1000, "itemA"}));
  EXPECT_EQ(r.skipped_rows, 0u);
}

TEST(LoadEvents, YoochooseRowUsesUtcInstant) {
  const auto r = load("1,2014-04-07T10:51:09.277Z,214536502,0\n", LogFormat::kYoochoose);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0], (RawEvent{"1", 1396867869277, "214536502"}));
}

TEST(LoadEvents, DigineticaCombinesDateAndTimeframe) {
  const auto r = load(
      "sessionId;userId;itemId;timeframe;eventdate\n1;NA;81766;526309;2016-05-09\n",
      LogFormat::kDiginetica);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0], (RawEvent{"1", 1462752000000 + 526309, "81766"}));
}

TEST(LoadEvents, HeaderOnlyIsEmptyInput) {
  EXPECT_THROW(load("session_id,timestamp_ms,item_id\n", LogFormat::kCanonical), DataError);
}

TEST(LoadEvents, BadRowsAreCountedAndSkipped) {
  const auto r = load("session_id,timestamp_ms,item_id\ns1,10,a\ns1,notanumber,b\ns2\ns2,-5,c\ns2,20,d\n",
                      LogFormat::kCanonical);
  EXPECT_EQ(r.events.size(), 2u);
  EXPECT_EQ(r.skipped_rows, 3u);
  EXPECT_EQ(r.skipped_lines, (std::vector<std::size_t>{3, 4, 5}));
}

TEST(LoadEvents, UnknownFormatTag) {
  EXPECT_THROW(parse_log_format("parquet"), UsageError);
  EXPECT_EQ(parse_log_format("yoochoose"), LogFormat::kYoochoose);
}

TEST(Iso8601, ParsesOffsetsAndRejectsGarbage) {
  EXPECT_EQ(parse_iso8601_ms("1970-01-01T00:00:00Z"), 0);
  EXPECT_EQ(parse_iso8601_ms("2014-04-07T10:51:09.277Z"), 1396867869277);
  EXPECT_EQ(parse_iso8601_ms("2014-04-07T12:51:09.277+02:00"), 1396867869277);
  EXPECT_FALSE(parse_iso8601_ms("2014-13-07T10:51:09Z"));
  EXPECT_FALSE(parse_iso8601_ms("yesterday"));
}

TEST(Sessionize, OrdersWithinAndAcrossSessions) {
  const std::vector<RawEvent> events = {
      {"s1", 2, "B"}, {"s1", 1, "A"}, {"s2", 10, "X"}, {"s3", 5, "Y"}};
  const auto s = sessionize(events);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].key, "s1");
  EXPECT_EQ(s[0].items, (Keys{"A", "B"}));
  EXPECT_EQ(s[1].key, "s3");
  EXPECT_EQ(s[2].key, "s2");
}

TEST(Sessionize, EqualTimestampsKeepInputOrder) {
  const std::vector<RawEvent> events = {{"s", 7, "C"}, {"s", 7, "A"}, {"s", 7, "B"}};
  EXPECT_EQ(sessionize(events)[0].items, (Keys{"C", "A", "B"}));
}

TEST(Filter, EverythingRemovedIsAnError) {
  const std::vector<KeyedSession> s = {keyed("s", {"A"})};
  EXPECT_THROW(filter_sessions(s), DataError);
}

TEST(Filter, ExactlyFiveOccurrencesSurvive) {
  std::vector<KeyedSession> s;
  for (int i = 0; i < 5; ++i) s.push_back(keyed("s" + std::to_string(i), {"A", "B", i == 0 ? "C" : "B"}));
  // A: 5, B: 9, C: 1.
  const auto r = filter_sessions(s);
  EXPECT_EQ(r.vocab.keys(), (Keys{"A", "B"}));
  ASSERT_EQ(r.sessions.size(), 5u);
  EXPECT_EQ(as_keys(r)[0], (Keys{"A", "B"}));
  std::vector<KeyedSession> four(s.begin(), s.begin() + 4);
  EXPECT_EQ(filter_sessions(four).vocab.keys(), (Keys{"B"}));
}

TEST(Filter, HandTracedTwoPasses) {
  const std::vector<KeyedSession> s = {keyed("1", {"A", "B", "A"}), keyed("2", {"B", "C"})};
  const auto r = filter_sessions(s, 2, 2);
  EXPECT_EQ(as_keys(r), (std::vector<Keys>{{"A", "B", "A"}}));
}

TEST(Filter, LengthOneSessionsAreDropped) {
  std::vector<KeyedSession> s;
  for (int i = 0; i < 6; ++i) s.push_back(keyed(std::to_string(i), {"A", "B"}));
  s.push_back(keyed("solo", {"A"}));
  EXPECT_EQ(filter_sessions(s).sessions.size(), 6u);
}

// One pass-pair is a fixed point when pass 2 removes no occurrence of a
// surviving item; that holds whenever every session keeps length >= 2.
TEST(Filter, IdempotentWhenNoSessionIsDropped) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<KeyedSession> s;
    for (int i = 0; i < 40; ++i) {
      Keys items = {"common1", "common2"};
      for (std::size_t k = 0; k < rng() % 5; ++k) items.push_back("x" + std::to_string(rng() % 12));
      s.push_back(keyed(std::to_string(i), items));
    }
    const auto once = filter_sessions(s, 5, 2);
    std::vector<KeyedSession> again;
    for (const auto& k : as_keys(once)) again.push_back(keyed("", k));
    const auto twice = filter_sessions(again, 5, 2);
    EXPECT_EQ(as_keys(once), as_keys(twice));
    EXPECT_EQ(once.vocab.keys(), twice.vocab.keys());
  }
}

// A session dropped in pass 2 can take an item below the support threshold,
// so a second application may remove more.
TEST(Filter, SinglePassPairIsNotAFixpointInGeneral) {
  const std::vector<KeyedSession> s = {keyed("1", {"A", "B", "A"}), keyed("2", {"B", "C"})};
  const auto once = filter_sessions(s, 2, 2);
  std::vector<KeyedSession> again;
  for (const auto& k : as_keys(once)) again.push_back(keyed("", k));
  EXPECT_EQ(as_keys(filter_sessions(again, 2, 2)), (std::vector<Keys>{{"A", "A"}}));
}

TEST(Augment, EnumeratesPrefixes) {
  EXPECT_EQ(augment(Session{0, 1}), (std::vector<TrainingExample>{{{0}, 1}}));
  EXPECT_EQ(augment(Session{0, 1, 2}),
            (std::vector<TrainingExample>{{{0}, 1}, {{0, 1}, 2}}));
  EXPECT_EQ(augment(Session{3, 3, 1, 0}).size(), 3u);
  EXPECT_THROW(augment(Session{4}), ContractError);
}

TEST(Augment, LastExampleReconstructsSession) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = testing::random_sequence(rng, 2 + rng() % 20, 9);
    const auto ex = augment(s);
    ASSERT_EQ(ex.size(), s.size() - 1);
    for (std::size_t i = 0; i < ex.size(); ++i) {
      EXPECT_EQ(ex[i].prefix.size(), i + 1);
      EXPECT_EQ(ex[i].label, s[i + 1]);
    }
    auto rebuilt = ex.back().prefix;
    rebuilt.push_back(ex.back().label);
    EXPECT_EQ(rebuilt, s);
  }
}

std::vector<Session> numbered_sessions(std::size_t n) {
  std::vector<Session> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({0, 1});
  return out;
}

ItemVocabulary two_items() { return ItemVocabulary({"a", "b"}); }

TEST(TemporalSplit, Arithmetic) {
  auto ds = temporal_split(numbered_sessions(100), two_items(), {0.1, 1.0});
  EXPECT_EQ(ds.stats.test_sessions, 10u);
  EXPECT_EQ(ds.stats.train_sessions, 90u);

  // 6400 sessions remain after the test slice; 1/64 keeps the newest 100.
  ds = temporal_split(numbered_sessions(6500), two_items(), {100.0 / 6500.0, 1.0 / 64.0});
  EXPECT_EQ(ds.stats.test_sessions, 100u);
  EXPECT_EQ(ds.stats.train_sessions, 100u);
}

TEST(TemporalSplit, NewestSessionsBecomeTest) {
  std::vector<Session> s;
  for (std::size_t i = 0; i < 10; ++i) s.push_back({i % 3, (i + 1) % 3});
  const auto ds = temporal_split(s, ItemVocabulary({"a", "b", "c"}), {0.2, 0.5});
  // Test: sessions 8, 9. Train: newest ceil(0.5 * 8) = 4 of sessions 0..7.
  ASSERT_EQ(ds.test_examples.size(), 2u);
  EXPECT_EQ(ds.test_examples[0], (TrainingExample{{2}, 0}));
  EXPECT_EQ(ds.test_examples[1], (TrainingExample{{0}, 1}));
  ASSERT_EQ(ds.train_examples.size(), 4u);
  EXPECT_EQ(ds.train_examples[0], (TrainingExample{{1}, 2}));  // session 4
}

TEST(TemporalSplit, RejectsBadFractions) {
  const auto s = numbered_sessions(10);
  EXPECT_THROW(temporal_split(s, two_items(), {0.0, 1.0}), UsageError);
  EXPECT_THROW(temporal_split(s, two_items(), {1.0, 1.0}), UsageError);
  EXPECT_THROW(temporal_split(s, two_items(), {0.1, 0.0}), UsageError);
  EXPECT_THROW(temporal_split(s, two_items(), {0.1, 1.5}), UsageError);
}

TEST(TemporalSplit, DropsTestLabelsUnseenInTraining) {
  const std::vector<Session> s = {{0, 1}, {1, 0}, {0, 2}};
  const auto ds = temporal_split(s, ItemVocabulary({"a", "b", "c"}), {0.3, 1.0});
  EXPECT_TRUE(ds.test_examples.empty());
  EXPECT_EQ(ds.stats.dropped_test_examples, 1u);
}

// Ten sessions over items A..E plus a singleton X. Supports: A 5, B 5, C 6,
// D 5, E 4, X 1, so E and X go; sessions 2 and 8 shrink to one item and go.
std::vector<KeyedSession> ten_session_fixture() {
  const std::vector<Keys> items = {{"A", "B", "C"}, {"B", "C", "D"}, {"A", "X"},
                                   {"C", "D", "E"}, {"A", "B"},      {"D", "E", "A"},
                                   {"B", "C"},      {"E", "A", "B", "C"}, {"D"},
                                   {"C", "E", "D"}};
  std::vector<KeyedSession> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.push_back(keyed("s" + std::to_string(i), items[i], static_cast<std::int64_t>(i)));
  }
  return out;
}

TEST(DatasetStats, TenSessionFixtureMatchesHandCount) {
  const auto f = filter_sessions(ten_session_fixture());
  EXPECT_EQ(f.vocab.keys(), (Keys{"A", "B", "C", "D"}));
  ASSERT_EQ(f.sessions.size(), 8u);
  const auto ds = temporal_split(f.sessions, f.vocab, {0.25, 1.0});
  DatasetStats expected;
  expected.clicks = 19;          // train 3+3+2+2+2+2, test 3+2
  expected.train_sessions = 6;
  expected.test_sessions = 2;    // ceil(0.25 * 8)
  expected.train_examples = 8;
  expected.test_examples = 3;
  expected.items = 4;
  expected.avg_length = 19.0 / 8.0;
  expected.dropped_test_examples = 0;
  EXPECT_EQ(ds.stats, expected);
}

TEST(TemporalSplit, SplitIsDisjointAndSound) {
  const auto sessions = synth_generate({.items = 30, .sessions = 300, .seed = 5});
  ItemVocabulary vocab;
  for (std::size_t i = 0; i < 30; ++i) vocab.add("i" + std::to_string(i));
  const auto ds = temporal_split(sessions, vocab, {0.1, 1.0});
  EXPECT_EQ(ds.stats.train_sessions + ds.stats.test_sessions, 300u);
  std::size_t expected_train = 0;
  for (std::size_t s = 0; s < 270; ++s) expected_train += sessions[s].size() - 1;
  EXPECT_EQ(ds.train_examples.size(), expected_train);
  for (const auto* side : {&ds.train_examples, &ds.test_examples}) {
    for (const auto& ex : *side) {
      EXPECT_LT(ex.label, 30u);
      for (const auto i : ex.prefix) EXPECT_LT(i, 30u);
    }
  }
}

TEST(Synth, SeedDeterminesCorpus) {
  std::ostringstream a, b, c;
  write_canonical_csv(a, synth_generate({.seed = 7}));
  write_canonical_csv(b, synth_generate({.seed = 7}));
  write_canonical_csv(c, synth_generate({.seed = 8}));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(Synth, RespectsShapeParameters) {
  const auto s = synth_generate({.items = 20, .sessions = 100, .min_length = 3, .max_length = 6});
  ASSERT_EQ(s.size(), 100u);
  for (const auto& x : s) {
    EXPECT_GE(x.size(), 3u);
    EXPECT_LE(x.size(), 6u);
    for (const auto i : x) EXPECT_LT(i, 20u);
  }
  EXPECT_THROW(synth_generate({.items = 1}), UsageError);
  EXPECT_THROW(synth_generate({.min_length = 5, .max_length = 4}), UsageError);
  EXPECT_THROW(synth_generate({.concentration = 0.0}), UsageError);
}

double conditional_entropy_bits(const std::vector<Session>& sessions, std::size_t items,
                                std::vector<std::set<std::size_t>>* successors = nullptr) {
  std::vector<std::map<std::size_t, double>> counts(items);
  double total = 0.0;
  for (const auto& s : sessions) {
    for (std::size_t t = 0; t + 1 < s.size(); ++t) {
      counts[s[t]][s[t + 1]] += 1.0;
      total += 1.0;
    }
  }
  double h = 0.0;
  for (std::size_t i = 0; i < items; ++i) {
    double row = 0.0;
    for (const auto& [j, c] : counts[i]) row += c;
    for (const auto& [j, c] : counts[i]) {
      h -= c / total * std::log2(c / row);
      if (successors) (*successors)[i].insert(j);
    }
  }
  return h;
}

TEST(Synth, ConcentratedChainHasLowEntropy) {
  const auto s = synth_generate({.items = 50, .sessions = 2000, .concentration = 0.04, .seed = 7});
  std::vector<std::set<std::size_t>> succ(50);
  const double h = conditional_entropy_bits(s, 50, &succ);
  for (const auto& row : succ) EXPECT_LE(row.size(), 2u);
  EXPECT_LT(h, 1.1);
  EXPECT_LT(h, 0.25 * std::log2(50.0));
}

TEST(Synth, FullConcentrationIsUniform) {
  const auto s = synth_generate({.items = 10, .sessions = 4000, .concentration = 1.0, .seed = 3});
  std::vector<std::set<std::size_t>> succ(10);
  const double h = conditional_entropy_bits(s, 10, &succ);
  for (const auto& row : succ) EXPECT_EQ(row.size(), 10u);
  EXPECT_NEAR(h, std::log2(10.0), 0.05);
}

TEST(CanonicalCsv, RoundTripsThroughLoader) {
  const auto sessions = synth_generate({.items = 12, .sessions = 40, .seed = 9});
  std::stringstream csv;
  write_canonical_csv(csv, sessions);
  const auto loaded = sessionize(load_events(csv, LogFormat::kCanonical).events);
  ASSERT_EQ(loaded.size(), sessions.size());
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    ASSERT_EQ(loaded[s].items.size(), sessions[s].size());
    for (std::size_t t = 0; t < sessions[s].size(); ++t) {
      EXPECT_EQ(loaded[s].items[t], "i" + std::to_string(sessions[s][t]));
    }
  }
}

TEST(DatasetFiles, SaveLoadRoundTrip) {
  const auto f = filter_sessions(ten_session_fixture());
  const auto ds = temporal_split(f.sessions, f.vocab, {0.25, 1.0});
  const auto dir = std::filesystem::temp_directory_path() / "fgnn_data_test";
  std::filesystem::remove_all(dir);
  save_dataset(dir, ds);
  const auto back = load_dataset(dir);
  EXPECT_EQ(back.train_examples, ds.train_examples);
  EXPECT_EQ(back.test_examples, ds.test_examples);
  EXPECT_EQ(back.vocab.keys(), ds.vocab.keys());
  EXPECT_EQ(back.stats, ds.stats);
  std::ifstream train(dir / "train.txt");
  std::string first;
  std::getline(train, first);
  EXPECT_EQ(first, "0\t1");
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_dataset(dir), DataError);
}

TEST(Vocabulary, IsABijection) {
  ItemVocabulary v;
  EXPECT_EQ(v.add("x"), 0u);
  EXPECT_EQ(v.add("y"), 1u);
  EXPECT_EQ(v.add("x"), 0u);
  EXPECT_EQ(v.index_of("y"), 1u);
  EXPECT_EQ(v.key(1), "y");
  EXPECT_FALSE(v.find("z"));
  EXPECT_THROW(v.index_of("z"), IndexError);
  EXPECT_THROW(ItemVocabulary({"a", "a"}), DataError);
}

}  // namespace
}  // namespace fgnn
