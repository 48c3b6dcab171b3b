#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fgnn {

struct RawEvent {
  std::string session_key;
  std::int64_t timestamp_ms = 0;
  std::string item_key;

  bool operator==(const RawEvent&) const = default;
};

enum class LogFormat { kCanonical, kYoochoose, kDiginetica };

LogFormat parse_log_format(const std::string& name);

struct LoadResult {
  std::vector<RawEvent> events;
  std::size_t skipped_rows = 0;
  // 1-based line numbers of the first few skipped rows.
  std::vector<std::size_t> skipped_lines;
};

// Canonical:  header "session_id,timestamp_ms,item_id".
// Yoochoose:  headerless "session_id,ISO-8601 timestamp,item_id,category".
// Diginetica: ';'-separated with header
//             "sessionId;userId;itemId;timeframe;eventdate"; the timestamp is
//             midnight UTC of eventdate plus timeframe milliseconds.
// Rows with unparsable fields are skipped and counted. Throws DataError when
// no row parses.
LoadResult load_events(std::istream& source, LogFormat format);

// Milliseconds since the Unix epoch for "YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM]".
std::optional<std::int64_t> parse_iso8601_ms(std::string_view text);

struct KeyedSession {
  std::string key;
  std::vector<std::string> items;
  std::int64_t last_timestamp = 0;
};

// Groups events by session key, orders each group by timestamp (stable with
// respect to input order) and orders groups by their last timestamp, oldest
// first. Groups with equal last timestamps keep first-appearance order.
std::vector<KeyedSession> sessionize(std::span<const RawEvent> events);

class ItemVocabulary {
 public:
  ItemVocabulary() = default;
  explicit ItemVocabulary(std::vector<std::string> keys);

  std::size_t size() const { return keys_.size(); }
  std::size_t add(const std::string& key);
  std::optional<std::size_t> find(const std::string& key) const;
  std::size_t index_of(const std::string& key) const;
  const std::string& key(std::size_t index) const;
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::size_t> index_;
};

using Session = std::vector<std::size_t>;

struct FilterResult {
  std::vector<Session> sessions;
  ItemVocabulary vocab;
};

// Pass 1 removes items occurring fewer than `min_item_support` times over all
// sessions; pass 2 drops sessions left with fewer than `min_session_len`
// items. The vocabulary indexes surviving items by first appearance.
FilterResult filter_sessions(std::span<const KeyedSession> sessions,
                             std::size_t min_item_support = 5,
                             std::size_t min_session_len = 2);

struct TrainingExample {
  std::vector<std::size_t> prefix;
  std::size_t label = 0;

  bool operator==(const TrainingExample&) const = default;
};

// n - 1 examples for a session of length n: prefix = first i - 1 items,
// label = item i, for i = 2..n.
std::vector<TrainingExample> augment(std::span<const std::size_t> session);

struct DatasetStats {
  std::size_t clicks = 0;
  std::size_t train_sessions = 0;
  std::size_t test_sessions = 0;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;
  std::size_t items = 0;
  double avg_length = 0.0;
  std::size_t dropped_test_examples = 0;

  bool operator==(const DatasetStats&) const = default;
};

struct Dataset {
  std::vector<TrainingExample> train_examples;
  std::vector<TrainingExample> test_examples;
  ItemVocabulary vocab;
  DatasetStats stats;
};

struct SplitParams {
  double test_fraction = 0.1;
  double train_recency_fraction = 1.0;
};

// `sessions` must be ordered oldest first. The newest ceil(test_fraction * N)
// sessions form the test side; of the rest, the newest
// ceil(train_recency_fraction * N_rest) form the training side. Test examples
// whose label never occurs in training sessions are dropped and counted.
Dataset temporal_split(std::span<const Session> sessions, ItemVocabulary vocab,
                       SplitParams params);

struct SynthParams {
  std::size_t items = 50;
  std::size_t sessions = 2000;
  std::size_t min_length = 2;
  std::size_t max_length = 10;
  double concentration = 0.04;
  std::uint64_t seed = 7;
};

// Sessions sampled from a random first-order Markov chain in which every item
// moves to one of ceil(concentration * items) successors with equal
// probability. Start items and lengths are uniform.
std::vector<Session> synth_generate(const SynthParams& params);

// Canonical CSV with keys "s<session>" / "i<item>" and strictly increasing
// timestamps in session order.
void write_canonical_csv(std::ostream& out, std::span<const Session> sessions);

// Directory layout: manifest.json (vocab, stats, split sizes) plus train.txt
// and test.txt with one "prefix items<TAB>label" line per example.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace fgnn
