#include "fgnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "fgnn/errors.hpp"

namespace fgnn {

namespace {

constexpr std::size_t kMaxReportedLines = 10;

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename Int>
std::optional<Int> parse_int(std::string_view text) {
  Int value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

std::optional<std::int64_t> days_since_epoch(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd}.time_since_epoch().count();
}

// YYYY-MM-DD
std::optional<std::int64_t> parse_date_ms(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const auto y = parse_int<int>(text.substr(0, 4));
  const auto m = parse_int<unsigned>(text.substr(5, 2));
  const auto d = parse_int<unsigned>(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const auto days = days_since_epoch(*y, *m, *d);
  if (!days) return std::nullopt;
  return *days * 86'400'000LL;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

LogFormat parse_log_format(const std::string& name) {
  if (name == "canonical") return LogFormat::kCanonical;
  if (name == "yoochoose") return LogFormat::kYoochoose;
  if (name == "diginetica") return LogFormat::kDiginetica;
  throw UsageError("unknown input format '" + name +
                   "' (canonical|yoochoose|diginetica)");
}

std::optional<std::int64_t> parse_iso8601_ms(std::string_view text) {
  if (text.size() < 19 || text[10] != 'T' || text[13] != ':' || text[16] != ':') {
    return std::nullopt;
  }
  const auto date = parse_date_ms(text.substr(0, 10));
  const auto hh = parse_int<int>(text.substr(11, 2));
  const auto mm = parse_int<int>(text.substr(14, 2));
  const auto ss = parse_int<int>(text.substr(17, 2));
  if (!date || !hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 60) {
    return std::nullopt;
  }
  std::int64_t ms = *date + ((*hh * 60LL + *mm) * 60LL + *ss) * 1000LL;
  std::string_view rest = text.substr(19);
  if (!rest.empty() && rest.front() == '.') {
    std::size_t digits = 1;
    while (digits < rest.size() && rest[digits] >= '0' && rest[digits] <= '9') ++digits;
    const std::string_view frac = rest.substr(1, digits - 1);
    if (frac.empty()) return std::nullopt;
    // Milliseconds from the first three fractional digits.
    std::int64_t millis = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      millis = millis * 10 + (i < frac.size() ? frac[i] - '0' : 0);
    }
    ms += millis;
    rest.remove_prefix(digits);
  }
  if (rest.empty() || rest == "Z") return ms;
  if (rest.size() == 6 && (rest[0] == '+' || rest[0] == '-') && rest[3] == ':') {
    const auto oh = parse_int<int>(rest.substr(1, 2));
    const auto om = parse_int<int>(rest.substr(4, 2));
    if (!oh || !om) return std::nullopt;
    const std::int64_t offset = (*oh * 60LL + *om) * 60'000LL;
    return rest[0] == '+' ? ms - offset : ms + offset;
  }
  return std::nullopt;
}

LoadResult load_events(std::istream& source, LogFormat format) {
  LoadResult result;
  std::string buffer;
  std::size_t line_no = 0;
  const char delim = format == LogFormat::kDiginetica ? ';' : ',';
  auto skip = [&] {
    ++result.skipped_rows;
    if (result.skipped_lines.size() < kMaxReportedLines) {
      result.skipped_lines.push_back(line_no);
    }
  };
  while (std::getline(source, buffer)) {
    ++line_no;
    const std::string_view line = trim_cr(buffer);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (format == LogFormat::kCanonical && line.starts_with("session_id")) continue;
      if (format == LogFormat::kDiginetica && line.starts_with("sessionId")) continue;
    }
    const auto fields = split(line, delim);
    RawEvent ev;
    std::optional<std::int64_t> ts;
    switch (format) {
      case LogFormat::kCanonical:
        if (fields.size() != 3) break;
        ev.session_key = fields[0];
        ev.item_key = fields[2];
        ts = parse_int<std::int64_t>(fields[1]);
        break;
      case LogFormat::kYoochoose:
        if (fields.size() != 4) break;
        ev.session_key = fields[0];
        ev.item_key = fields[2];
        ts = parse_iso8601_ms(fields[1]);
        break;
      case LogFormat::kDiginetica: {
        if (fields.size() != 5) break;
        ev.session_key = fields[0];
        ev.item_key = fields[2];
        const auto frame = parse_int<std::int64_t>(fields[3]);
        const auto date = parse_date_ms(fields[4]);
        if (frame && date) ts = *date + *frame;
        break;
      }
    }
    if (!ts || *ts < 0 || ev.session_key.empty() || ev.item_key.empty()) {
      skip();
      continue;
    }
    ev.timestamp_ms = *ts;
    result.events.push_back(std::move(ev));
  }
  if (result.events.empty()) {
    throw DataError("input contains no parsable event rows (" +
                    std::to_string(result.skipped_rows) + " rows skipped)");
  }
  return result;
}

std::vector<KeyedSession> sessionize(std::span<const RawEvent> events) {
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<std::vector<const RawEvent*>> groups;
  for (const auto& ev : events) {
    auto [it, inserted] = group_of.try_emplace(ev.session_key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(&ev);
  }
  std::vector<KeyedSession> sessions;
  sessions.reserve(groups.size());
  for (auto& group : groups) {
    std::stable_sort(group.begin(), group.end(),
                     [](const RawEvent* a, const RawEvent* b) {
                       return a->timestamp_ms < b->timestamp_ms;
                     });
    KeyedSession s;
    s.key = group.front()->session_key;
    s.last_timestamp = group.back()->timestamp_ms;
    s.items.reserve(group.size());
    for (const auto* ev : group) s.items.push_back(ev->item_key);
    sessions.push_back(std::move(s));
  }
  std::stable_sort(sessions.begin(), sessions.end(),
                   [](const KeyedSession& a, const KeyedSession& b) {
                     return a.last_timestamp < b.last_timestamp;
                   });
  return sessions;
}

ItemVocabulary::ItemVocabulary(std::vector<std::string> keys) {
  for (auto& k : keys) {
    if (index_.count(k)) throw DataError("duplicate vocabulary key '" + k + "'");
    add(k);
  }
}

std::size_t ItemVocabulary::add(const std::string& key) {
  auto [it, inserted] = index_.try_emplace(key, keys_.size());
  if (inserted) keys_.push_back(key);
  return it->second;
}

std::optional<std::size_t> ItemVocabulary::find(const std::string& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ItemVocabulary::index_of(const std::string& key) const {
  const auto idx = find(key);
  if (!idx) throw IndexError("item '" + key + "' not in vocabulary");
  return *idx;
}

const std::string& ItemVocabulary::key(std::size_t index) const {
  if (index >= keys_.size()) {
    throw IndexError("item index " + std::to_string(index) + " out of range for " +
                     std::to_string(keys_.size()) + " items");
  }
  return keys_[index];
}

FilterResult filter_sessions(std::span<const KeyedSession> sessions,
                             std::size_t min_item_support,
                             std::size_t min_session_len) {
  std::unordered_map<std::string, std::size_t> support;
  for (const auto& s : sessions) {
    for (const auto& item : s.items) ++support[item];
  }
  FilterResult result;
  for (const auto& s : sessions) {
    std::vector<const std::string*> kept;
    for (const auto& item : s.items) {
      if (support[item] >= min_item_support) kept.push_back(&item);
    }
    if (kept.size() < min_session_len || kept.empty()) continue;
    Session session;
    session.reserve(kept.size());
    for (const auto* item : kept) session.push_back(result.vocab.add(*item));
    result.sessions.push_back(std::move(session));
  }
  if (result.sessions.empty()) {
    throw DataError("filtering removed every session (min item support " +
                    std::to_string(min_item_support) + ", min session length " +
                    std::to_string(min_session_len) + ")");
  }
  return result;
}

std::vector<TrainingExample> augment(std::span<const std::size_t> session) {
  if (session.size() < 2) {
    throw ContractError("augment needs a session of length >= 2, got " +
                        std::to_string(session.size()));
  }
  std::vector<TrainingExample> out;
  out.reserve(session.size() - 1);
  for (std::size_t i = 1; i < session.size(); ++i) {
    out.push_back(TrainingExample{
        std::vector<std::size_t>(session.begin(), session.begin() + i), session[i]});
  }
  return out;
}

namespace {

std::size_t ceil_fraction(double fraction, std::size_t n) {
  // Guards against 0.1 * 100 rounding up to 11.
  const double exact = fraction * static_cast<double>(n);
  return static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
}

}  // namespace

Dataset temporal_split(std::span<const Session> sessions, ItemVocabulary vocab,
                       SplitParams params) {
  if (!(params.test_fraction > 0.0 && params.test_fraction < 1.0)) {
    throw UsageError("test fraction must lie in (0, 1), got " +
                     std::to_string(params.test_fraction));
  }
  if (!(params.train_recency_fraction > 0.0 && params.train_recency_fraction <= 1.0)) {
    throw UsageError("train recency fraction must lie in (0, 1], got " +
                     std::to_string(params.train_recency_fraction));
  }
  const std::size_t n = sessions.size();
  const std::size_t n_test = std::min(n, ceil_fraction(params.test_fraction, n));
  const std::size_t n_rest = n - n_test;
  const std::size_t n_train =
      std::min(n_rest, ceil_fraction(params.train_recency_fraction, n_rest));
  if (n_train == 0) {
    throw DataError("temporal split leaves no training sessions (" +
                    std::to_string(n) + " sessions in total)");
  }

  Dataset ds;
  ds.vocab = std::move(vocab);
  std::vector<char> in_train(ds.vocab.size(), 0);
  std::size_t clicks = 0;
  for (std::size_t s = n_rest - n_train; s < n_rest; ++s) {
    for (const auto item : sessions[s]) {
      if (item >= ds.vocab.size()) {
        throw IndexError("session item " + std::to_string(item) +
                         " outside vocabulary of " + std::to_string(ds.vocab.size()));
      }
      in_train[item] = 1;
    }
    clicks += sessions[s].size();
    auto examples = augment(sessions[s]);
    ds.train_examples.insert(ds.train_examples.end(),
                             std::make_move_iterator(examples.begin()),
                             std::make_move_iterator(examples.end()));
  }
  for (std::size_t s = n_rest; s < n; ++s) {
    clicks += sessions[s].size();
    for (auto& ex : augment(sessions[s])) {
      if (ex.label >= ds.vocab.size() || !in_train[ex.label]) {
        ++ds.stats.dropped_test_examples;
        continue;
      }
      ds.test_examples.push_back(std::move(ex));
    }
  }
  ds.stats.clicks = clicks;
  ds.stats.train_sessions = n_train;
  ds.stats.test_sessions = n_test;
  ds.stats.train_examples = ds.train_examples.size();
  ds.stats.test_examples = ds.test_examples.size();
  ds.stats.items = ds.vocab.size();
  ds.stats.avg_length =
      static_cast<double>(clicks) / static_cast<double>(n_train + n_test);
  return ds;
}

std::vector<Session> synth_generate(const SynthParams& p) {
  if (p.items < 2) throw UsageError("synthetic corpus needs at least 2 items");
  if (p.sessions == 0) throw UsageError("synthetic corpus needs at least 1 session");
  if (p.min_length == 0 || p.min_length > p.max_length) {
    throw UsageError("invalid session length range [" + std::to_string(p.min_length) +
                     ", " + std::to_string(p.max_length) + "]");
  }
  if (!(p.concentration > 0.0 && p.concentration <= 1.0)) {
    throw UsageError("transition concentration must lie in (0, 1]");
  }
  std::mt19937_64 rng(p.seed);
  const std::size_t fanout = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(p.concentration * static_cast<double>(p.items) - 1e-9)),
      1, p.items);

  std::vector<std::vector<std::size_t>> successors(p.items);
  std::vector<std::size_t> pool(p.items);
  for (auto& row : successors) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < fanout; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, p.items - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    row.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(fanout));
  }

  std::uniform_int_distribution<std::size_t> start(0, p.items - 1);
  std::uniform_int_distribution<std::size_t> length(p.min_length, p.max_length);
  std::uniform_int_distribution<std::size_t> next(0, fanout - 1);
  std::vector<Session> out(p.sessions);
  for (auto& session : out) {
    const std::size_t len = length(rng);
    session.reserve(len);
    session.push_back(start(rng));
    while (session.size() < len) session.push_back(successors[session.back()][next(rng)]);
  }
  return out;
}

void write_canonical_csv(std::ostream& out, std::span<const Session> sessions) {
  constexpr std::int64_t kBase = 1'400'000'000'000LL;
  constexpr std::int64_t kSessionGap = 3'600'000LL;
  out << "session_id,timestamp_ms,item_id\n";
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (std::size_t t = 0; t < sessions[s].size(); ++t) {
      out << 's' << s << ','
          << kBase + static_cast<std::int64_t>(s) * kSessionGap +
                 static_cast<std::int64_t>(t) * 1000
          << ",i" << sessions[s][t] << '\n';
    }
  }
}

namespace {

void write_examples(const std::filesystem::path& path,
                    std::span<const TrainingExample> examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& ex : examples) {
    for (std::size_t i = 0; i < ex.prefix.size(); ++i) {
      if (i) out << ' ';
      out << ex.prefix[i];
    }
    out << '\t' << ex.label << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<TrainingExample> read_examples(const std::filesystem::path& path,
                                           std::size_t vocab_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<TrainingExample> out;
  std::string buffer;
  std::size_t line_no = 0;
  while (std::getline(in, buffer)) {
    ++line_no;
    const std::string_view line = trim_cr(buffer);
    if (line.empty()) continue;
    const auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw DataError(where() + ": missing TAB");
    TrainingExample ex;
    for (const auto tok : split(line.substr(0, tab), ' ')) {
      const auto v = parse_int<std::size_t>(tok);
      if (!v || *v >= vocab_size) throw DataError(where() + ": bad prefix item");
      ex.prefix.push_back(*v);
    }
    const auto label = parse_int<std::size_t>(line.substr(tab + 1));
    if (!label || *label >= vocab_size) throw DataError(where() + ": bad label");
    ex.label = *label;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["vocab"] = ds.vocab.keys();
  manifest["stats"] = {
      {"clicks", ds.stats.clicks},
      {"train_sessions", ds.stats.train_sessions},
      {"test_sessions", ds.stats.test_sessions},
      {"train_examples", ds.stats.train_examples},
      {"test_examples", ds.stats.test_examples},
      {"items", ds.stats.items},
      {"avg_length", ds.stats.avg_length},
      {"dropped_test_examples", ds.stats.dropped_test_examples},
  };
  manifest["split"] = {{"train_examples", ds.train_examples.size()},
                       {"test_examples", ds.test_examples.size()}};
  {
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
  }
  write_examples(dir / "train.txt", ds.train_examples);
  write_examples(dir / "test.txt", ds.test_examples);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw DataError("cannot read " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  Dataset ds;
  try {
    ds.vocab = ItemVocabulary(manifest.at("vocab").get<std::vector<std::string>>());
    const auto& st = manifest.at("stats");
    ds.stats.clicks = st.at("clicks").get<std::size_t>();
    ds.stats.train_sessions = st.at("train_sessions").get<std::size_t>();
    ds.stats.test_sessions = st.at("test_sessions").get<std::size_t>();
    ds.stats.train_examples = st.at("train_examples").get<std::size_t>();
    ds.stats.test_examples = st.at("test_examples").get<std::size_t>();
    ds.stats.items = st.at("items").get<std::size_t>();
    ds.stats.avg_length = st.at("avg_length").get<double>();
    ds.stats.dropped_test_examples = st.at("dropped_test_examples").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  ds.train_examples = read_examples(dir / "train.txt", ds.vocab.size());
  ds.test_examples = read_examples(dir / "test.txt", ds.vocab.size());
  if (ds.train_examples.size() != ds.stats.train_examples ||
      ds.test_examples.size() != ds.stats.test_examples) {
    throw DataError(dir.string() + ": example files disagree with manifest counts");
  }
  return ds;
}

}  // namespace fgnn
