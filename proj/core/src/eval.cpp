#include "fgnn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fgnn/errors.hpp"

namespace fgnn {

namespace {

void check_inputs(std::span<const std::vector<std::size_t>> rankings,
                  std::span<const std::size_t> labels, std::size_t k) {
  if (rankings.empty()) throw UsageError("metrics need at least one test case");
  if (rankings.size() != labels.size()) {
    throw UsageError("metrics got " + std::to_string(rankings.size()) +
                     " rankings but " + std::to_string(labels.size()) + " labels");
  }
  if (k == 0) throw UsageError("metric cutoff K must be positive");
}

// 1-based position of label within the first k entries, 0 if absent.
std::size_t rank_within(const std::vector<std::size_t>& ranking, std::size_t label,
                        std::size_t k) {
  const std::size_t limit = std::min(k, ranking.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (ranking[i] == label) return i + 1;
  }
  return 0;
}

}  // namespace

double recall_at_k(std::span<const std::vector<std::size_t>> rankings,
                   std::span<const std::size_t> labels, std::size_t k) {
  check_inputs(rankings, labels, k);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    if (rank_within(rankings[i], labels[i], k) != 0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double mrr_at_k(std::span<const std::vector<std::size_t>> rankings,
                std::span<const std::size_t> labels, std::size_t k) {
  check_inputs(rankings, labels, k);
  double total = 0.0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const std::size_t r = rank_within(rankings[i], labels[i], k);
    if (r != 0) total += 1.0 / static_cast<double>(r);
  }
  return total / static_cast<double>(rankings.size());
}

std::vector<Session> sessions_from_examples(std::span<const TrainingExample> examples) {
  std::vector<Session> sessions;
  const TrainingExample* prev = nullptr;
  for (const auto& ex : examples) {
    const bool continues = prev != nullptr &&
                           ex.prefix.size() == prev->prefix.size() + 1 &&
                           std::equal(prev->prefix.begin(), prev->prefix.end(),
                                      ex.prefix.begin()) &&
                           ex.prefix.back() == prev->label;
    if (!continues) sessions.emplace_back();
    sessions.back() = ex.prefix;
    sessions.back().push_back(ex.label);
    prev = &ex;
  }
  return sessions;
}

// ---------------------------------------------------------------------------

PopRanker::PopRanker(std::span<const Session> train, std::size_t item_count)
    : counts_(item_count, 0), order_(item_count) {
  for (const auto& s : train) {
    for (const auto item : s) {
      if (item >= item_count) {
        throw IndexError("training item " + std::to_string(item) +
                         " outside vocabulary of " + std::to_string(item_count));
      }
      ++counts_[item];
    }
  }
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(), [this](std::size_t a, std::size_t b) {
    return counts_[a] > counts_[b];
  });
}

std::vector<std::size_t> PopRanker::rank(std::span<const std::size_t>,
                                         std::size_t k) const {
  const std::size_t n = std::min(k, order_.size());
  return {order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(n)};
}

SPopRanker::SPopRanker(std::span<const Session> train, std::size_t item_count)
    : pop_(train, item_count) {}

std::vector<std::size_t> SPopRanker::rank(std::span<const std::size_t> prefix,
                                          std::size_t k) const {
  std::map<std::size_t, std::size_t> local;
  for (const auto item : prefix) ++local[item];
  std::vector<std::size_t> seen;
  seen.reserve(local.size());
  for (const auto& [item, count] : local) seen.push_back(item);
  const auto& global = pop_.counts();
  std::stable_sort(seen.begin(), seen.end(), [&](std::size_t a, std::size_t b) {
    if (local[a] != local[b]) return local[a] > local[b];
    return global[a] > global[b];
  });
  std::vector<std::size_t> out;
  const std::size_t n = std::min(k, item_count());
  for (const auto item : seen) {
    if (out.size() == n) return out;
    out.push_back(item);
  }
  for (const auto item : pop_.order()) {
    if (out.size() == n) break;
    if (!local.count(item)) out.push_back(item);
  }
  return out;
}

ItemKnnRanker::ItemKnnRanker(std::span<const Session> train, std::size_t item_count,
                             double lambda, bool exclude_seen)
    : neighbors_(item_count), exclude_seen_(exclude_seen) {
  std::vector<double> support(item_count, 0.0);
  std::map<std::pair<std::size_t, std::size_t>, double> cooc;
  for (const auto& s : train) {
    std::vector<std::size_t> items(s.begin(), s.end());
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    for (std::size_t a = 0; a < items.size(); ++a) {
      if (items[a] >= item_count) {
        throw IndexError("training item " + std::to_string(items[a]) +
                         " outside vocabulary of " + std::to_string(item_count));
      }
      support[items[a]] += 1.0;
      for (std::size_t b = a + 1; b < items.size(); ++b) {
        cooc[{items[a], items[b]}] += 1.0;
      }
    }
  }
  for (const auto& [pair, count] : cooc) {
    const auto [i, j] = pair;
    const double sim = count / (std::sqrt(support[i]) * std::sqrt(support[j]) + lambda);
    neighbors_[i].push_back({j, sim});
    neighbors_[j].push_back({i, sim});
  }
  for (auto& row : neighbors_) {
    std::sort(row.begin(), row.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.item < b.item; });
  }
}

double ItemKnnRanker::similarity(std::size_t i, std::size_t j) const {
  if (i >= neighbors_.size() || j >= neighbors_.size()) {
    throw IndexError("item pair (" + std::to_string(i) + ", " + std::to_string(j) +
                     ") outside vocabulary");
  }
  const auto& row = neighbors_[i];
  const auto it = std::lower_bound(row.begin(), row.end(), j,
                                   [](const Neighbor& n, std::size_t v) { return n.item < v; });
  return it != row.end() && it->item == j ? it->sim : 0.0;
}

std::vector<double> ItemKnnRanker::scores(std::span<const std::size_t> prefix) const {
  std::vector<double> out(neighbors_.size(), 0.0);
  for (const auto p : prefix) {
    if (p >= neighbors_.size()) {
      throw IndexError("prefix item " + std::to_string(p) + " outside vocabulary");
    }
    for (const auto& n : neighbors_[p]) out[n.item] += n.sim;
  }
  if (exclude_seen_) {
    for (const auto p : prefix) out[p] = -std::numeric_limits<double>::infinity();
  }
  return out;
}

std::vector<std::size_t> ItemKnnRanker::rank(std::span<const std::size_t> prefix,
                                             std::size_t k) const {
  const auto s = scores(prefix);
  return predict_topk(s, std::min(k, s.size()));
}

std::vector<std::size_t> ModelRanker::rank(std::span<const std::size_t> prefix,
                                           std::size_t k) const {
  const auto graph = build_graph(params_.config, prefix);
  return forward(params_, graph, std::min(k, item_count())).topk;
}

// ---------------------------------------------------------------------------

EvalReport evaluate(const Ranker& ranker, std::span<const TrainingExample> test,
                    const std::vector<std::size_t>& ks) {
  if (test.empty()) throw UsageError("evaluation needs a non-empty test split");
  if (ks.empty()) throw UsageError("evaluation needs at least one cutoff K");
  const std::size_t max_k = *std::max_element(ks.begin(), ks.end());
  std::vector<std::vector<std::size_t>> rankings;
  std::vector<std::size_t> labels;
  rankings.reserve(test.size());
  labels.reserve(test.size());
  for (const auto& ex : test) {
    rankings.push_back(ranker.rank(ex.prefix, std::min(max_k, ranker.item_count())));
    labels.push_back(ex.label);
  }
  EvalReport report;
  report.method = ranker.name();
  report.n_test = test.size();
  for (const auto k : ks) {
    report.rows.push_back(
        MetricRow{k, recall_at_k(rankings, labels, k), mrr_at_k(rankings, labels, k)});
  }
  return report;
}

std::string to_jsonl(const EvalReport& report) {
  std::string out;
  for (const auto& row : report.rows) {
    nlohmann::ordered_json line;
    line["method"] = report.method;
    line["K"] = row.k;
    line["recall"] = row.recall;
    line["mrr"] = row.mrr;
    line["n_test"] = report.n_test;
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::string format_table(std::span<const EvalReport> reports) {
  if (reports.empty()) return {};
  std::size_t name_width = 6;
  for (const auto& r : reports) name_width = std::max(name_width, r.method.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "method";
  for (const auto& row : reports.front().rows) {
    out << "  " << std::right << std::setw(8) << ("R@" + std::to_string(row.k));
  }
  for (const auto& row : reports.front().rows) {
    out << "  " << std::right << std::setw(8) << ("MRR@" + std::to_string(row.k));
  }
  out << "  " << std::right << std::setw(7) << "n_test" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& r : reports) {
    out << std::left << std::setw(static_cast<int>(name_width)) << r.method;
    for (const auto& row : r.rows) out << "  " << std::right << std::setw(8) << row.recall;
    for (const auto& row : r.rows) out << "  " << std::right << std::setw(8) << row.mrr;
    out << "  " << std::right << std::setw(7) << r.n_test << '\n';
  }
  return out.str();
}

std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>>
split_by_length(std::span<const TrainingExample> examples, std::size_t threshold) {
  std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>> out;
  for (const auto& ex : examples) {
    (ex.prefix.size() <= threshold ? out.first : out.second).push_back(ex);
  }
  return out;
}

}  // namespace fgnn
