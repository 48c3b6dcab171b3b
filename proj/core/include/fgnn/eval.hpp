#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fgnn/data.hpp"
#include "fgnn/model.hpp"

namespace fgnn {

// Fraction of cases whose label appears in the first k entries of its
// ranking. Throws UsageError on empty or mismatched input.
double recall_at_k(std::span<const std::vector<std::size_t>> rankings,
                   std::span<const std::size_t> labels, std::size_t k);

// Mean of 1 / rank(label) over cases, counting 0 when the label is not within
// the first k entries.
double mrr_at_k(std::span<const std::vector<std::size_t>> rankings,
                std::span<const std::size_t> labels, std::size_t k);

class Ranker {
 public:
  virtual ~Ranker() = default;
  virtual std::string name() const = 0;
  virtual std::size_t item_count() const = 0;
  // The k best items for the session prefix, best first.
  virtual std::vector<std::size_t> rank(std::span<const std::size_t> prefix,
                                        std::size_t k) const = 0;
};

// Recovers whole sessions from augmented examples: an example continues the
// current session when its prefix equals the previous prefix plus label.
std::vector<Session> sessions_from_examples(std::span<const TrainingExample> examples);

class PopRanker : public Ranker {
 public:
  PopRanker(std::span<const Session> train, std::size_t item_count);
  std::string name() const override { return "POP"; }
  std::size_t item_count() const override { return order_.size(); }
  std::vector<std::size_t> rank(std::span<const std::size_t> prefix,
                                std::size_t k) const override;

  const std::vector<std::size_t>& counts() const { return counts_; }
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> order_;
};

// Items of the prefix by within-prefix frequency (then global popularity),
// backfilled with the global popularity order.
class SPopRanker : public Ranker {
 public:
  SPopRanker(std::span<const Session> train, std::size_t item_count);
  std::string name() const override { return "S-POP"; }
  std::size_t item_count() const override { return pop_.item_count(); }
  std::vector<std::size_t> rank(std::span<const std::size_t> prefix,
                                std::size_t k) const override;

 private:
  PopRanker pop_;
};

// Session co-occurrence cosine:
// sim(i, j) = cooc(i, j) / (sqrt(supp(i)) sqrt(supp(j)) + lambda), i != j.
// A prefix scores candidate c by summing sim(p, c) over its positions p.
class ItemKnnRanker : public Ranker {
 public:
  ItemKnnRanker(std::span<const Session> train, std::size_t item_count,
                double lambda = 20.0, bool exclude_seen = false);
  std::string name() const override { return "Item-KNN"; }
  std::size_t item_count() const override { return neighbors_.size(); }
  std::vector<std::size_t> rank(std::span<const std::size_t> prefix,
                                std::size_t k) const override;

  double similarity(std::size_t i, std::size_t j) const;
  std::vector<double> scores(std::span<const std::size_t> prefix) const;

 private:
  struct Neighbor {
    std::size_t item;
    double sim;
  };
  std::vector<std::vector<Neighbor>> neighbors_;
  bool exclude_seen_;
};

class ModelRanker : public Ranker {
 public:
  explicit ModelRanker(const ModelParams& params, std::string name = "FGNN")
      : params_(params), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::size_t item_count() const override { return params_.config.item_count; }
  std::vector<std::size_t> rank(std::span<const std::size_t> prefix,
                                std::size_t k) const override;

 private:
  const ModelParams& params_;
  std::string name_;
};

struct MetricRow {
  std::size_t k = 0;
  double recall = 0.0;
  double mrr = 0.0;
};

struct EvalReport {
  std::string method;
  std::vector<MetricRow> rows;
  std::size_t n_test = 0;
};

inline const std::vector<std::size_t> kDefaultKs = {5, 10, 20};

EvalReport evaluate(const Ranker& ranker, std::span<const TrainingExample> test,
                    const std::vector<std::size_t>& ks = kDefaultKs);

// One JSON object per K: {"method", "K", "recall", "mrr", "n_test"}.
std::string to_jsonl(const EvalReport& report);

// Aligned text table with R@K and MRR@K columns, one row per report.
std::string format_table(std::span<const EvalReport> reports);

// Partitions examples by prefix length: <= threshold (short) and > threshold.
std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>>
split_by_length(std::span<const TrainingExample> examples, std::size_t threshold = 5);

}  // namespace fgnn
