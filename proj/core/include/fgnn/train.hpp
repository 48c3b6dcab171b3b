#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fgnn/data.hpp"
#include "fgnn/model.hpp"

namespace fgnn {

enum class Schedule { kStep, kLinear };

Schedule parse_schedule(const std::string& name);
std::string to_string(Schedule schedule);

struct TrainingConfig {
  // Optimizer.
  double lr = 1e-3;
  double decay_factor = 0.1;
  std::size_t decay_every_epochs = 3;
  Schedule schedule = Schedule::kStep;
  double l2 = 1e-5;
  std::size_t batch_size = 100;
  std::size_t epochs = 10;
  std::uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double init_stddev = 0.1;

  // Architecture.
  std::size_t dim = 100;
  std::size_t layers = 3;
  std::size_t heads = 8;
  std::size_t steps = 3;
  HeadCombine combine = HeadCombine::kMean;
  ReadoutKind readout = ReadoutKind::kSet2Set;
  EdgeWeightNorm edge_weight_norm = EdgeWeightNorm::kNone;
  bool selfloop_clamp = false;

  // Throws UsageError naming the first offending field.
  void validate() const;
  ModelConfig model_config(std::size_t item_count) const;
};

ModelParams init_model(const TrainingConfig& config, std::size_t vocab_size,
                       Rng& rng);

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
};

AdamState make_adam_state(std::span<const NamedTensor> params);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam with l2 * theta added to every gradient before the
// moment updates. Throws ContractError when a parameter has no gradient.
void adam_step(std::span<NamedTensor> params, AdamState& state, double lr,
               double l2, AdamOptions options = {});

// Learning rate used during `epoch` (0-based).
double lr_schedule(std::size_t epoch, const TrainingConfig& config);

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean per-example loss over the epoch
  std::size_t steps = 0;
  std::optional<double> test_recall;
  std::optional<double> test_mrr;
};

struct TrainOptions {
  // Evaluate R@eval_k / MRR@eval_k on the test split after every epoch.
  bool evaluate_each_epoch = false;
  std::size_t eval_k = 20;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  ModelParams params;
  AdamState adam;
  std::vector<EpochLog> log;
};

TrainResult train(const TrainingConfig& config, const Dataset& dataset,
                  const TrainOptions& options = {});

// Continues training an existing model for config.epochs epochs.
TrainResult train_from(const TrainingConfig& config, const Dataset& dataset,
                       ModelParams params, const TrainOptions& options = {});

// Sum of per-example losses over one batch, with gradients accumulated into
// the parameters.
double accumulate_batch_gradients(const ModelParams& params,
                                  std::span<const TrainingExample> batch);

}  // namespace fgnn
