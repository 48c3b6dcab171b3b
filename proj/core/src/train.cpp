#include "fgnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fgnn/errors.hpp"
#include "fgnn/eval.hpp"

namespace fgnn {

Schedule parse_schedule(const std::string& name) {
  if (name == "step") return Schedule::kStep;
  if (name == "linear") return Schedule::kLinear;
  throw UsageError("unknown schedule '" + name + "' (step|linear)");
}

std::string to_string(Schedule schedule) {
  return schedule == Schedule::kStep ? "step" : "linear";
}

void TrainingConfig::validate() const {
  const auto positive = [](double v, const char* key) {
    if (!(v > 0.0)) throw UsageError(std::string("config key '") + key + "' must be positive");
  };
  const auto nonzero = [](std::size_t v, const char* key) {
    if (v == 0) throw UsageError(std::string("config key '") + key + "' must be positive");
  };
  positive(lr, "lr");
  positive(decay_factor, "decay_factor");
  nonzero(decay_every_epochs, "decay_every_epochs");
  if (l2 < 0.0) throw UsageError("config key 'l2' must be non-negative");
  nonzero(batch_size, "batch_size");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw UsageError("config key 'beta1' must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw UsageError("config key 'beta2' must lie in [0, 1)");
  positive(eps, "eps");
  if (init_stddev < 0.0) throw UsageError("config key 'init_stddev' must be non-negative");
  nonzero(dim, "dim");
  nonzero(layers, "layers");
  nonzero(heads, "heads");
  nonzero(steps, "steps");
}

ModelConfig TrainingConfig::model_config(std::size_t item_count) const {
  ModelConfig mc;
  mc.item_count = item_count;
  mc.dim = dim;
  mc.layers = layers;
  mc.heads = heads;
  mc.readout_steps = steps;
  mc.combine = combine;
  mc.readout = readout;
  mc.edge_weight_norm = edge_weight_norm;
  mc.selfloop_clamp = selfloop_clamp;
  return mc;
}

ModelParams init_model(const TrainingConfig& config, std::size_t vocab_size,
                       Rng& rng) {
  if (vocab_size == 0) throw UsageError("cannot initialize a model over zero items");
  config.validate();
  return make_model(config.model_config(vocab_size), config.init_stddev, rng);
}

AdamState make_adam_state(std::span<const NamedTensor> params) {
  AdamState s;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p.tensor.size(), 0.0);
    s.second_moment.emplace_back(p.tensor.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<NamedTensor> params, AdamState& state, double lr,
               double l2, AdamOptions options) {
  if (state.first_moment.size() != params.size()) {
    throw ContractError("Adam state tracks " + std::to_string(state.first_moment.size()) +
                        " tensors but " + std::to_string(params.size()) + " were given");
  }
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) {
      throw ContractError("parameter '" + p.name + "' has no gradient");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(options.beta1, t);
  const double bias2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& tensor = params[k].tensor;
    auto theta = tensor.mutable_values();
    const auto grad = tensor.grad();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad[i] + l2 * theta[i];
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g;
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
  }
}

double lr_schedule(std::size_t epoch, const TrainingConfig& config) {
  const std::size_t stage = epoch / config.decay_every_epochs;
  const double at_stage = config.lr * std::pow(config.decay_factor, static_cast<double>(stage));
  if (config.schedule == Schedule::kStep) return at_stage;
  const double next = at_stage * config.decay_factor;
  const double frac = static_cast<double>(epoch % config.decay_every_epochs) /
                      static_cast<double>(config.decay_every_epochs);
  return at_stage + (next - at_stage) * frac;
}

double accumulate_batch_gradients(const ModelParams& params,
                                  std::span<const TrainingExample> batch) {
  double total = 0.0;
  for (const auto& ex : batch) {
    ad::Tape tape;
    const auto graph = build_graph(params.config, ex.prefix);
    const auto logits = score_items(tape, params, graph);
    const auto l = loss(tape, logits, ex.label);
    tape.backward(l);
    total += l.item();
  }
  return total;
}

TrainResult train(const TrainingConfig& config, const Dataset& dataset,
                  const TrainOptions& options) {
  config.validate();
  Rng init_rng(config.seed);
  return train_from(config, dataset, init_model(config, dataset.vocab.size(), init_rng),
                    options);
}

TrainResult train_from(const TrainingConfig& config, const Dataset& dataset,
                       ModelParams params, const TrainOptions& options) {
  config.validate();
  if (dataset.train_examples.empty()) {
    throw UsageError("training split is empty");
  }
  TrainResult result;
  result.params = std::move(params);
  auto named = result.params.parameters();
  result.adam = make_adam_state(named);

  Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(dataset.train_examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<TrainingExample> batch;
  const AdamOptions adam{config.beta1, config.beta2, config.eps};

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochLog log;
    log.epoch = epoch;
    log.lr = lr_schedule(epoch, config);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(dataset.train_examples[order[i]]);
      }
      for (auto& p : named) p.tensor.zero_grad();
      epoch_loss += accumulate_batch_gradients(result.params, batch);
      adam_step(named, result.adam, log.lr, config.l2, adam);
      ++log.steps;
    }
    log.train_loss = epoch_loss / static_cast<double>(order.size());
    if (options.evaluate_each_epoch && !dataset.test_examples.empty()) {
      const ModelRanker ranker(result.params);
      const auto report = evaluate(ranker, dataset.test_examples, {options.eval_k});
      log.test_recall = report.rows.front().recall;
      log.test_mrr = report.rows.front().mrr;
    }
    if (options.on_epoch) options.on_epoch(log);
    result.log.push_back(log);
  }
  return result;
}

}  // namespace fgnn
