#include "fgnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace fgnn {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport check_gradients(const std::function<ad::Tensor(ad::Tape&)>& loss_fn,
                                std::span<const NamedTensor> inputs, double h) {
  std::vector<NamedTensor> tensors(inputs.begin(), inputs.end());
  for (auto& t : tensors) t.tensor.clear_grad();
  {
    ad::Tape tape;
    tape.backward(loss_fn(tape));
  }
  const auto evaluate = [&] {
    ad::Tape tape(/*recording=*/false);
    return loss_fn(tape).item();
  };

  GradCheckReport report;
  for (auto& t : tensors) {
    GradCheckEntry entry;
    entry.name = t.name;
    entry.size = t.tensor.size();
    const std::vector<double> analytic =
        t.tensor.has_grad() ? std::vector<double>(t.tensor.grad().begin(), t.tensor.grad().end())
                            : std::vector<double>(t.tensor.size(), 0.0);
    auto values = t.tensor.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = evaluate();
      values[i] = saved - h;
      const double down = evaluate();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      entry.max_abs_error = std::max(entry.max_abs_error, std::abs(analytic[i] - numeric));
      entry.max_rel_error = std::max(entry.max_rel_error, relative_error(analytic[i], numeric));
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.tensors.push_back(entry);
  }
  return report;
}

GradCheckReport check_model_gradients(const ModelParams& params,
                                      std::span<const TrainingExample> examples,
                                      double h) {
  std::vector<SessionGraph> graphs;
  for (const auto& ex : examples) graphs.push_back(build_graph(params.config, ex.prefix));
  const auto loss_fn = [&](ad::Tape& tape) {
    ad::Tensor total;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const auto l = loss(tape, score_items(tape, params, graphs[i]), examples[i].label);
      total = total.defined() ? ad::add(tape, total, l) : l;
    }
    return total;
  };
  return check_gradients(loss_fn, params.parameters(), h);
}

}  // namespace fgnn
