#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fgnn/autodiff.hpp"
#include "fgnn/data.hpp"
#include "fgnn/model.hpp"

namespace fgnn {

// |analytic - numeric| / max(|analytic|, |numeric|, floor).
//
// Central differences at h = 1e-5 carry ~1e-10 of round-off, so entries whose
// true gradient is zero (the target half of an attention vector is invisible
// to the softmax while every logit of a segment is on the same side of the
// LeakyReLU kink) would report noise as O(1) error. The floor bounds that.
inline constexpr double kRelativeErrorFloor = 1e-6;
double relative_error(double analytic, double numeric,
                      double floor = kRelativeErrorFloor);

struct GradCheckEntry {
  std::string name;
  std::size_t size = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> tensors;
  double max_rel_error = 0.0;

  bool passed(double tolerance) const { return max_rel_error <= tolerance; }
};

// Compares reverse-mode gradients of `loss_fn` against central differences
// with step h, perturbing every entry of every tensor in `inputs`.
// `loss_fn` must rebuild its computation from the current tensor values.
GradCheckReport check_gradients(
    const std::function<ad::Tensor(ad::Tape&)>& loss_fn,
    std::span<const NamedTensor> inputs, double h = 1e-5);

// Gradient check of the summed cross-entropy loss over `examples` with
// respect to every model parameter.
GradCheckReport check_model_gradients(const ModelParams& params,
                                      std::span<const TrainingExample> examples,
                                      double h = 1e-5);

}  // namespace fgnn
