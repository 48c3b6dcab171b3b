#pragma once

#include <cstddef>
#include <random>
#include <span>

#include "fgnn/autodiff.hpp"

namespace fgnn {

using Rng = std::mt19937_64;

// Item embedding matrix [m x d]; row i is the initial feature of item i.
struct EmbeddingTable {
  ad::Tensor weights;

  std::size_t item_count() const { return weights.rows(); }
  std::size_t dim() const { return weights.cols(); }
};

ad::Tensor embed_lookup(ad::Tape& tape, const EmbeddingTable& table,
                        std::span<const std::size_t> items);

// Gate blocks are stored contiguously in the order (reset, update, candidate):
// rows [0, h) reset, [h, 2h) update, [2h, 3h) candidate.
struct GruCellParams {
  ad::Tensor input_weights;   // [3h x d_in]
  ad::Tensor hidden_weights;  // [3h x h]
  ad::Tensor input_bias;      // [3h]
  ad::Tensor hidden_bias;     // [3h]

  std::size_t input_dim() const { return input_weights.cols(); }
  std::size_t hidden_dim() const { return hidden_weights.cols(); }
};

// r = sigmoid(W_r x + U_r h + b_r)
// z = sigmoid(W_z x + U_z h + b_z)
// c = tanh(W_c x + U_c (r * h) + b_c)
// h' = (1 - z) * h + z * c
ad::Tensor gru_cell(ad::Tape& tape, const GruCellParams& params,
                    const ad::Tensor& input, const ad::Tensor& hidden);

ad::Tensor init_gaussian(const ad::Shape& shape, double mean, double stddev,
                         Rng& rng);

// Rows orthonormal when rows <= cols, columns orthonormal otherwise.
ad::Tensor init_orthogonal(std::size_t rows, std::size_t cols, Rng& rng);

GruCellParams make_gru_cell(std::size_t input_dim, std::size_t hidden_dim,
                            double stddev, Rng& rng);

}  // namespace fgnn
