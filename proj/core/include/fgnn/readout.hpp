#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fgnn/autodiff.hpp"
#include "fgnn/layers.hpp"

namespace fgnn {

enum class ReadoutKind { kSet2Set, kMean, kSum, kMax, kLastAttention };

ReadoutKind parse_readout_kind(const std::string& name);
std::string to_string(ReadoutKind kind);

// Width of the graph embedding produced for node features of width `dim`.
std::size_t readout_width(ReadoutKind kind, std::size_t dim);

struct ReadoutParams {
  GruCellParams gru;  // input 2d, hidden d
  std::size_t steps = 3;
};

ReadoutParams make_set2set(std::size_t dim, std::size_t steps, double stddev,
                           Rng& rng);

// Attention distribution over nodes at each processing step.
struct Set2SetTrace {
  std::vector<std::vector<double>> attention_per_step;
};

// Order-learning readout. Starting from q*_0 = 0 and hidden state 0, each
// step runs the GRU on q*_{t-1} (its output q_t is the next hidden state),
// attends over nodes with <x_i, q_t>, reads r_t = sum_i a_i x_i and emits
// q*_t = q_t || r_t. Returns q*_T of width 2d.
ad::Tensor set2set_readout(ad::Tape& tape, const ReadoutParams& params,
                           const ad::Tensor& node_features,
                           Set2SetTrace* trace = nullptr);

ad::Tensor pool_readout(ad::Tape& tape, const ad::Tensor& node_features,
                        ad::Reduction mode);

// Attention conditioned on the last clicked item:
// e_i = v . sigmoid(A x_last + B x_i + c), a = softmax(e),
// output = (sum_i a_i x_i) || x_last.
struct LastAttentionParams {
  ad::Tensor last_weight;  // A [d x d]
  ad::Tensor node_weight;  // B [d x d]
  ad::Tensor bias;         // c [d]
  ad::Tensor score;        // v [d]
};

LastAttentionParams make_last_attention(std::size_t dim, double stddev, Rng& rng);

ad::Tensor last_item_attention_readout(ad::Tape& tape,
                                       const LastAttentionParams& params,
                                       const ad::Tensor& node_features,
                                       std::size_t last_node,
                                       std::vector<double>* attention = nullptr);

}  // namespace fgnn
