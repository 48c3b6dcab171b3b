#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fgnn/autodiff.hpp"
#include "fgnn/layers.hpp"
#include "fgnn/session_graph.hpp"

namespace fgnn {

enum class HeadCombine { kMean, kConcat };
enum class EdgeWeightNorm { kNone, kOutDegree };

HeadCombine parse_head_combine(const std::string& name);
std::string to_string(HeadCombine combine);
EdgeWeightNorm parse_edge_weight_norm(const std::string& name);
std::string to_string(EdgeWeightNorm norm);

struct WgatHead {
  ad::Tensor weight;     // [d' x d], shared by attention and aggregation
  ad::Tensor attention;  // [2d' + 1]: target part, source part, edge weight
};

struct WgatLayerParams {
  std::vector<WgatHead> heads;
  HeadCombine combine = HeadCombine::kMean;
  EdgeWeightNorm edge_weight_norm = EdgeWeightNorm::kNone;

  std::size_t in_dim() const { return heads.front().weight.cols(); }
  std::size_t out_dim() const {
    const std::size_t per_head = heads.front().weight.rows();
    return combine == HeadCombine::kConcat ? per_head * heads.size() : per_head;
  }
};

WgatLayerParams make_wgat_layer(std::size_t in_dim, std::size_t out_dim,
                                std::size_t head_count, HeadCombine combine,
                                EdgeWeightNorm norm, double stddev, Rng& rng);

// Edge weights as fed into attention, aligned with graph.attention_edges().
std::vector<double> attention_edge_weights(const SessionGraph& graph,
                                           EdgeWeightNorm norm);

// Per-edge logits, ordered as graph.attention_edges():
// e_ij = LeakyReLU_0.2(att . [W x_i || W x_j || w_ij]) for each edge j -> i.
// `projected` is the [n x d'] matrix of W x rows.
ad::Tensor attention_logits(ad::Tape& tape, const WgatHead& head,
                            const ad::Tensor& projected,
                            const SessionGraph& graph,
                            EdgeWeightNorm norm = EdgeWeightNorm::kNone);

// Softmax of the logits over each node's in-neighbourhood.
ad::Tensor attention_normalize(ad::Tape& tape, const ad::Tensor& logits,
                               const SessionGraph& graph);

// sum_j alpha_ij W x_j for every node i, before the non-linearity.
ad::Tensor head_messages(ad::Tape& tape, const ad::Tensor& alpha,
                         const ad::Tensor& projected, const SessionGraph& graph);

// ReLU(sum_j alpha_ij W x_j).
ad::Tensor head_aggregate(ad::Tape& tape, const WgatHead& head,
                          const ad::Tensor& alpha, const ad::Tensor& features,
                          const SessionGraph& graph);

// Receives the normalized attention of every head when passed to
// wgat_forward; used to audit normalization.
struct WgatTrace {
  std::vector<std::vector<double>> alpha_per_head;
};

ad::Tensor wgat_forward(ad::Tape& tape, const WgatLayerParams& params,
                        const ad::Tensor& features, const SessionGraph& graph,
                        WgatTrace* trace = nullptr);

}  // namespace fgnn
