#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fgnn/autodiff.hpp"
#include "fgnn/layers.hpp"
#include "fgnn/readout.hpp"
#include "fgnn/session_graph.hpp"
#include "fgnn/wgat.hpp"

namespace fgnn {

struct ModelConfig {
  std::size_t item_count = 0;
  std::size_t dim = 100;
  std::size_t layers = 3;
  std::size_t heads = 8;
  std::size_t readout_steps = 3;
  // kMean averages heads at every layer. kConcat concatenates heads on all
  // but the last layer, which averages.
  HeadCombine combine = HeadCombine::kMean;
  ReadoutKind readout = ReadoutKind::kSet2Set;
  EdgeWeightNorm edge_weight_norm = EdgeWeightNorm::kNone;
  bool selfloop_clamp = false;
};

struct NamedTensor {
  std::string name;
  ad::Tensor tensor;
};

struct ModelParams {
  ModelConfig config;
  EmbeddingTable embedding;
  std::vector<WgatLayerParams> wgat_layers;
  ReadoutParams set2set;               // readout == set2set
  LastAttentionParams last_attention;  // readout == last_attention
  ad::Tensor w_out;                    // [d x readout width]

  // Every learnable tensor of the configured architecture, in a fixed order
  // that checkpoints and the optimizer rely on.
  std::vector<NamedTensor> parameters() const;

  // Deep copy: the clone shares no storage with this model.
  ModelParams clone() const;
};

// Every learnable tensor drawn i.i.d. from N(0, stddev^2), except the
// per-gate hidden blocks of the readout GRU, which are orthogonal.
ModelParams make_model(const ModelConfig& config, double stddev, Rng& rng);

SessionGraph build_graph(const ModelConfig& config,
                         std::span<const std::size_t> sequence);

struct ForwardTrace {
  std::vector<WgatTrace> layers;
  Set2SetTrace set2set;
  std::vector<double> last_attention;
};

// Node embeddings after the WGAT stack, [|V_s| x d].
ad::Tensor encode_nodes(ad::Tape& tape, const ModelParams& params,
                        const SessionGraph& graph, ForwardTrace* trace = nullptr);

// Graph-level embedding from the configured readout.
ad::Tensor graph_embedding(ad::Tape& tape, const ModelParams& params,
                           const SessionGraph& graph,
                           ForwardTrace* trace = nullptr);

// z = X0 (W_out q*): one score per item against its initial embedding.
ad::Tensor score_items(ad::Tape& tape, const ModelParams& params,
                       const SessionGraph& graph, ForwardTrace* trace = nullptr);

// Cross entropy of softmax(logits) against `label`.
ad::Tensor loss(ad::Tape& tape, const ad::Tensor& logits, std::size_t label);

struct RankedResult {
  std::vector<double> scores;
  std::vector<double> probabilities;
  std::vector<std::size_t> topk;
};

// Inference without gradient recording.
RankedResult forward(const ModelParams& params, const SessionGraph& graph,
                     std::size_t k);

// Indices of the k largest values, descending; ties go to the lower index.
std::vector<std::size_t> predict_topk(std::span<const double> values,
                                      std::size_t k);

}  // namespace fgnn
