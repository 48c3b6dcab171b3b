#include "fgnn/model.hpp"

#include <algorithm>
#include <numeric>

#include "fgnn/errors.hpp"

namespace fgnn {

std::vector<NamedTensor> ModelParams::parameters() const {
  std::vector<NamedTensor> out;
  out.push_back({"embedding", embedding.weights});
  for (std::size_t l = 0; l < wgat_layers.size(); ++l) {
    for (std::size_t k = 0; k < wgat_layers[l].heads.size(); ++k) {
      const std::string prefix =
          "wgat." + std::to_string(l) + ".head." + std::to_string(k);
      out.push_back({prefix + ".weight", wgat_layers[l].heads[k].weight});
      out.push_back({prefix + ".attention", wgat_layers[l].heads[k].attention});
    }
  }
  if (config.readout == ReadoutKind::kSet2Set) {
    out.push_back({"set2set.gru.input_weights", set2set.gru.input_weights});
    out.push_back({"set2set.gru.hidden_weights", set2set.gru.hidden_weights});
    out.push_back({"set2set.gru.input_bias", set2set.gru.input_bias});
    out.push_back({"set2set.gru.hidden_bias", set2set.gru.hidden_bias});
  } else if (config.readout == ReadoutKind::kLastAttention) {
    out.push_back({"last_attention.last_weight", last_attention.last_weight});
    out.push_back({"last_attention.node_weight", last_attention.node_weight});
    out.push_back({"last_attention.bias", last_attention.bias});
    out.push_back({"last_attention.score", last_attention.score});
  }
  out.push_back({"w_out", w_out});
  return out;
}

ModelParams ModelParams::clone() const {
  ModelParams copy = *this;
  copy.embedding.weights = embedding.weights.clone();
  for (auto& layer : copy.wgat_layers) {
    for (auto& head : layer.heads) {
      head.weight = head.weight.clone();
      head.attention = head.attention.clone();
    }
  }
  auto clone_if = [](ad::Tensor& t) {
    if (t.defined()) t = t.clone();
  };
  clone_if(copy.set2set.gru.input_weights);
  clone_if(copy.set2set.gru.hidden_weights);
  clone_if(copy.set2set.gru.input_bias);
  clone_if(copy.set2set.gru.hidden_bias);
  clone_if(copy.last_attention.last_weight);
  clone_if(copy.last_attention.node_weight);
  clone_if(copy.last_attention.bias);
  clone_if(copy.last_attention.score);
  clone_if(copy.w_out);
  return copy;
}

ModelParams make_model(const ModelConfig& config, double stddev, Rng& rng) {
  if (config.item_count == 0) throw UsageError("model needs at least one item");
  if (config.dim == 0) throw UsageError("embedding size must be positive");
  if (config.layers == 0) throw UsageError("model needs at least one WGAT layer");
  if (config.heads == 0) throw UsageError("WGAT layers need at least one head");

  ModelParams p;
  p.config = config;
  const std::size_t d = config.dim;
  p.embedding.weights = init_gaussian({config.item_count, d}, 0.0, stddev, rng);
  p.embedding.weights.set_requires_grad(true);

  std::size_t in_dim = d;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const bool last = l + 1 == config.layers;
    const HeadCombine combine =
        config.combine == HeadCombine::kConcat && !last ? HeadCombine::kConcat
                                                        : HeadCombine::kMean;
    p.wgat_layers.push_back(make_wgat_layer(in_dim, d, config.heads, combine,
                                            config.edge_weight_norm, stddev, rng));
    in_dim = p.wgat_layers.back().out_dim();
  }

  if (config.readout == ReadoutKind::kSet2Set) {
    p.set2set = make_set2set(d, config.readout_steps, stddev, rng);
  } else if (config.readout == ReadoutKind::kLastAttention) {
    p.last_attention = make_last_attention(d, stddev, rng);
  }
  p.w_out = init_gaussian({d, readout_width(config.readout, d)}, 0.0, stddev, rng);
  p.w_out.set_requires_grad(true);
  return p;
}

SessionGraph build_graph(const ModelConfig& config,
                         std::span<const std::size_t> sequence) {
  return SessionGraph::build(sequence, GraphOptions{config.selfloop_clamp});
}

ad::Tensor encode_nodes(ad::Tape& tape, const ModelParams& params,
                        const SessionGraph& graph, ForwardTrace* trace) {
  ad::Tensor x = embed_lookup(tape, params.embedding, graph.node_items());
  for (const auto& layer : params.wgat_layers) {
    WgatTrace* layer_trace = nullptr;
    if (trace != nullptr) layer_trace = &trace->layers.emplace_back();
    x = wgat_forward(tape, layer, x, graph, layer_trace);
  }
  return x;
}

ad::Tensor graph_embedding(ad::Tape& tape, const ModelParams& params,
                           const SessionGraph& graph, ForwardTrace* trace) {
  const auto nodes = encode_nodes(tape, params, graph, trace);
  switch (params.config.readout) {
    case ReadoutKind::kSet2Set:
      return set2set_readout(tape, params.set2set, nodes,
                             trace ? &trace->set2set : nullptr);
    case ReadoutKind::kMean:
      return pool_readout(tape, nodes, ad::Reduction::kMean);
    case ReadoutKind::kSum:
      return pool_readout(tape, nodes, ad::Reduction::kSum);
    case ReadoutKind::kMax:
      return pool_readout(tape, nodes, ad::Reduction::kMax);
    case ReadoutKind::kLastAttention:
      return last_item_attention_readout(tape, params.last_attention, nodes,
                                         graph.last_node(),
                                         trace ? &trace->last_attention : nullptr);
  }
  throw UsageError("unknown readout");
}

ad::Tensor score_items(ad::Tape& tape, const ModelParams& params,
                       const SessionGraph& graph, ForwardTrace* trace) {
  const auto embedding = graph_embedding(tape, params, graph, trace);
  const auto projected = ad::matmul(tape, params.w_out, embedding);
  return ad::matmul(tape, params.embedding.weights, projected);
}

ad::Tensor loss(ad::Tape& tape, const ad::Tensor& logits, std::size_t label) {
  return ad::softmax_cross_entropy(tape, logits, label);
}

RankedResult forward(const ModelParams& params, const SessionGraph& graph,
                     std::size_t k) {
  ad::Tape tape(/*recording=*/false);
  const auto logits = score_items(tape, params, graph);
  RankedResult result;
  result.scores.assign(logits.values().begin(), logits.values().end());
  result.probabilities = ad::softmax(result.scores);
  result.topk = predict_topk(result.scores, k);
  return result;
}

std::vector<std::size_t> predict_topk(std::span<const double> values,
                                      std::size_t k) {
  if (k == 0 || k > values.size()) {
    throw UsageError("top-k size " + std::to_string(k) + " outside [1, " +
                     std::to_string(values.size()) + "]");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto before = [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                    order.end(), before);
  order.resize(k);
  return order;
}

}  // namespace fgnn
