#include "fgnn/wgat.hpp"

#include "fgnn/errors.hpp"

namespace fgnn {

namespace {
constexpr double kAttentionSlope = 0.2;
}

HeadCombine parse_head_combine(const std::string& name) {
  if (name == "mean") return HeadCombine::kMean;
  if (name == "concat") return HeadCombine::kConcat;
  throw UsageError("unknown head combine mode '" + name + "' (mean|concat)");
}

std::string to_string(HeadCombine combine) {
  return combine == HeadCombine::kMean ? "mean" : "concat";
}

EdgeWeightNorm parse_edge_weight_norm(const std::string& name) {
  if (name == "none") return EdgeWeightNorm::kNone;
  if (name == "out-degree") return EdgeWeightNorm::kOutDegree;
  throw UsageError("unknown edge weight normalization '" + name +
                   "' (none|out-degree)");
}

std::string to_string(EdgeWeightNorm norm) {
  return norm == EdgeWeightNorm::kNone ? "none" : "out-degree";
}

WgatLayerParams make_wgat_layer(std::size_t in_dim, std::size_t out_dim,
                                std::size_t head_count, HeadCombine combine,
                                EdgeWeightNorm norm, double stddev, Rng& rng) {
  if (head_count == 0) throw UsageError("a WGAT layer needs at least one head");
  WgatLayerParams layer;
  layer.combine = combine;
  layer.edge_weight_norm = norm;
  for (std::size_t k = 0; k < head_count; ++k) {
    WgatHead head;
    head.weight = init_gaussian({out_dim, in_dim}, 0.0, stddev, rng);
    head.attention = init_gaussian({2 * out_dim + 1}, 0.0, stddev, rng);
    head.weight.set_requires_grad(true);
    head.attention.set_requires_grad(true);
    layer.heads.push_back(std::move(head));
  }
  return layer;
}

std::vector<double> attention_edge_weights(const SessionGraph& graph,
                                           EdgeWeightNorm norm) {
  const auto& att = graph.attention_edges();
  std::vector<double> w = att.weight;
  if (norm == EdgeWeightNorm::kOutDegree) {
    std::vector<double> out_weight(graph.node_count(), 0.0);
    for (const auto& e : graph.edges()) out_weight[e.src] += e.weight;
    for (std::size_t e = 0; e < w.size(); ++e) w[e] /= out_weight[att.src[e]];
  }
  return w;
}

ad::Tensor attention_logits(ad::Tape& tape, const WgatHead& head,
                            const ad::Tensor& projected,
                            const SessionGraph& graph, EdgeWeightNorm norm) {
  const std::size_t width = head.weight.rows();
  if (projected.rank() != 2 || projected.rows() != graph.node_count() ||
      projected.cols() != width) {
    throw DimensionError("attention_logits: projected features " +
                         ad::to_string(projected.shape()) + " do not match " +
                         std::to_string(graph.node_count()) + " nodes of width " +
                         std::to_string(width));
  }
  if (head.attention.size() != 2 * width + 1) {
    throw DimensionError("attention_logits: attention vector " +
                         ad::to_string(head.attention.shape()) + " needs " +
                         std::to_string(2 * width + 1) + " entries");
  }
  const auto& att = graph.attention_edges();
  // att . [a || b || w] splits into a target term, a source term and a
  // weight term; each node's projections are scored once.
  const auto target_part = ad::slice_rows(tape, head.attention, 0, width);
  const auto source_part = ad::slice_rows(tape, head.attention, width, 2 * width);
  const auto weight_part = ad::slice_rows(tape, head.attention, 2 * width, 2 * width + 1);

  const auto target_score = ad::matmul(tape, projected, target_part);
  const auto source_score = ad::matmul(tape, projected, source_part);

  const std::vector<std::size_t> zeros(att.src.size(), 0);
  const auto weight_coeff = ad::gather_rows(tape, weight_part, zeros);
  const auto weights = ad::Tensor::from({att.weight.size()},
                                        attention_edge_weights(graph, norm));

  auto logits = ad::add(tape, ad::gather_rows(tape, target_score, att.dst),
                        ad::gather_rows(tape, source_score, att.src));
  logits = ad::add(tape, logits, ad::mul(tape, weight_coeff, weights));
  return ad::leaky_relu(tape, logits, kAttentionSlope);
}

ad::Tensor attention_normalize(ad::Tape& tape, const ad::Tensor& logits,
                               const SessionGraph& graph) {
  return ad::segment_softmax(tape, logits, graph.attention_edges().segments);
}

ad::Tensor head_messages(ad::Tape& tape, const ad::Tensor& alpha,
                         const ad::Tensor& projected, const SessionGraph& graph) {
  const auto& att = graph.attention_edges();
  const std::size_t n = graph.node_count();
  const auto mixing = ad::scatter_matrix(tape, alpha, att.dst, att.src, n, n);
  return ad::matmul(tape, mixing, projected);
}

ad::Tensor head_aggregate(ad::Tape& tape, const WgatHead& head,
                          const ad::Tensor& alpha, const ad::Tensor& features,
                          const SessionGraph& graph) {
  const auto projected =
      ad::matmul(tape, features, ad::transpose(tape, head.weight));
  return ad::relu(tape, head_messages(tape, alpha, projected, graph));
}

ad::Tensor wgat_forward(ad::Tape& tape, const WgatLayerParams& params,
                        const ad::Tensor& features, const SessionGraph& graph,
                        WgatTrace* trace) {
  if (params.heads.empty()) throw UsageError("a WGAT layer needs at least one head");
  if (features.rank() != 2 || features.rows() != graph.node_count() ||
      features.cols() != params.in_dim()) {
    throw DimensionError("wgat_forward: features " +
                         ad::to_string(features.shape()) + " do not match " +
                         std::to_string(graph.node_count()) + " nodes of width " +
                         std::to_string(params.in_dim()));
  }
  std::vector<ad::Tensor> outputs;
  outputs.reserve(params.heads.size());
  for (const auto& head : params.heads) {
    const auto projected =
        ad::matmul(tape, features, ad::transpose(tape, head.weight));
    const auto logits =
        attention_logits(tape, head, projected, graph, params.edge_weight_norm);
    const auto alpha = attention_normalize(tape, logits, graph);
    if (trace != nullptr) {
      trace->alpha_per_head.emplace_back(alpha.values().begin(), alpha.values().end());
    }
    outputs.push_back(head_messages(tape, alpha, projected, graph));
  }

  switch (params.combine) {
    case HeadCombine::kMean: {
      ad::Tensor total = outputs.front();
      for (std::size_t k = 1; k < outputs.size(); ++k) {
        total = ad::add(tape, total, outputs[k]);
      }
      if (outputs.size() > 1) {
        total = ad::scale(tape, total, 1.0 / static_cast<double>(outputs.size()));
      }
      return ad::relu(tape, total);
    }
    case HeadCombine::kConcat: {
      for (auto& o : outputs) o = ad::relu(tape, o);
      return outputs.size() == 1 ? outputs.front() : ad::concat_cols(tape, outputs);
    }
  }
  throw UsageError("unknown head combine mode");
}

}  // namespace fgnn
