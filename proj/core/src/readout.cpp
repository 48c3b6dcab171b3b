#include "fgnn/readout.hpp"

#include "fgnn/errors.hpp"

namespace fgnn {

ReadoutKind parse_readout_kind(const std::string& name) {
  if (name == "set2set") return ReadoutKind::kSet2Set;
  if (name == "mean") return ReadoutKind::kMean;
  if (name == "sum") return ReadoutKind::kSum;
  if (name == "max") return ReadoutKind::kMax;
  if (name == "last_attention") return ReadoutKind::kLastAttention;
  throw UsageError("unknown readout '" + name +
                   "' (set2set|mean|sum|max|last_attention)");
}

std::string to_string(ReadoutKind kind) {
  switch (kind) {
    case ReadoutKind::kSet2Set: return "set2set";
    case ReadoutKind::kMean: return "mean";
    case ReadoutKind::kSum: return "sum";
    case ReadoutKind::kMax: return "max";
    case ReadoutKind::kLastAttention: return "last_attention";
  }
  return "?";
}

std::size_t readout_width(ReadoutKind kind, std::size_t dim) {
  switch (kind) {
    case ReadoutKind::kSet2Set:
    case ReadoutKind::kLastAttention:
      return 2 * dim;
    default:
      return dim;
  }
}

ReadoutParams make_set2set(std::size_t dim, std::size_t steps, double stddev,
                           Rng& rng) {
  if (steps == 0) throw UsageError("set2set needs at least one processing step");
  ReadoutParams p;
  p.gru = make_gru_cell(2 * dim, dim, stddev, rng);
  p.steps = steps;
  return p;
}

namespace {

void require_nodes(const ad::Tensor& node_features, const char* who) {
  if (node_features.rank() != 2 || node_features.rows() == 0) {
    throw ContractError(std::string(who) + " needs a non-empty node matrix, got " +
                        ad::to_string(node_features.shape()));
  }
}

}  // namespace

ad::Tensor set2set_readout(ad::Tape& tape, const ReadoutParams& params,
                           const ad::Tensor& node_features, Set2SetTrace* trace) {
  require_nodes(node_features, "set2set_readout");
  if (params.steps == 0) throw ContractError("set2set needs at least one step");
  const std::size_t n = node_features.rows();
  const std::size_t d = node_features.cols();
  if (params.gru.hidden_dim() != d || params.gru.input_dim() != 2 * d) {
    throw DimensionError("set2set_readout: GRU sized for hidden " +
                         std::to_string(params.gru.hidden_dim()) +
                         " but node features have width " + std::to_string(d));
  }

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const ad::Segments one_segment{all};
  const auto features_t = ad::transpose(tape, node_features);

  ad::Tensor q_star = ad::Tensor::zeros({2 * d});
  ad::Tensor hidden = ad::Tensor::zeros({d});
  for (std::size_t t = 0; t < params.steps; ++t) {
    const auto query = gru_cell(tape, params.gru, q_star, hidden);
    const auto scores = ad::matmul(tape, node_features, query);
    const auto attention = ad::segment_softmax(tape, scores, one_segment);
    if (trace != nullptr) {
      trace->attention_per_step.emplace_back(attention.values().begin(),
                                             attention.values().end());
    }
    const auto read = ad::matmul(tape, features_t, attention);
    const ad::Tensor parts[] = {query, read};
    q_star = ad::concat_rows(tape, parts);
    hidden = query;
  }
  return q_star;
}

ad::Tensor pool_readout(ad::Tape& tape, const ad::Tensor& node_features,
                        ad::Reduction mode) {
  require_nodes(node_features, "pool_readout");
  return ad::reduce_rows(tape, node_features, mode);
}

LastAttentionParams make_last_attention(std::size_t dim, double stddev, Rng& rng) {
  LastAttentionParams p;
  p.last_weight = init_gaussian({dim, dim}, 0.0, stddev, rng);
  p.node_weight = init_gaussian({dim, dim}, 0.0, stddev, rng);
  p.bias = init_gaussian({dim}, 0.0, stddev, rng);
  p.score = init_gaussian({dim}, 0.0, stddev, rng);
  for (auto* t : {&p.last_weight, &p.node_weight, &p.bias, &p.score}) {
    t->set_requires_grad(true);
  }
  return p;
}

ad::Tensor last_item_attention_readout(ad::Tape& tape,
                                       const LastAttentionParams& params,
                                       const ad::Tensor& node_features,
                                       std::size_t last_node,
                                       std::vector<double>* attention_out) {
  require_nodes(node_features, "last_item_attention_readout");
  const std::size_t n = node_features.rows();
  const std::size_t d = node_features.cols();
  if (last_node >= n) {
    throw IndexError("last node " + std::to_string(last_node) +
                     " out of range for " + std::to_string(n) + " nodes");
  }
  const std::size_t last_index[] = {last_node};
  const auto last_row = ad::gather_rows(tape, node_features, last_index);  // [1 x d]
  const auto x_last = ad::reshape(tape, last_row, {d});

  // Broadcast A x_last + c over the n node rows by gathering row 0 n times.
  const auto shared = ad::add(tape, ad::matmul(tape, params.last_weight, x_last),
                              params.bias);
  const std::vector<std::size_t> repeat(n, 0);
  const auto shared_rows =
      ad::gather_rows(tape, ad::reshape(tape, shared, {1, d}), repeat);
  const auto node_term =
      ad::matmul(tape, node_features, ad::transpose(tape, params.node_weight));
  const auto hidden = ad::sigmoid(tape, ad::add(tape, node_term, shared_rows));
  const auto scores = ad::matmul(tape, hidden, params.score);

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const auto attention = ad::segment_softmax(tape, scores, ad::Segments{all});
  if (attention_out != nullptr) {
    attention_out->assign(attention.values().begin(), attention.values().end());
  }
  const auto global =
      ad::matmul(tape, ad::transpose(tape, node_features), attention);
  const ad::Tensor parts[] = {global, x_last};
  return ad::concat_rows(tape, parts);
}

}  // namespace fgnn
