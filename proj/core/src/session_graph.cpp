#include "fgnn/session_graph.hpp"

#include <map>
#include <sstream>
#include <unordered_map>

#include "fgnn/errors.hpp"

namespace fgnn {

SessionGraph SessionGraph::build(std::span<const std::size_t> sequence,
                                 GraphOptions options) {
  if (sequence.empty()) {
    throw ContractError("cannot build a session graph from an empty sequence");
  }
  SessionGraph g;
  g.sequence_length_ = sequence.size();

  std::unordered_map<std::size_t, std::size_t> node_of;
  std::vector<std::size_t> positions(sequence.size());
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    auto [it, inserted] = node_of.try_emplace(sequence[t], g.node_items_.size());
    if (inserted) g.node_items_.push_back(sequence[t]);
    positions[t] = it->second;
  }
  const std::size_t n = g.node_items_.size();
  g.last_node_ = positions.back();

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_of;
  for (std::size_t t = 0; t + 1 < positions.size(); ++t) {
    const auto key = std::make_pair(positions[t], positions[t + 1]);
    auto [it, inserted] = edge_of.try_emplace(key, g.edges_.size());
    if (inserted) {
      g.edges_.push_back(GraphEdge{key.first, key.second, 0.0, false});
    }
    g.edges_[it->second].weight += 1.0;
  }

  std::vector<char> has_loop(n, 0);
  for (auto& e : g.edges_) {
    if (e.src == e.dst) {
      has_loop[e.src] = 1;
      if (options.selfloop_clamp) e.weight = 1.0;
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (!has_loop[v]) g.edges_.push_back(GraphEdge{v, v, 1.0, true});
  }

  g.in_adjacency_.resize(n);
  for (const auto& e : g.edges_) {
    g.in_adjacency_[e.dst].push_back(InNeighbor{e.src, e.weight});
  }

  auto& att = g.attention_;
  att.segments.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (const auto& nb : g.in_adjacency_[v]) {
      att.segments[v].push_back(att.src.size());
      att.src.push_back(nb.node);
      att.dst.push_back(v);
      att.weight.push_back(nb.weight);
    }
  }
  return g;
}

const std::vector<InNeighbor>& SessionGraph::in_neighbors(std::size_t node) const {
  if (node >= node_count()) {
    throw IndexError("node " + std::to_string(node) + " out of range for " +
                     std::to_string(node_count()) + " nodes");
  }
  return in_adjacency_[node];
}

double SessionGraph::transition_weight() const {
  double total = 0.0;
  for (const auto& e : edges_) {
    if (!e.added_loop) total += e.weight;
  }
  return total;
}

std::string SessionGraph::to_dot(std::span<const std::string> item_labels) const {
  std::ostringstream out;
  out << "digraph session {\n";
  for (std::size_t v = 0; v < node_count(); ++v) {
    const std::size_t item = node_items_[v];
    out << "  n" << v << " [label=\"";
    if (item < item_labels.size()) {
      out << item_labels[item];
    } else {
      out << item;
    }
    out << '"';
    if (v == last_node_) out << ", peripheries=2";
    out << "];\n";
  }
  for (const auto& e : edges_) {
    out << "  n" << e.src << " -> n" << e.dst << " [label=\"" << e.weight
        << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace fgnn
