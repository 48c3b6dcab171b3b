#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fgnn/autodiff.hpp"

namespace fgnn {

// One directed edge of a session graph. `weight` counts how often the ordered
// pair occurs consecutively in the session; an added self-loop has weight 1
// and `added_loop` set.
struct GraphEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  double weight = 0.0;
  bool added_loop = false;

  bool operator==(const GraphEdge&) const = default;
};

struct InNeighbor {
  std::size_t node = 0;
  double weight = 0.0;

  bool operator==(const InNeighbor&) const = default;
};

struct GraphOptions {
  // Clamp the weight of a self-loop produced by a repeated consecutive item
  // (v, v) to 1 instead of keeping its frequency.
  bool selfloop_clamp = false;
};

// Weighted directed graph over the distinct items of one session.
//
// Nodes are numbered by first occurrence in the sequence. Every node owns
// exactly one self-loop: either the one formed by a consecutive repeat, or an
// added loop of weight 1. Immutable after construction.
class SessionGraph {
 public:
  static SessionGraph build(std::span<const std::size_t> sequence,
                            GraphOptions options = {});

  std::size_t node_count() const { return node_items_.size(); }
  const std::vector<std::size_t>& node_items() const { return node_items_; }
  // Edges in enumeration order: transition edges by first occurrence of the
  // ordered pair, then added self-loops by node.
  const std::vector<GraphEdge>& edges() const { return edges_; }
  std::size_t last_node() const { return last_node_; }
  std::size_t sequence_length() const { return sequence_length_; }

  // Sources of edges that end at `node`, with weights. Always contains `node`.
  const std::vector<InNeighbor>& in_neighbors(std::size_t node) const;

  // Total weight of edges that come from consecutive pairs of the sequence
  // (added self-loops excluded). Equals sequence_length() - 1 unless
  // selfloop_clamp rewrote a repeat count.
  double transition_weight() const;

  // Flattened in-adjacency used by attention: entry e is the edge
  // src[e] -> dst[e] with weight[e]; entries of one destination are
  // contiguous and listed in `segments`.
  struct AttentionEdges {
    std::vector<std::size_t> src;
    std::vector<std::size_t> dst;
    std::vector<double> weight;
    ad::Segments segments;
  };
  const AttentionEdges& attention_edges() const { return attention_; }

  // Graphviz text. Nodes are labelled by `item_labels[item]` when given,
  // otherwise by the item index.
  std::string to_dot(std::span<const std::string> item_labels = {}) const;

 private:
  std::vector<std::size_t> node_items_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<InNeighbor>> in_adjacency_;
  AttentionEdges attention_;
  std::size_t last_node_ = 0;
  std::size_t sequence_length_ = 0;
};

}  // namespace fgnn
