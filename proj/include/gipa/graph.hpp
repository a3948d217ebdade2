#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "gipa/dense_matrix.hpp"

namespace gipa {

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One undirected input edge with its feature row.
struct InputEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::vector<double> features;
};

struct Neighbor {
  std::size_t node;
  std::size_t edge;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Incoming entries of one destination node.
struct NeighborSlice {
  std::span<const std::size_t> nodes;
  std::span<const std::size_t> edges;
  std::size_t begin_entry = 0;  // position of the first entry in the graph-wide arrays

  std::size_t size() const { return nodes.size(); }
  bool empty() const { return nodes.empty(); }
  Neighbor operator[](std::size_t k) const { return {nodes[k], edges[k]}; }
};

/// Immutable compressed-row graph. Row i lists the in-neighbors of node i;
/// a "directed entry" is one position in col_indices/edge_ids. Every
/// undirected input edge (u,v) with u != v yields entries u<-v and v<-u that
/// share one edge_features row; a self-loop yields a single entry.
///
/// Undirected edges are numbered in canonical order (min endpoint, max
/// endpoint, feature row), so the graph does not depend on the order of
/// the input edge list.
class CsrGraph {
 public:
  CsrGraph() = default;

  std::size_t num_nodes() const { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
  std::size_t num_edges() const { return col_indices_.size(); }
  std::size_t num_undirected_edges() const { return edge_features_->rows(); }
  std::size_t node_dim() const { return node_features_->cols(); }
  std::size_t edge_dim() const { return edge_features_->cols(); }

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::size_t> col_indices() const { return col_indices_; }
  std::span<const std::size_t> edge_ids() const { return edge_ids_; }
  // Destination node of each directed entry.
  std::span<const std::size_t> entry_destinations() const { return entry_dst_; }

  const DenseMatrix& node_features() const { return *node_features_; }
  const DenseMatrix& edge_features() const { return *edge_features_; }

  NeighborSlice in_neighbors(std::size_t node) const;
  std::size_t degree(std::size_t node) const { return in_neighbors(node).size(); }

  // Same nodes and features, restricted to the undirected edges whose id is
  // kept. Both directions of an edge go together.
  CsrGraph with_edges_kept(const std::vector<bool>& keep) const;

  // Copies with replaced feature matrices; row counts must not change.
  CsrGraph with_node_features(DenseMatrix node_features) const;
  CsrGraph with_edge_features(DenseMatrix edge_features) const;

  friend bool operator==(const CsrGraph& a, const CsrGraph& b);

  friend CsrGraph build_graph(const std::vector<InputEdge>& edges, DenseMatrix node_features,
                              std::size_t edge_dim);

 private:
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<std::size_t> edge_ids_;
  std::vector<std::size_t> entry_dst_;
  std::shared_ptr<const DenseMatrix> node_features_ = std::make_shared<const DenseMatrix>();
  std::shared_ptr<const DenseMatrix> edge_features_ = std::make_shared<const DenseMatrix>();
};

// The node count is node_features.rows(). Every edge feature row must have
// width edge_dim and be finite; endpoints must be < node count.
CsrGraph build_graph(const std::vector<InputEdge>& edges, DenseMatrix node_features,
                     std::size_t edge_dim);
// Infers the edge width from the first edge (0 for an empty edge list).
CsrGraph build_graph(const std::vector<InputEdge>& edges, DenseMatrix node_features);

}  // namespace gipa
