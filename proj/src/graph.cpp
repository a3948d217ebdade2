#include "gipa/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

namespace gipa {

NeighborSlice CsrGraph::in_neighbors(std::size_t node) const {
  if (node >= num_nodes()) {
    throw GraphError("in_neighbors: node " + std::to_string(node) + " out of range (" +
                     std::to_string(num_nodes()) + " nodes)");
  }
  const std::size_t b = row_offsets_[node];
  const std::size_t e = row_offsets_[node + 1];
  return {std::span<const std::size_t>(col_indices_).subspan(b, e - b),
          std::span<const std::size_t>(edge_ids_).subspan(b, e - b), b};
}

CsrGraph CsrGraph::with_edges_kept(const std::vector<bool>& keep) const {
  if (keep.size() != num_undirected_edges()) {
    throw GraphError("with_edges_kept: mask has " + std::to_string(keep.size()) +
                     " entries, graph has " + std::to_string(num_undirected_edges()) + " edges");
  }
  CsrGraph out;
  out.node_features_ = node_features_;
  out.edge_features_ = edge_features_;
  out.row_offsets_.assign(num_nodes() + 1, 0);
  for (std::size_t i = 0; i < num_nodes(); ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      if (!keep[edge_ids_[k]]) continue;
      out.col_indices_.push_back(col_indices_[k]);
      out.edge_ids_.push_back(edge_ids_[k]);
      out.entry_dst_.push_back(i);
    }
    out.row_offsets_[i + 1] = out.col_indices_.size();
  }
  return out;
}

CsrGraph CsrGraph::with_node_features(DenseMatrix node_features) const {
  if (node_features.rows() != num_nodes()) {
    throw GraphError("with_node_features: expected " + std::to_string(num_nodes()) + " rows");
  }
  CsrGraph out = *this;
  out.node_features_ = std::make_shared<const DenseMatrix>(std::move(node_features));
  return out;
}

CsrGraph CsrGraph::with_edge_features(DenseMatrix edge_features) const {
  if (edge_features.rows() != num_undirected_edges()) {
    throw GraphError("with_edge_features: expected " + std::to_string(num_undirected_edges()) +
                     " rows");
  }
  CsrGraph out = *this;
  out.edge_features_ = std::make_shared<const DenseMatrix>(std::move(edge_features));
  return out;
}

bool operator==(const CsrGraph& a, const CsrGraph& b) {
  return a.row_offsets_ == b.row_offsets_ && a.col_indices_ == b.col_indices_ &&
         a.edge_ids_ == b.edge_ids_ && *a.node_features_ == *b.node_features_ &&
         *a.edge_features_ == *b.edge_features_;
}

CsrGraph build_graph(const std::vector<InputEdge>& edges, DenseMatrix node_features,
                     std::size_t edge_dim) {
  const std::size_t n = node_features.rows();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    if (e.src >= n || e.dst >= n) {
      throw GraphError("build_graph: edge " + std::to_string(k) + " (" + std::to_string(e.src) +
                       "," + std::to_string(e.dst) + ") out of range for " + std::to_string(n) +
                       " nodes");
    }
    if (e.features.size() != edge_dim) {
      throw GraphError("build_graph: edge " + std::to_string(k) + " has " +
                       std::to_string(e.features.size()) + " features, expected " +
                       std::to_string(edge_dim));
    }
    if (!std::all_of(e.features.begin(), e.features.end(), [](double v) { return std::isfinite(v); })) {
      throw GraphError("build_graph: edge " + std::to_string(k) + " has a non-finite feature");
    }
  }
  if (!node_features.all_finite()) throw GraphError("build_graph: non-finite node feature");

  // Canonical undirected order.
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = edges[a];
    const auto& eb = edges[b];
    const auto la = std::minmax(ea.src, ea.dst);
    const auto lb = std::minmax(eb.src, eb.dst);
    if (la != lb) return la < lb;
    return ea.features < eb.features;
  });

  DenseMatrix edge_features(edges.size(), edge_dim);
  struct Entry {
    std::size_t dst, nbr, edge;
  };
  std::vector<Entry> entries;
  entries.reserve(2 * edges.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& e = edges[order[r]];
    std::copy(e.features.begin(), e.features.end(), edge_features.row(r).begin());
    const auto [lo, hi] = std::minmax(e.src, e.dst);
    entries.push_back({lo, hi, r});
    if (lo != hi) entries.push_back({hi, lo, r});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.dst, a.nbr, a.edge) < std::tie(b.dst, b.nbr, b.edge);
  });

  CsrGraph g;
  g.row_offsets_.assign(n + 1, 0);
  g.col_indices_.reserve(entries.size());
  g.edge_ids_.reserve(entries.size());
  g.entry_dst_.reserve(entries.size());
  for (const auto& en : entries) {
    g.row_offsets_[en.dst + 1] += 1;
    g.col_indices_.push_back(en.nbr);
    g.edge_ids_.push_back(en.edge);
    g.entry_dst_.push_back(en.dst);
  }
  for (std::size_t i = 0; i < n; ++i) g.row_offsets_[i + 1] += g.row_offsets_[i];
  g.node_features_ = std::make_shared<const DenseMatrix>(std::move(node_features));
  g.edge_features_ = std::make_shared<const DenseMatrix>(std::move(edge_features));
  return g;
}

CsrGraph build_graph(const std::vector<InputEdge>& edges, DenseMatrix node_features) {
  const std::size_t edge_dim = edges.empty() ? 0 : edges.front().features.size();
  return build_graph(edges, std::move(node_features), edge_dim);
}

}  // namespace gipa
