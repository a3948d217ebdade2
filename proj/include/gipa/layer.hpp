#pragma once

#include <string>
#include <vector>

#include "gipa/dense_matrix.hpp"
#include "gipa/graph.hpp"
#include "gipa/nn.hpp"

namespace gipa {

struct GipaLayerDims {
  std::size_t in_dim = 0;       // node input width
  std::size_t edge_in_dim = 0;  // raw edge feature width
  std::size_t node_emb = 80;    // d_h
  std::size_t edge_emb = 16;    // d_e
  std::size_t heads = 8;
  std::size_t hidden = 80;      // hidden width of every MLP
  std::size_t out_dim = 80;
  std::size_t att_depth = 2;
  std::size_t prop_depth = 2;
  std::size_t agg_depth = 2;
};

struct GipaDropout {
  double node = 0.1;
  double attention = 0.1;
  double propagation = 0.25;
  double aggregation = 0.25;
};

/// Learnable blocks of one layer.
///   node_proj [in x d_h], edge_proj [edge_in x d_e], res_proj [d_h x d_h]
///   att_mlp   [h_dst | h_src | e] -> heads, no bias
///   prop_mlp  [h_src | e] -> d_h
///   agg_mlp   [m_i | res] -> out
struct GipaLayerParams {
  GipaLayerParams(const GipaLayerDims& dims, const GipaDropout& dropout, const std::string& prefix);

  void init_glorot(Rng& rng);
  void collect(std::vector<Parameter*>& out);

  GipaLayerDims dims;
  double node_dropout;
  // When set, propagation sees a zero block in place of the edge embedding.
  // This is the edge-blind ablation used for comparison runs.
  bool ablate_prop_edges = false;

  Parameter node_proj;
  Parameter edge_proj;
  Parameter res_proj;
  Mlp att_mlp;
  Mlp prop_mlp;
  Mlp agg_mlp;
};

// Intermediates recorded by layer_forward. Per-edge matrices are indexed by
// directed entry position in the graph, ẽ by undirected edge id.
struct LayerActivations {
  DenseMatrix input;          // x [n x in]
  DropoutMask node_mask;
  DenseMatrix node_emb;       // h̃ [n x d_h]
  DenseMatrix edge_emb;       // ẽ [E_u x d_e]
  MlpCache att_cache;
  DenseMatrix scores;         // ã [E x H]
  DenseMatrix attention;      // a [E x H]
  MlpCache prop_cache;
  DenseMatrix propagated;     // p [E x d_h]
  DenseMatrix messages;       // m [E x d_h]
  DenseMatrix node_messages;  // m_i [n x d_h]
  DenseMatrix residual;       // ĥ [n x d_h]
  MlpCache agg_cache;
  DenseMatrix output;         // o [n x out]
};

struct LayerInputGrads {
  DenseMatrix node;  // d/dx
  DenseMatrix edge;  // d/d(raw edge features)
};

// h̃ = dropout(x * node_proj), ẽ = edge_features * edge_proj.
void project_inputs(const CsrGraph& g, const DenseMatrix& x, const GipaLayerParams& params,
                    Phase phase, Rng& rng, LayerActivations& act);

DenseMatrix attention_scores(const CsrGraph& g, const DenseMatrix& node_emb,
                             const DenseMatrix& edge_emb, const GipaLayerParams& params,
                             Phase phase, Rng& rng, MlpCache& cache);

// Softmax over each destination's incoming entries, independently per column.
DenseMatrix edge_softmax(const CsrGraph& g, const DenseMatrix& scores);
DenseMatrix edge_softmax_backward(const CsrGraph& g, const DenseMatrix& attention,
                                  const DenseMatrix& grad_attention);

DenseMatrix propagate(const CsrGraph& g, const DenseMatrix& node_emb, const DenseMatrix& edge_emb,
                      const GipaLayerParams& params, Phase phase, Rng& rng, MlpCache& cache);

// Head b of each row scales the b-th contiguous block (width d_h/H) of p.
DenseMatrix fuse_message(const DenseMatrix& attention, const DenseMatrix& propagated,
                         std::size_t heads);
struct FuseGrads {
  DenseMatrix attention;
  DenseMatrix propagated;
};
FuseGrads fuse_message_backward(const DenseMatrix& attention, const DenseMatrix& propagated,
                                std::size_t heads, const DenseMatrix& grad_messages);

// Row i = sum of per-entry rows over node i's segment, in segment order.
DenseMatrix segment_sum(const CsrGraph& g, const DenseMatrix& per_entry);

// m_i = segment sum, ĥ = h̃ * res_proj, o = agg_mlp([m_i | ĥ]).
DenseMatrix aggregate(const CsrGraph& g, const DenseMatrix& messages, const DenseMatrix& node_emb,
                      const GipaLayerParams& params, Phase phase, Rng& rng,
                      LayerActivations& act);

LayerActivations layer_forward(const CsrGraph& g, const DenseMatrix& x,
                               const GipaLayerParams& params, Phase phase, Rng& rng);

// Accumulates into every parameter gradient of `params`.
LayerInputGrads layer_backward(const CsrGraph& g, GipaLayerParams& params,
                               const LayerActivations& act, const DenseMatrix& grad_output);

}  // namespace gipa
