#include "gipa/layer.hpp"

#include <algorithm>
#include <cmath>

namespace gipa {
namespace {

std::vector<std::size_t> mlp_widths(std::size_t in, std::size_t hidden, std::size_t out,
                                    std::size_t depth) {
  if (depth == 0) throw std::invalid_argument("MLP depth must be at least 1");
  std::vector<std::size_t> w{in};
  for (std::size_t l = 1; l < depth; ++l) w.push_back(hidden);
  w.push_back(out);
  return w;
}

void check_dims(const GipaLayerDims& d) {
  if (d.in_dim == 0 || d.node_emb == 0 || d.edge_emb == 0 || d.hidden == 0 || d.out_dim == 0) {
    throw std::invalid_argument("GipaLayerDims: widths must be positive");
  }
  if (d.heads == 0 || d.node_emb % d.heads != 0) {
    throw std::invalid_argument("GipaLayerDims: heads (" + std::to_string(d.heads) +
                                ") must divide node_emb (" + std::to_string(d.node_emb) + ")");
  }
}

// Adds src into dst row-wise at a column offset.
void add_into(std::span<double> dst, std::span<const double> src) {
  for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
}

}  // namespace

GipaLayerParams::GipaLayerParams(const GipaLayerDims& d, const GipaDropout& drop,
                                 const std::string& prefix)
    : dims(d), node_dropout(drop.node) {
  check_dims(d);
  node_proj = Parameter(DenseMatrix(d.in_dim, d.node_emb), prefix + ".node_proj");
  edge_proj = Parameter(DenseMatrix(d.edge_in_dim, d.edge_emb), prefix + ".edge_proj");
  res_proj = Parameter(DenseMatrix(d.node_emb, d.node_emb), prefix + ".res_proj");
  att_mlp = Mlp({mlp_widths(2 * d.node_emb + d.edge_emb, d.hidden, d.heads, d.att_depth), false,
                 drop.attention},
                prefix + ".att_mlp");
  prop_mlp = Mlp({mlp_widths(d.node_emb + d.edge_emb, d.hidden, d.node_emb, d.prop_depth), true,
                  drop.propagation},
                 prefix + ".prop_mlp");
  agg_mlp = Mlp({mlp_widths(2 * d.node_emb, d.hidden, d.out_dim, d.agg_depth), true,
                 drop.aggregation},
                prefix + ".agg_mlp");
}

void GipaLayerParams::init_glorot(Rng& rng) {
  node_proj.value = glorot_uniform(dims.in_dim, dims.node_emb, rng);
  if (dims.edge_in_dim > 0) edge_proj.value = glorot_uniform(dims.edge_in_dim, dims.edge_emb, rng);
  res_proj.value = glorot_uniform(dims.node_emb, dims.node_emb, rng);
  att_mlp.init_glorot(rng);
  prop_mlp.init_glorot(rng);
  agg_mlp.init_glorot(rng);
}

void GipaLayerParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&node_proj);
  out.push_back(&edge_proj);
  out.push_back(&res_proj);
  att_mlp.collect(out);
  prop_mlp.collect(out);
  agg_mlp.collect(out);
}

void project_inputs(const CsrGraph& g, const DenseMatrix& x, const GipaLayerParams& params,
                    Phase phase, Rng& rng, LayerActivations& act) {
  require_shape(x.rows() == g.num_nodes(), "project_inputs: x has " + std::to_string(x.rows()) +
                                               " rows for " + std::to_string(g.num_nodes()) +
                                               " nodes");
  require_shape(g.edge_dim() == params.dims.edge_in_dim,
                "project_inputs: edge feature width " + std::to_string(g.edge_dim()) +
                    ", layer expects " + std::to_string(params.dims.edge_in_dim));
  act.input = x;
  act.node_emb = dropout(linear(x, params.node_proj), params.node_dropout, rng, phase, act.node_mask);
  act.edge_emb = linear(g.edge_features(), params.edge_proj);
}

DenseMatrix attention_scores(const CsrGraph& g, const DenseMatrix& node_emb,
                             const DenseMatrix& edge_emb, const GipaLayerParams& params,
                             Phase phase, Rng& rng, MlpCache& cache) {
  const std::size_t dh = node_emb.cols(), de = edge_emb.cols();
  auto dst = g.entry_destinations();
  auto src = g.col_indices();
  auto eid = g.edge_ids();
  DenseMatrix in(g.num_edges(), 2 * dh + de);
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    auto row = in.row(k);
    std::ranges::copy(node_emb.row(dst[k]), row.begin());
    std::ranges::copy(node_emb.row(src[k]), row.begin() + dh);
    std::ranges::copy(edge_emb.row(eid[k]), row.begin() + 2 * dh);
  }
  return params.att_mlp.forward(in, phase, rng, cache);
}

DenseMatrix edge_softmax(const CsrGraph& g, const DenseMatrix& scores) {
  require_shape(scores.rows() == g.num_edges(), "edge_softmax: scores rows " +
                                                    std::to_string(scores.rows()) + " vs " +
                                                    std::to_string(g.num_edges()) + " entries");
  const std::size_t heads = scores.cols();
  DenseMatrix out(scores.rows(), heads);
  auto off = g.row_offsets();
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const std::size_t b = off[i], e = off[i + 1];
    if (b == e) continue;
    for (std::size_t h = 0; h < heads; ++h) {
      double mx = scores(b, h);
      for (std::size_t k = b + 1; k < e; ++k) mx = std::max(mx, scores(k, h));
      double sum = 0.0;
      for (std::size_t k = b; k < e; ++k) {
        out(k, h) = std::exp(scores(k, h) - mx);
        sum += out(k, h);
      }
      for (std::size_t k = b; k < e; ++k) out(k, h) /= sum;
    }
  }
  return out;
}

DenseMatrix edge_softmax_backward(const CsrGraph& g, const DenseMatrix& attention,
                                  const DenseMatrix& grad_attention) {
  require_shape(attention.same_shape(grad_attention) && attention.rows() == g.num_edges(),
                "edge_softmax_backward: shape mismatch");
  const std::size_t heads = attention.cols();
  DenseMatrix out(attention.rows(), heads);
  auto off = g.row_offsets();
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const std::size_t b = off[i], e = off[i + 1];
    for (std::size_t h = 0; h < heads; ++h) {
      double dot = 0.0;
      for (std::size_t k = b; k < e; ++k) dot += attention(k, h) * grad_attention(k, h);
      for (std::size_t k = b; k < e; ++k) out(k, h) = attention(k, h) * (grad_attention(k, h) - dot);
    }
  }
  return out;
}

DenseMatrix propagate(const CsrGraph& g, const DenseMatrix& node_emb, const DenseMatrix& edge_emb,
                      const GipaLayerParams& params, Phase phase, Rng& rng, MlpCache& cache) {
  const std::size_t dh = node_emb.cols(), de = edge_emb.cols();
  auto src = g.col_indices();
  auto eid = g.edge_ids();
  DenseMatrix in(g.num_edges(), dh + de);
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    auto row = in.row(k);
    std::ranges::copy(node_emb.row(src[k]), row.begin());
    if (!params.ablate_prop_edges) std::ranges::copy(edge_emb.row(eid[k]), row.begin() + dh);
  }
  return params.prop_mlp.forward(in, phase, rng, cache);
}

DenseMatrix fuse_message(const DenseMatrix& attention, const DenseMatrix& propagated,
                         std::size_t heads) {
  if (heads == 0 || propagated.cols() % heads != 0) {
    throw ShapeError("fuse_message: " + std::to_string(heads) + " heads do not divide width " +
                     std::to_string(propagated.cols()));
  }
  require_shape(attention.rows() == propagated.rows() && attention.cols() == heads,
                "fuse_message: attention " + shape_string(attention) + " vs propagated " +
                    shape_string(propagated));
  const std::size_t block = propagated.cols() / heads;
  DenseMatrix out(propagated.rows(), propagated.cols());
  for (std::size_t k = 0; k < propagated.rows(); ++k) {
    for (std::size_t h = 0; h < heads; ++h) {
      const double w = attention(k, h);
      for (std::size_t c = h * block; c < (h + 1) * block; ++c) out(k, c) = w * propagated(k, c);
    }
  }
  return out;
}

FuseGrads fuse_message_backward(const DenseMatrix& attention, const DenseMatrix& propagated,
                                std::size_t heads, const DenseMatrix& grad_messages) {
  require_shape(grad_messages.same_shape(propagated), "fuse_message_backward: shape mismatch");
  const std::size_t block = propagated.cols() / heads;
  FuseGrads out{DenseMatrix(attention.rows(), heads),
                DenseMatrix(propagated.rows(), propagated.cols())};
  for (std::size_t k = 0; k < propagated.rows(); ++k) {
    for (std::size_t h = 0; h < heads; ++h) {
      const double w = attention(k, h);
      double acc = 0.0;
      for (std::size_t c = h * block; c < (h + 1) * block; ++c) {
        acc += propagated(k, c) * grad_messages(k, c);
        out.propagated(k, c) = w * grad_messages(k, c);
      }
      out.attention(k, h) = acc;
    }
  }
  return out;
}

DenseMatrix segment_sum(const CsrGraph& g, const DenseMatrix& per_entry) {
  require_shape(per_entry.rows() == g.num_edges(), "segment_sum: row count mismatch");
  DenseMatrix out(g.num_nodes(), per_entry.cols());
  auto off = g.row_offsets();
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) add_into(dst, per_entry.row(k));
  }
  return out;
}

DenseMatrix aggregate(const CsrGraph& g, const DenseMatrix& messages, const DenseMatrix& node_emb,
                      const GipaLayerParams& params, Phase phase, Rng& rng,
                      LayerActivations& act) {
  act.node_messages = segment_sum(g, messages);
  act.residual = linear(node_emb, params.res_proj);
  return params.agg_mlp.forward(concat_cols({&act.node_messages, &act.residual}), phase, rng,
                                act.agg_cache);
}

LayerActivations layer_forward(const CsrGraph& g, const DenseMatrix& x,
                               const GipaLayerParams& params, Phase phase, Rng& rng) {
  LayerActivations act;
  project_inputs(g, x, params, phase, rng, act);
  act.scores = attention_scores(g, act.node_emb, act.edge_emb, params, phase, rng, act.att_cache);
  act.attention = edge_softmax(g, act.scores);
  act.propagated = propagate(g, act.node_emb, act.edge_emb, params, phase, rng, act.prop_cache);
  act.messages = fuse_message(act.attention, act.propagated, params.dims.heads);
  act.output = aggregate(g, act.messages, act.node_emb, params, phase, rng, act);
  return act;
}

LayerInputGrads layer_backward(const CsrGraph& g, GipaLayerParams& params,
                               const LayerActivations& act, const DenseMatrix& grad_output) {
  require_shape(grad_output.same_shape(act.output),
                "layer_backward: grad " + shape_string(grad_output) + " vs output " +
                    shape_string(act.output));
  require_shape(act.scores.rows() == g.num_edges() && act.node_emb.rows() == g.num_nodes() &&
                    act.edge_emb.rows() == g.num_undirected_edges(),
                "layer_backward: activations do not belong to this graph");
  const std::size_t dh = params.dims.node_emb, de = params.dims.edge_emb;
  auto dst = g.entry_destinations();
  auto src = g.col_indices();
  auto eid = g.edge_ids();

  auto agg_grads = split_cols(params.agg_mlp.backward(act.agg_cache, grad_output), {dh, dh});
  const DenseMatrix& grad_node_messages = agg_grads[0];
  DenseMatrix grad_h = linear_backward(act.node_emb, params.res_proj, nullptr, agg_grads[1]);
  DenseMatrix grad_e(act.edge_emb.rows(), de);

  DenseMatrix grad_messages(g.num_edges(), dh);
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    std::ranges::copy(grad_node_messages.row(dst[k]), grad_messages.row(k).begin());
  }
  auto fused = fuse_message_backward(act.attention, act.propagated, params.dims.heads, grad_messages);
  DenseMatrix grad_scores = edge_softmax_backward(g, act.attention, fused.attention);

  DenseMatrix grad_prop_in = params.prop_mlp.backward(act.prop_cache, fused.propagated);
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    auto row = grad_prop_in.row(k);
    add_into(grad_h.row(src[k]), row.subspan(0, dh));
    if (!params.ablate_prop_edges) add_into(grad_e.row(eid[k]), row.subspan(dh, de));
  }

  DenseMatrix grad_att_in = params.att_mlp.backward(act.att_cache, grad_scores);
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    auto row = grad_att_in.row(k);
    add_into(grad_h.row(dst[k]), row.subspan(0, dh));
    add_into(grad_h.row(src[k]), row.subspan(dh, dh));
    add_into(grad_e.row(eid[k]), row.subspan(2 * dh, de));
  }

  LayerInputGrads out;
  out.node = linear_backward(act.input, params.node_proj, nullptr,
                             dropout_backward(act.node_mask, grad_h));
  out.edge = linear_backward(g.edge_features(), params.edge_proj, nullptr, grad_e);
  return out;
}

}  // namespace gipa
