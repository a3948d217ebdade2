#include "gipa/model.hpp"

#include <string>

namespace gipa {

GipaModel::GipaModel(const ModelSpec& spec) : spec_(spec) {
  if (spec.num_layers == 0) throw std::invalid_argument("ModelSpec: num_layers must be >= 1");
  if (spec.num_labels == 0) throw std::invalid_argument("ModelSpec: num_labels must be >= 1");
  if (!(spec.final_dropout >= 0.0 && spec.final_dropout < 1.0)) {
    throw std::invalid_argument("ModelSpec: final dropout must lie in [0, 1)");
  }
  layers_.reserve(spec.num_layers);
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    GipaLayerDims d;
    d.in_dim = l == 0 ? spec.node_in : spec.node_emb;
    d.edge_in_dim = spec.edge_in;
    d.node_emb = spec.node_emb;
    d.edge_emb = spec.edge_emb;
    d.heads = spec.heads;
    d.hidden = spec.hidden;
    d.out_dim = spec.node_emb;
    d.att_depth = spec.att_depth;
    d.prop_depth = spec.prop_depth;
    layers_.emplace_back(d, spec.dropout, "layer" + std::to_string(l));
    layers_.back().ablate_prop_edges = spec.ablate_prop_edges;
  }
  classifier_ = Mlp({{spec.node_emb, spec.num_labels}, true, 0.0}, "classifier");
}

void GipaModel::init_glorot(Rng& rng) {
  for (auto& l : layers_) l.init_glorot(rng);
  classifier_.init_glorot(rng);
}

ModelActivations GipaModel::forward(const CsrGraph& g, Phase phase, Rng& rng) const {
  ModelActivations act;
  act.layers.reserve(layers_.size());
  const DenseMatrix* x = &g.node_features();
  for (const auto& layer : layers_) {
    act.layers.push_back(layer_forward(g, *x, layer, phase, rng));
    x = &act.layers.back().output;
  }
  DenseMatrix dropped = dropout(*x, spec_.final_dropout, rng, phase, act.final_mask);
  act.logits = classifier_.forward(dropped, phase, rng, act.classifier_cache);
  return act;
}

InputGrads GipaModel::backward(const CsrGraph& g, const ModelActivations& act,
                               const DenseMatrix& grad_logits) {
  require_shape(act.layers.size() == layers_.size(), "GipaModel::backward: stale activations");
  DenseMatrix grad =
      dropout_backward(act.final_mask, classifier_.backward(act.classifier_cache, grad_logits));
  InputGrads out{DenseMatrix(), DenseMatrix(g.num_undirected_edges(), g.edge_dim())};
  for (std::size_t l = layers_.size(); l-- > 0;) {
    auto lg = layer_backward(g, layers_[l], act.layers[l], grad);
    out.edge += lg.edge;
    grad = std::move(lg.node);
  }
  out.node = std::move(grad);
  return out;
}

std::vector<Parameter*> GipaModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) l.collect(out);
  classifier_.collect(out);
  return out;
}

void GipaModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

}  // namespace gipa
