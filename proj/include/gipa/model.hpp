#pragma once

#include <vector>

#include "gipa/graph.hpp"
#include "gipa/layer.hpp"
#include "gipa/nn.hpp"

namespace gipa {

struct ModelSpec {
  std::size_t node_in = 0;
  std::size_t edge_in = 0;
  std::size_t num_labels = 0;
  std::size_t num_layers = 6;
  std::size_t node_emb = 80;
  std::size_t edge_emb = 16;
  std::size_t heads = 8;
  std::size_t hidden = 80;
  std::size_t att_depth = 2;
  std::size_t prop_depth = 2;
  GipaDropout dropout;
  double final_dropout = 0.5;
  bool ablate_prop_edges = false;
};

struct ModelActivations {
  std::vector<LayerActivations> layers;
  DropoutMask final_mask;
  MlpCache classifier_cache;
  DenseMatrix logits;  // [n x num_labels]
};

struct InputGrads {
  DenseMatrix node;
  DenseMatrix edge;
};

/// A stack of GIPA layers followed by a dropout + fully connected classifier.
/// Layer 0 reads the graph's node features; every layer re-projects the raw
/// edge features through its own edge_proj.
class GipaModel {
 public:
  explicit GipaModel(const ModelSpec& spec);

  void init_glorot(Rng& rng);

  const ModelSpec& spec() const { return spec_; }
  std::vector<GipaLayerParams>& layers() { return layers_; }
  const std::vector<GipaLayerParams>& layers() const { return layers_; }
  Mlp& classifier() { return classifier_; }
  const Mlp& classifier() const { return classifier_; }

  ModelActivations forward(const CsrGraph& g, Phase phase, Rng& rng) const;
  // Accumulates parameter gradients; returns gradients w.r.t. the graph's
  // node and edge input features.
  InputGrads backward(const CsrGraph& g, const ModelActivations& act,
                      const DenseMatrix& grad_logits);

  std::vector<Parameter*> parameters();
  void zero_grad();

 private:
  ModelSpec spec_;
  std::vector<GipaLayerParams> layers_;
  Mlp classifier_;
};

}  // namespace gipa
