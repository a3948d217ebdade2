#include <algorithm>
#include <cmath>

#include "dense_oracle.hpp"
#include "doctest.h"
#include "gipa/layer.hpp"
#include "gipa/model.hpp"
#include "test_support.hpp"

using namespace gipa;
using testing::grads_agree;
using testing::numeric_grad;
using testing::random_matrix;

namespace {

GipaLayerDims small_dims(std::size_t in = 5, std::size_t edge_in = 3) {
  GipaLayerDims d;
  d.in_dim = in;
  d.edge_in_dim = edge_in;
  d.node_emb = 8;
  d.edge_emb = 4;
  d.heads = 4;
  d.hidden = 6;
  d.out_dim = 5;
  return d;
}

GipaLayerParams random_params(Rng& rng, const GipaLayerDims& d = small_dims(),
                              const GipaDropout& drop = {}) {
  GipaLayerParams p(d, drop, "l");
  p.init_glorot(rng);
  for (auto* b : [&] { std::vector<Parameter*> v; p.collect(v); return v; }()) {
    if (b->name.find(".b") != std::string::npos) b->value = random_matrix(1, b->value.cols(), rng);
  }
  return p;
}

void zero_all(GipaLayerParams& p) {
  std::vector<Parameter*> ps;
  p.collect(ps);
  for (auto* q : ps) q->value.fill(0.0);
}

}  // namespace

TEST_CASE("project_inputs") {
  Rng rng(1);
  auto edges = testing::random_edges(6, 8, 3, rng);
  SUBCASE("identity projections reproduce inputs") {
    GipaLayerDims d = small_dims(8, 4);
    GipaLayerParams p(d, {0, 0, 0, 0}, "l");
    for (std::size_t i = 0; i < 8; ++i) p.node_proj.value(i, i) = 1.0;
    for (std::size_t i = 0; i < 4; ++i) p.edge_proj.value(i, i) = 1.0;
    auto e4 = testing::random_edges(6, 8, 4, rng);
    auto g = build_graph(e4, random_matrix(6, 8, rng));
    LayerActivations act;
    project_inputs(g, g.node_features(), p, Phase::train, rng, act);
    CHECK(act.node_emb == g.node_features());
    CHECK(act.edge_emb == g.edge_features());
  }
  SUBCASE("zero features give zero embeddings") {
    auto p = random_params(rng);
    std::vector<InputEdge> zero_edges = edges;
    for (auto& e : zero_edges) std::fill(e.features.begin(), e.features.end(), 0.0);
    auto g = build_graph(zero_edges, DenseMatrix(6, 5));
    LayerActivations act;
    project_inputs(g, g.node_features(), p, Phase::eval, rng, act);
    CHECK(act.node_emb == DenseMatrix(6, 8));
    CHECK(act.edge_emb == DenseMatrix(g.num_undirected_edges(), 4));
  }
  SUBCASE("shape mismatch") {
    auto p = random_params(rng);
    auto g = build_graph(edges, DenseMatrix(6, 5));
    LayerActivations act;
    CHECK_THROWS_AS(project_inputs(g, DenseMatrix(6, 4), p, Phase::eval, rng, act), ShapeError);
    CHECK_THROWS_AS(project_inputs(g, DenseMatrix(5, 5), p, Phase::eval, rng, act), ShapeError);
  }
}

TEST_CASE("attention_scores") {
  Rng rng(2);
  auto p = random_params(rng);
  SUBCASE("zero weights give zero scores") {
    auto g = build_graph(testing::random_edges(7, 10, 3, rng), random_matrix(7, 5, rng));
    for (auto& w : p.att_mlp.weights()) w.value.fill(0.0);
    MlpCache c;
    auto s = attention_scores(g, random_matrix(7, 8, rng), random_matrix(g.num_undirected_edges(), 4, rng),
                              p, Phase::eval, rng, c);
    CHECK(s == DenseMatrix(g.num_edges(), 4));
  }
  SUBCASE("single edge equals direct evaluation of the triple") {
    auto g = build_graph({{0, 1, {0.1, 0.2, 0.3}}}, random_matrix(2, 5, rng));
    DenseMatrix h = random_matrix(2, 8, rng), e = random_matrix(1, 4, rng);
    MlpCache c;
    auto s = attention_scores(g, h, e, p, Phase::eval, rng, c);
    // entry 0 is 0<-1, entry 1 is 1<-0
    auto direct = oracle::mlp(p.att_mlp, oracle::cat(oracle::cat(oracle::to_mat(h)[0], oracle::to_mat(h)[1]),
                                                      oracle::to_mat(e)[0]));
    for (std::size_t hd = 0; hd < 4; ++hd) CHECK(s(0, hd) == doctest::Approx(direct[hd]).epsilon(1e-14));
  }
}

TEST_CASE("edge_softmax examples") {
  auto g = build_graph({{0, 1, {1.0}}, {0, 2, {1.0}}}, DenseMatrix(4, 1));
  // node 0 has two in-entries, nodes 1 and 2 one each, node 3 none
  REQUIRE(g.degree(0) == 2);
  const double ln3 = std::log(3.0);
  DenseMatrix scores(g.num_edges(), 2);
  auto seg0 = g.in_neighbors(0).begin_entry;
  scores(seg0, 0) = 0.0;
  scores(seg0 + 1, 0) = ln3;
  scores(seg0, 1) = 0.7;
  scores(seg0 + 1, 1) = 0.7;
  scores(g.in_neighbors(1).begin_entry, 0) = 5.0;
  auto a = edge_softmax(g, scores);
  CHECK(a(seg0, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(a(seg0 + 1, 0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(a(seg0, 1) == 0.5);
  CHECK(a(seg0 + 1, 1) == 0.5);
  CHECK(a(g.in_neighbors(1).begin_entry, 0) == 1.0);
  CHECK(a(g.in_neighbors(2).begin_entry, 1) == 1.0);
}

TEST_CASE("edge_softmax normalization, shift invariance and large scores") {
  Rng rng(3);
  auto g = build_graph(testing::random_edges(15, 40, 1, rng), DenseMatrix(15, 1));
  DenseMatrix s = random_matrix(g.num_edges(), 3, rng, -20, 20);
  auto a = edge_softmax(g, s);
  DenseMatrix shifted = s;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const double c = 100.0 * (static_cast<double>(i) - 7.0);
    auto nb = g.in_neighbors(i);
    for (std::size_t k = 0; k < nb.size(); ++k)
      for (std::size_t h = 0; h < 3; ++h) shifted(nb.begin_entry + k, h) += c;
  }
  auto a2 = edge_softmax(g, shifted);
  CHECK(max_abs_diff(a, a2) <= 1e-12);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    auto nb = g.in_neighbors(i);
    if (nb.empty()) continue;
    for (std::size_t h = 0; h < 3; ++h) {
      double sum = 0.0;
      for (std::size_t k = 0; k < nb.size(); ++k) sum += a(nb.begin_entry + k, h);
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
  DenseMatrix huge(g.num_edges(), 1, 1e300);
  CHECK(edge_softmax(g, huge).all_finite());
}

TEST_CASE("edge_softmax backward matches finite differences") {
  Rng rng(4);
  auto g = build_graph(testing::random_edges(8, 14, 1, rng), DenseMatrix(8, 1));
  DenseMatrix s = random_matrix(g.num_edges(), 2, rng);
  DenseMatrix r = random_matrix(g.num_edges(), 2, rng);
  auto f = [&] { return testing::weighted_sum(edge_softmax(g, s), r); };
  auto analytic = edge_softmax_backward(g, edge_softmax(g, s), r);
  CHECK(grads_agree(analytic, numeric_grad(s, f)));
}

TEST_CASE("propagate") {
  Rng rng(5);
  auto g = build_graph(testing::random_edges(6, 9, 3, rng), DenseMatrix(6, 5));
  DenseMatrix h = random_matrix(6, 8, rng), e = random_matrix(g.num_undirected_edges(), 4, rng);
  SUBCASE("zero weights") {
    auto p = random_params(rng);
    zero_all(p);
    MlpCache c;
    CHECK(propagate(g, h, e, p, Phase::eval, rng, c) == DenseMatrix(g.num_edges(), 8));
  }
  SUBCASE("identity node block returns the neighbor embedding") {
    GipaLayerDims d = small_dims();
    d.prop_depth = 1;
    GipaLayerParams p(d, {}, "l");
    for (std::size_t i = 0; i < 8; ++i) p.prop_mlp.weights()[0].value(i, i) = 1.0;
    MlpCache c;
    auto out = propagate(g, h, e, p, Phase::eval, rng, c);
    for (std::size_t k = 0; k < g.num_edges(); ++k) {
      const auto src = g.col_indices()[k];
      for (std::size_t j = 0; j < 8; ++j) CHECK(out(k, j) == h(src, j));
    }
  }
}

TEST_CASE("fuse_message") {
  CHECK(fuse_message(DenseMatrix{{1}}, DenseMatrix{{3, 4}}, 1) == DenseMatrix{{3, 4}});
  CHECK(fuse_message(DenseMatrix{{0.25, 0.75}}, DenseMatrix{{1, 1, 1, 1}}, 2) ==
        DenseMatrix{{0.25, 0.25, 0.75, 0.75}});
  CHECK_THROWS_AS(fuse_message(DenseMatrix{{1, 1, 1}}, DenseMatrix{{1, 1, 1, 1}}, 3), ShapeError);

  Rng rng(6);
  for (std::size_t heads : {1, 2, 3, 6}) {
    DenseMatrix a = random_matrix(5, heads, rng), p = random_matrix(5, 6, rng);
    auto m = fuse_message(a, p, heads);
    // slice each head's block separately and reassemble
    const std::size_t w = 6 / heads;
    for (std::size_t k = 0; k < 5; ++k)
      for (std::size_t hd = 0; hd < heads; ++hd)
        for (std::size_t c = 0; c < w; ++c) CHECK(m(k, hd * w + c) == a(k, hd) * p(k, hd * w + c));

    DenseMatrix r = random_matrix(5, 6, rng);
    auto grads = fuse_message_backward(a, p, heads, r);
    auto f = [&] { return testing::weighted_sum(fuse_message(a, p, heads), r); };
    CHECK(grads_agree(grads.attention, numeric_grad(a, f)));
    CHECK(grads_agree(grads.propagated, numeric_grad(p, f)));
  }
}

TEST_CASE("aggregate") {
  Rng rng(7);
  auto p = random_params(rng);
  SUBCASE("isolated node sees a zero message") {
    auto g = build_graph({{0, 1, {1, 2, 3}}}, DenseMatrix(3, 5));
    DenseMatrix m = random_matrix(g.num_edges(), 8, rng), h = random_matrix(3, 8, rng);
    LayerActivations act;
    auto o = aggregate(g, m, h, p, Phase::eval, rng, act);
    auto hr = oracle::vec_times(oracle::to_mat(h)[2], p.res_proj.value);
    auto expect = oracle::mlp(p.agg_mlp, oracle::cat(oracle::Vec(8, 0.0), hr));
    for (std::size_t j = 0; j < 5; ++j) CHECK(o(2, j) == doctest::Approx(expect[j]).epsilon(1e-14));
    for (std::size_t j = 0; j < 8; ++j) CHECK(act.node_messages(2, j) == 0.0);
  }
  SUBCASE("single neighbor passes its message through") {
    auto g = build_graph({{0, 1, {1, 2, 3}}}, DenseMatrix(2, 5));
    DenseMatrix m = random_matrix(2, 8, rng);
    LayerActivations act;
    aggregate(g, m, random_matrix(2, 8, rng), p, Phase::eval, rng, act);
    for (std::size_t j = 0; j < 8; ++j) CHECK(act.node_messages(0, j) == m(0, j));
  }
  SUBCASE("star hub sums three equal messages") {
    auto g = build_graph({{0, 1, {1, 0, 0}}, {0, 2, {0, 1, 0}}, {0, 3, {0, 0, 1}}}, DenseMatrix(4, 5));
    DenseMatrix m(g.num_edges(), 8);
    auto hub = g.in_neighbors(0);
    DenseMatrix v = random_matrix(1, 8, rng);
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t j = 0; j < 8; ++j) m(hub.begin_entry + k, j) = v(0, j);
    LayerActivations act;
    aggregate(g, m, random_matrix(4, 8, rng), p, Phase::eval, rng, act);
    for (std::size_t j = 0; j < 8; ++j) CHECK(act.node_messages(0, j) == doctest::Approx(3 * v(0, j)));
  }
}

TEST_CASE("layer_forward matches the dense oracle") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    auto edges = testing::random_edges(n, rng() % (3 * n), 3, rng);
    auto g = build_graph(edges, random_matrix(n, 5, rng));
    auto p = random_params(rng);
    auto act = layer_forward(g, g.node_features(), p, Phase::eval, rng);
    auto dense = oracle::layer(oracle::adjacency(n, edges), oracle::to_mat(g.node_features()), p);
    CHECK(oracle::max_dev(dense, act.output) <= 1e-10);
  }
}

TEST_CASE("layer_forward determinism and zero network") {
  Rng rng(9);
  auto g = build_graph(testing::random_edges(10, 20, 3, rng), random_matrix(10, 5, rng));
  auto p = random_params(rng);
  Rng r1(1), r2(2);
  CHECK(layer_forward(g, g.node_features(), p, Phase::eval, r1).output ==
        layer_forward(g, g.node_features(), p, Phase::eval, r2).output);

  zero_all(p);
  p.agg_mlp.biases().back().value = DenseMatrix{{1, 2, 3, 4, 5}};
  auto o = layer_forward(g, g.node_features(), p, Phase::eval, rng).output;
  for (std::size_t i = 0; i < 10; ++i) CHECK(o.row(i)[4] == 5.0);
}

TEST_CASE("layer_backward") {
  Rng rng(10);
  const std::size_t n = 12;
  auto g = build_graph(testing::random_edges(n, 18, 3, rng), random_matrix(n, 5, rng));

  SUBCASE("zero upstream gradient") {
    auto p = random_params(rng);
    auto act = layer_forward(g, g.node_features(), p, Phase::train, rng);
    auto grads = layer_backward(g, p, act, DenseMatrix(n, 5));
    std::vector<Parameter*> ps;
    p.collect(ps);
    for (auto* q : ps) CHECK(q->grad == DenseMatrix(q->value.rows(), q->value.cols()));
    CHECK(grads.node == DenseMatrix(n, 5));
    CHECK(grads.edge == DenseMatrix(g.num_undirected_edges(), 3));
  }

  SUBCASE("stale activations are rejected") {
    auto p = random_params(rng);
    auto act = layer_forward(g, g.node_features(), p, Phase::eval, rng);
    auto other = build_graph(testing::random_edges(n, 5, 3, rng), random_matrix(n, 5, rng));
    CHECK_THROWS_AS(layer_backward(other, p, act, DenseMatrix(n, 5)), ShapeError);
    CHECK_THROWS_AS(layer_backward(g, p, act, DenseMatrix(n, 4)), ShapeError);
  }

  SUBCASE("every gradient matches finite differences") {
    for (bool ablate : {false, true}) {
      auto p = random_params(rng);
      p.ablate_prop_edges = ablate;
      DenseMatrix r = random_matrix(n, 5, rng);
      const std::uint64_t seed = rng();
      DenseMatrix x = g.node_features();
      DenseMatrix ef = g.edge_features();
      auto f = [&] {
        Rng local(seed);
        auto gg = g.with_node_features(x).with_edge_features(ef);
        return testing::weighted_sum(layer_forward(gg, x, p, Phase::train, local).output, r);
      };
      Rng local(seed);
      auto act = layer_forward(g, x, p, Phase::train, local);
      auto grads = layer_backward(g, p, act, r);
      std::vector<Parameter*> ps;
      p.collect(ps);
      for (auto* q : ps) {
        INFO(q->name);
        CHECK(grads_agree(q->grad, numeric_grad(q->value, f)));
      }
      CHECK(grads_agree(grads.node, numeric_grad(x, f)));
      CHECK(grads_agree(grads.edge, numeric_grad(ef, f)));
    }
  }
}

TEST_CASE("permutation of a node's incoming edges leaves outputs unchanged") {
  Rng rng(11);
  auto edges = testing::random_edges(20, 50, 3, rng);
  auto x = random_matrix(20, 5, rng);
  auto p = random_params(rng);
  auto g = build_graph(edges, x);
  auto base = layer_forward(g, x, p, Phase::eval, rng).output;
  for (int t = 0; t < 5; ++t) {
    std::shuffle(edges.begin(), edges.end(), rng);
    auto g2 = build_graph(edges, x);
    CHECK(g2 == g);
    CHECK(layer_forward(g2, x, p, Phase::eval, rng).output == base);
  }
}

TEST_CASE("input gradients are local to the 1-hop neighborhood") {
  Rng rng(12);
  const std::size_t n = 25;
  auto g = build_graph(testing::random_edges(n, 20, 3, rng, false), random_matrix(n, 5, rng));
  auto p = random_params(rng);
  auto act = layer_forward(g, g.node_features(), p, Phase::eval, rng);
  for (std::size_t target : {0, 7, 13}) {
    DenseMatrix go(n, 5);
    for (std::size_t j = 0; j < 5; ++j) go(target, j) = 1.0;
    auto grads = layer_backward(g, p, act, go);
    std::vector<bool> near(n, false);
    near[target] = true;
    for (auto j : g.in_neighbors(target).nodes) near[j] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (near[i]) continue;
      for (double v : grads.node.row(i)) CHECK(v == 0.0);
    }
    // edges not incident to target receive nothing
    std::vector<bool> incident(g.num_undirected_edges(), false);
    for (auto e : g.in_neighbors(target).edges) incident[e] = true;
    for (std::size_t e = 0; e < incident.size(); ++e) {
      if (incident[e]) continue;
      for (double v : grads.edge.row(e)) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("stacked model") {
  Rng rng(13);
  ModelSpec spec;
  spec.node_in = 5;
  spec.edge_in = 3;
  spec.num_labels = 4;
  spec.node_emb = 8;
  spec.edge_emb = 4;
  spec.heads = 2;
  spec.hidden = 6;

  SUBCASE("one layer is layer_forward plus classifier") {
    spec.num_layers = 1;
    GipaModel m(spec);
    m.init_glorot(rng);
    auto g = build_graph(testing::random_edges(9, 15, 3, rng), random_matrix(9, 5, rng));
    auto act = m.forward(g, Phase::eval, rng);
    auto o = layer_forward(g, g.node_features(), m.layers()[0], Phase::eval, rng).output;
    MlpCache c;
    CHECK(act.logits == m.classifier().forward(o, Phase::eval, rng, c));
  }
  SUBCASE("two layers match two dense-oracle layers") {
    spec.num_layers = 2;
    GipaModel m(spec);
    m.init_glorot(rng);
    auto edges = testing::random_edges(14, 25, 3, rng);
    auto g = build_graph(edges, random_matrix(14, 5, rng));
    auto act = m.forward(g, Phase::eval, rng);
    CHECK(oracle::max_dev(oracle::model(oracle::adjacency(14, edges), g.node_features(), m), act.logits) <= 1e-10);
  }
  SUBCASE("full-width output shape with 112 labels") {
    ModelSpec big;
    big.node_in = 8;
    big.edge_in = 8;
    big.num_labels = 112;
    GipaModel m(big);
    CHECK(m.layers().size() == 6);
    m.init_glorot(rng);
    auto g = build_graph(testing::random_edges(10, 15, 8, rng), random_matrix(10, 8, rng));
    auto act = m.forward(g, Phase::train, rng);
    CHECK(act.logits.rows() == 10);
    CHECK(act.logits.cols() == 112);
  }
  SUBCASE("heads must divide the embedding width") {
    spec.heads = 3;
    CHECK_THROWS_AS(GipaModel{spec}, std::invalid_argument);
  }
}
