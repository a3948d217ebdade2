#include "gipa/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gipa {
namespace {

double objective(const DenseMatrix& logits, const DenseMatrix& weights) {
  double s = 0.0;
  auto a = logits.data();
  auto b = weights.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<std::size_t> probe_indices(std::size_t size, std::size_t max_entries, Rng& rng) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  if (max_entries == 0 || max_entries >= size) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(max_entries);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct Comparer {
  const GradCheckOptions& opt;

  void add(TensorCheck& t, double analytic, double numeric) const {
    const double abs_err = std::abs(analytic - numeric);
    t.entries_checked += 1;
    t.max_abs_error = std::max(t.max_abs_error, abs_err);
    if (abs_err <= opt.abs_tol) return;
    const double rel = abs_err / std::max(std::abs(analytic), std::abs(numeric));
    t.max_rel_error = std::max(t.max_rel_error, rel);
    if (rel >= opt.rel_tol) t.passed = false;
  }
};

}  // namespace

CsrGraph random_graph(std::size_t n, double avg_degree, std::size_t node_dim,
                      std::size_t edge_dim, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix x(n, node_dim);
  for (double& v : x.data()) v = u(rng);
  const auto m = n < 2 ? 0 : static_cast<std::size_t>(std::llround(avg_degree * static_cast<double>(n) / 2.0));
  std::vector<InputEdge> edges(m);
  if (m > 0) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1), pick_other(0, n - 2);
    for (auto& e : edges) {
      e.src = pick(rng);
      e.dst = pick_other(rng);
      if (e.dst >= e.src) ++e.dst;
      e.features.resize(edge_dim);
      for (double& v : e.features) v = u(rng);
    }
  }
  return build_graph(edges, std::move(x), edge_dim);
}

GradCheckReport run_gradcheck(const TrainConfig& cfg_in, const GradCheckOptions& opt) {
  if (opt.nodes == 0) throw std::invalid_argument("gradcheck: need at least one node");
  TrainConfig cfg = cfg_in;
  cfg.num_gipa_layers = opt.layers;
  validate(cfg);

  Rng rng(opt.seed);
  const CsrGraph graph = random_graph(opt.nodes, opt.avg_degree, opt.node_dim, opt.edge_dim, rng);
  GipaModel model(model_spec(cfg, opt.node_dim, opt.edge_dim, opt.num_labels));
  model.init_glorot(rng);
  // Non-zero biases so every bias path carries signal.
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto* p : model.parameters()) {
    if (p->name.find(".b") != std::string::npos) {
      for (double& v : p->value.data()) v = u(rng);
    }
  }
  DenseMatrix weights(opt.nodes, opt.num_labels);
  for (double& v : weights.data()) v = u(rng);
  const std::uint64_t dropout_seed = rng();

  auto loss_of = [&](const CsrGraph& g) {
    Rng r(dropout_seed);
    return objective(model.forward(g, Phase::train, r).logits, weights);
  };

  Rng r(dropout_seed);
  auto act = model.forward(graph, Phase::train, r);
  model.zero_grad();
  InputGrads input_grads = model.backward(graph, act, weights);
  if (opt.tamper) opt.tamper(model, input_grads);

  const Comparer cmp{opt};
  const double h = opt.step;
  GradCheckReport report;
  for (auto* p : model.parameters()) {
    TensorCheck t{p->name};
    for (std::size_t i : probe_indices(p->value.size(), opt.max_entries, rng)) {
      double& v = p->value.data()[i];
      const double orig = v;
      v = orig + h;
      const double plus = loss_of(graph);
      v = orig - h;
      const double minus = loss_of(graph);
      v = orig;
      cmp.add(t, p->grad.data()[i], (plus - minus) / (2.0 * h));
    }
    report.tensors.push_back(t);
  }

  {
    TensorCheck t{"input.node_features"};
    for (std::size_t i : probe_indices(graph.node_features().size(), opt.max_entries, rng)) {
      DenseMatrix x = graph.node_features();
      const double orig = x.data()[i];
      x.data()[i] = orig + h;
      const double plus = loss_of(graph.with_node_features(x));
      x.data()[i] = orig - h;
      const double minus = loss_of(graph.with_node_features(x));
      cmp.add(t, input_grads.node.data()[i], (plus - minus) / (2.0 * h));
    }
    report.tensors.push_back(t);
  }
  {
    TensorCheck t{"input.edge_features"};
    for (std::size_t i : probe_indices(graph.edge_features().size(), opt.max_entries, rng)) {
      DenseMatrix e = graph.edge_features();
      const double orig = e.data()[i];
      e.data()[i] = orig + h;
      const double plus = loss_of(graph.with_edge_features(e));
      e.data()[i] = orig - h;
      const double minus = loss_of(graph.with_edge_features(e));
      cmp.add(t, input_grads.edge.data()[i], (plus - minus) / (2.0 * h));
    }
    report.tensors.push_back(t);
  }
  report.passed = std::all_of(report.tensors.begin(), report.tensors.end(),
                              [](const TensorCheck& t) { return t.passed; });
  return report;
}

}  // namespace gipa
