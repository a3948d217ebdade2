#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gipa/model.hpp"
#include "gipa/trainer.hpp"

namespace gipa {

struct GradCheckOptions {
  std::size_t nodes = 12;
  double avg_degree = 3.0;
  std::size_t node_dim = 8;
  std::size_t edge_dim = 8;
  std::size_t num_labels = 4;
  std::size_t layers = 2;
  double step = 1e-5;
  double rel_tol = 1e-4;
  double abs_tol = 1e-7;
  // Entries probed per tensor; 0 probes every entry.
  std::size_t max_entries = 0;
  std::uint64_t seed = 0;
  // Test hook applied to the model after the analytic backward pass, before
  // comparison. Used for negative controls.
  std::function<void(GipaModel&, InputGrads&)> tamper;
};

struct TensorCheck {
  std::string name;
  std::size_t entries_checked = 0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;  // over entries whose absolute error exceeds abs_tol
  bool passed = true;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;  // every parameter, then node_features, edge_features
  bool passed = true;
};

/// Central finite-difference check of GipaModel::backward on a random graph
/// with features in [-1, 1]. The scalar objective is sum(R .* logits) for a
/// fixed random R. Forwards run in training mode with a reseeded generator,
/// so every call sees identical dropout masks.
GradCheckReport run_gradcheck(const TrainConfig& cfg, const GradCheckOptions& opt);

// Random graph used by run_gradcheck: round(n*avg_degree/2) uniformly drawn
// edges, features uniform in [-1, 1].
CsrGraph random_graph(std::size_t n, double avg_degree, std::size_t node_dim,
                      std::size_t edge_dim, Rng& rng);

}  // namespace gipa
