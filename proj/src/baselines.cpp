#include "gipa/baselines.hpp"

#include <cmath>
#include <string>

namespace gipa::baselines {
namespace {

std::vector<double> apply(const DenseMatrix& w, Vec q, Vec k) {
  require_shape(w.cols() == q.size() + k.size(),
                "W[q;k]: W " + shape_string(w) + " vs |q|+|k| = " +
                    std::to_string(q.size() + k.size()));
  std::vector<double> out(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) acc += w(r, c) * q[c];
    for (std::size_t c = 0; c < k.size(); ++c) acc += w(r, q.size() + c) * k[c];
    out[r] = acc;
  }
  return out;
}

double dot(Vec a, Vec b) {
  require_shape(a.size() == b.size(), "dot: widths " + std::to_string(a.size()) + " and " +
                                          std::to_string(b.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

double additive_score(Vec q, Vec k, const DenseMatrix& w, Vec u) {
  auto hidden = apply(w, q, k);
  for (double& v : hidden) v = std::tanh(v);
  return dot(u, hidden);
}

double dot_score(Vec q, Vec k) { return dot(q, k); }

double general_score(Vec q, Vec k, const DenseMatrix& w) {
  require_shape(w.rows() == q.size() && w.cols() == k.size(),
                "general_score: W " + shape_string(w) + " vs |q|=" + std::to_string(q.size()) +
                    ", |k|=" + std::to_string(k.size()));
  double acc = 0.0;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < w.cols(); ++c) row += w(r, c) * k[c];
    acc += q[r] * row;
  }
  return acc;
}

std::vector<double> concat_vector(Vec q, Vec k, const DenseMatrix& w) { return apply(w, q, k); }

double concat_score(Vec q, Vec k, const DenseMatrix& w, Vec u) {
  return dot(u, concat_vector(q, k, w));
}

double local_score(Vec q, const DenseMatrix& w) {
  require_shape(w.rows() == 1, "local_score: W must have one row, got " + shape_string(w));
  return dot(w.row(0), q);
}

double scaled_dot_score(Vec q, Vec k) {
  require_shape(!q.empty(), "scaled_dot_score: d_k must be >= 1");
  return dot(q, k) / std::sqrt(static_cast<double>(q.size()));
}

}  // namespace gipa::baselines
