#pragma once

#include <span>
#include <vector>

#include "gipa/dense_matrix.hpp"

// Classical attention score functions, for comparison against the MLP
// attention of the GIPA layer. Vectors are plain spans; all functions are
// pure and throw ShapeError on width mismatches.
namespace gipa::baselines {

using Vec = std::span<const double>;

// u^T tanh(W [q;k]), W is [r x (|q|+|k|)], |u| = r.
double additive_score(Vec q, Vec k, const DenseMatrix& w, Vec u);

// q^T k
double dot_score(Vec q, Vec k);

// q^T W k, W is [|q| x |k|].
double general_score(Vec q, Vec k, const DenseMatrix& w);

// W [q;k] as a vector, W is [r x (|q|+|k|)].
std::vector<double> concat_vector(Vec q, Vec k, const DenseMatrix& w);
// u^T W [q;k]; reduces the concat form to a scalar.
double concat_score(Vec q, Vec k, const DenseMatrix& w, Vec u);

// W q with W a single row [1 x |q|]; depends on the query alone.
double local_score(Vec q, const DenseMatrix& w);

// q^T k / sqrt(d_k)
double scaled_dot_score(Vec q, Vec k);

}  // namespace gipa::baselines
