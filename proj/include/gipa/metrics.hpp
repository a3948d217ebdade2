#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gipa/dense_matrix.hpp"

namespace gipa {

struct BceResult {
  double loss = 0.0;
  DenseMatrix grad;  // d loss / d logits, zero outside the masked rows
};

// Mean over the masked rows and all label columns of the logistic loss,
// evaluated as max(z,0) - z*y + log(1 + exp(-|z|)). Throws on an empty mask.
BceResult bce_with_logits(const DenseMatrix& logits, const DenseMatrix& labels,
                          std::span<const std::size_t> nodes);

// Rank-based (Mann-Whitney) ROC-AUC with midranks for ties. Labels are
// treated as positive when > 0.5. Returns nullopt unless both classes occur.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const double> labels);

struct EvalReport {
  double mean_auc = 0.0;  // NaN when every label column is degenerate
  std::vector<std::optional<double>> per_label;
  std::size_t excluded_labels = 0;
  double loss = 0.0;
};

// Column-wise AUC of logits against labels restricted to `nodes`.
EvalReport evaluate_logits(const DenseMatrix& logits, const DenseMatrix& labels,
                           std::span<const std::size_t> nodes);

}  // namespace gipa
