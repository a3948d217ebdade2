#include "gipa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gipa {

BceResult bce_with_logits(const DenseMatrix& logits, const DenseMatrix& labels,
                          std::span<const std::size_t> nodes) {
  require_shape(logits.same_shape(labels), "bce_with_logits: logits " + shape_string(logits) +
                                               " vs labels " + shape_string(labels));
  if (nodes.empty()) throw std::invalid_argument("bce_with_logits: empty node mask");
  const std::size_t c = logits.cols();
  const double norm = 1.0 / static_cast<double>(nodes.size() * c);
  BceResult out{0.0, DenseMatrix(logits.rows(), c)};
  for (std::size_t i : nodes) {
    if (i >= logits.rows()) throw std::out_of_range("bce_with_logits: node index out of range");
    for (std::size_t j = 0; j < c; ++j) {
      const double z = logits(i, j), y = labels(i, j);
      out.loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
      const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      out.grad(i, j) += (sig - y) * norm;
    }
  }
  out.loss *= norm;
  return out;
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const double> labels) {
  require_shape(scores.size() == labels.size(), "roc_auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < n;) {
    std::size_t e = b + 1;
    while (e < n && scores[order[e]] == scores[order[b]]) ++e;
    // ranks b+1..e share their mean
    const double midrank = 0.5 * static_cast<double>(b + 1 + e);
    for (std::size_t k = b; k < e; ++k) {
      if (labels[order[k]] > 0.5) {
        pos_rank_sum += midrank;
        ++pos;
      }
    }
    b = e;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

EvalReport evaluate_logits(const DenseMatrix& logits, const DenseMatrix& labels,
                           std::span<const std::size_t> nodes) {
  require_shape(logits.same_shape(labels), "evaluate_logits: shape mismatch");
  EvalReport report;
  report.loss = nodes.empty() ? std::numeric_limits<double>::quiet_NaN()
                              : bce_with_logits(logits, labels, nodes).loss;
  std::vector<double> s(nodes.size()), y(nodes.size());
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t j = 0; j < logits.cols(); ++j) {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      s[k] = logits(nodes[k], j);
      y[k] = labels(nodes[k], j);
    }
    auto auc = roc_auc(s, y);
    report.per_label.push_back(auc);
    if (auc) {
      sum += *auc;
      ++counted;
    } else {
      ++report.excluded_labels;
    }
  }
  report.mean_auc = counted == 0 ? std::numeric_limits<double>::quiet_NaN()
                                 : sum / static_cast<double>(counted);
  return report;
}

}  // namespace gipa
