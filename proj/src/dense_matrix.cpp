#include "gipa/dense_matrix.hpp"

#include <algorithm>
#include <cmath>

namespace gipa {

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> init)
    : rows_(init.size()), cols_(init.size() == 0 ? 0 : init.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : init) {
    require_shape(r.size() == cols_, "DenseMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::from_data(std::size_t rows, std::size_t cols, std::vector<double> data) {
  require_shape(data.size() == rows * cols, "DenseMatrix::from_data: size mismatch");
  DenseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_ = std::move(data);
  return m;
}

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  require_shape(same_shape(other), "operator+=: " + shape_string(*this) + " vs " + shape_string(other));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

std::string shape_string(const DenseMatrix& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.same_shape(b), "max_abs_diff: " + shape_string(a) + " vs " + shape_string(b));
  double worst = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) worst = std::max(worst, std::abs(da[i] - db[i]));
  return worst;
}

}  // namespace gipa
