#include "lgcn/dense.hpp"

#include <algorithm>
#include <cmath>

#include "lgcn/error.hpp"

namespace lgcn {

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: length mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

void axpy(double a, const DenseMatrix& x, DenseMatrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DimensionMismatch("axpy: shape mismatch");
  }
  auto xs = x.values();
  auto ys = y.values();
  for (std::size_t k = 0; k < xs.size(); ++k) ys[k] += a * xs[k];
}

void scale(DenseMatrix& x, double a) {
  for (double& v : x.values()) v *= a;
}

double frobenius_norm(const DenseMatrix& x) { return std::sqrt(squared_norm(x.values())); }

double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("max_abs_difference: shape mismatch");
  }
  double worst = 0.0;
  auto as = a.values();
  auto bs = b.values();
  for (std::size_t k = 0; k < as.size(); ++k) worst = std::max(worst, std::abs(as[k] - bs[k]));
  return worst;
}

bool all_finite(const DenseMatrix& x) {
  return std::all_of(x.values().begin(), x.values().end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace lgcn
