#include "xling/matrix.hpp"

#include <cassert>
#include <cmath>
#include <cstdlib>

#include "xling/errors.hpp"

namespace xling {

void Matrix::set_row(std::size_t r, const Vec& v) {
  if (v.size() != cols_) throw ShapeError("set_row: length mismatch");
  std::copy(v.begin(), v.end(), row(r));
}

void Matrix::append_row(const Vec& v) {
  if (cols_ == 0) cols_ = v.size();
  if (v.size() != cols_) throw ShapeError("append_row: length mismatch");
  data_.insert(data_.end(), v.begin(), v.end());
  ++rows_;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Vec matvec(const Matrix& m, const Vec& v) {
  if (m.cols() != v.size()) throw ShapeError("matvec: dimension mismatch");
  Vec out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), v.data(), v.size());
  return out;
}

Vec matvec_t(const Matrix& m, const Vec& v) {
  if (m.rows() != v.size()) throw ShapeError("matvec_t: dimension mismatch");
  Vec out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double vi = v[i];
    if (vi == 0.0) continue;
    const double* row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += vi * row[j];
  }
  return out;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double dot(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  return dot(a.data(), b.data(), a.size());
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

void axpy(double alpha, const Vec& x, Vec& y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double x : m.data()) best = std::max(best, std::fabs(x));
  return best;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("max_abs_diff: shape mismatch");
  double best = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    best = std::max(best, std::fabs(a.data()[i] - b.data()[i]));
  return best;
}

bool all_finite(const Matrix& m) {
  for (double x : m.data())
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace xling
