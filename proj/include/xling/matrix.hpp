#pragma once

#include <cstddef>
#include <vector>

namespace xling {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Small, no expression templates; every
// numeric routine in this project is written against it directly.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  Vec row_vec(std::size_t r) const { return Vec(row(r), row(r) + cols_); }
  void set_row(std::size_t r, const Vec& v);
  void append_row(const Vec& v);

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Vec matvec(const Matrix& m, const Vec& v);    // m * v
Vec matvec_t(const Matrix& m, const Vec& v);  // m^T * v

double dot(const double* a, const double* b, std::size_t n);
double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);           // L2 norm
void axpy(double alpha, const Vec& x, Vec& y);  // y += alpha * x

double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& m);

}  // namespace xling
