#pragma once

#include <cstddef>
#include <vector>

#include "polyattack/errors.hpp"

namespace polyattack {

using Vector = std::vector<double>;

enum class Norm { L1, L2, Linf };

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double* row_ptr(std::size_t r) { return data.data() + r * cols; }
  const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }
};

// Σ aᵢbᵢ.  Throws DimensionMismatch on unequal lengths.
double dot(const Vector& a, const Vector& b);

// Exact Lp norm; L2 returns the root, not the square.
double norm(const Vector& v, Norm p);

// m·v (length rows).  Throws DimensionMismatch if v.size() != m.cols.
Vector matvec(const Matrix& m, const Vector& v);

// mᵀ·v (length cols).  Throws DimensionMismatch if v.size() != m.rows.
Vector matvec_transposed(const Matrix& m, const Vector& v);

// a + s·b, fresh vector.
Vector add_scaled(const Vector& a, double s, const Vector& b);

// All entries finite (no NaN/Inf)?
bool all_finite(const Vector& v);

}  // namespace polyattack
