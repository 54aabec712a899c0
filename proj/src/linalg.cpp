#include "polyattack/linalg.hpp"

#include <cmath>

#include "polyattack/simd_kernels.hpp"

namespace polyattack {

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("dot: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
  return simd::dot(a.data(), b.data(), a.size());
}

double norm(const Vector& v, Norm p) {
  switch (p) {
    case Norm::L1:
      return simd::sum_abs(v.data(), v.size());
    case Norm::L2:
      return std::sqrt(simd::sum_sq(v.data(), v.size()));
    case Norm::Linf:
      return simd::max_abs(v.data(), v.size());
  }
  return 0.0;  // unreachable
}

Vector matvec(const Matrix& m, const Vector& v) {
  if (v.size() != m.cols) {
    throw DimensionMismatch("matvec: vector length " + std::to_string(v.size()) +
                            " vs cols " + std::to_string(m.cols));
  }
  Vector out(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    out[r] = simd::dot(m.row_ptr(r), v.data(), m.cols);
  }
  return out;
}

Vector matvec_transposed(const Matrix& m, const Vector& v) {
  if (v.size() != m.rows) {
    throw DimensionMismatch("matvec_transposed: vector length " +
                            std::to_string(v.size()) + " vs rows " +
                            std::to_string(m.rows));
  }
  Vector out(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    simd::axpy(v[r], m.row_ptr(r), out.data(), m.cols);
  }
  return out;
}

Vector add_scaled(const Vector& a, double s, const Vector& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("add_scaled: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
  Vector out = a;
  simd::axpy(s, b.data(), out.data(), out.size());
  return out;
}

bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace polyattack
