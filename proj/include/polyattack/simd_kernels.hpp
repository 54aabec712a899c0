#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace polyattack::simd {

// One row of function pointers per backend.  The scalar entries are the
// reference semantics; vector backends must agree with them to rounding
// (reassociation and FMA shift the last few bits, nothing more).
struct Ops {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scale)(double* x, double alpha, std::size_t n);
  double (*sum_abs)(const double* x, std::size_t n);
  double (*max_abs)(const double* x, std::size_t n);
  double (*sum_sq)(const double* x, std::size_t n);
  // x[i] = min(hi, max(lo, x[i]))
  void (*clamp)(double* x, double lo, double hi, std::size_t n);
};

// Reference implementation (always available).
const Ops& scalar_ops();

// Every backend compiled in AND supported by this CPU (scalar first).
const std::vector<const Ops*>& available_backends();

// The backend in use; defaults to the widest supported one.  Overridable for
// tests and for the POLYATTACK_FORCE_SCALAR=1 escape hatch (checked once at
// startup).
const Ops& active();
void set_active(const Ops& ops);

// Convenience wrappers through the active backend.
inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline void scale(double* x, double alpha, std::size_t n) { active().scale(x, alpha, n); }
inline double sum_abs(const double* x, std::size_t n) { return active().sum_abs(x, n); }
inline double max_abs(const double* x, std::size_t n) { return active().max_abs(x, n); }
inline double sum_sq(const double* x, std::size_t n) { return active().sum_sq(x, n); }
inline void clamp(double* x, double lo, double hi, std::size_t n) { active().clamp(x, lo, hi, n); }

}  // namespace polyattack::simd
