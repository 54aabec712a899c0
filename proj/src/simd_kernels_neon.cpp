// NEON kernel variants for aarch64 (2 doubles per lane).  Same body/remainder
// pattern as the AVX2 unit; NEON is baseline on aarch64, so no runtime check.

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

#include "polyattack/simd_kernels.hpp"

namespace polyattack::simd {

namespace {

constexpr std::size_t kVLen = 2;  // doubles per float64x2_t

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kVLen <= n; i += kVLen) {
    acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + kVLen <= n; i += kVLen) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_neon(double* x, double alpha, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + kVLen <= n; i += kVLen) {
    vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

double sum_abs_neon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kVLen <= n; i += kVLen) {
    acc = vaddq_f64(acc, vabsq_f64(vld1q_f64(x + i)));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += std::fabs(x[i]);
  return s;
}

double max_abs_neon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kVLen <= n; i += kVLen) {
    acc = vmaxq_f64(acc, vabsq_f64(vld1q_f64(x + i)));
  }
  double m = vmaxvq_f64(acc);
  for (; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

double sum_sq_neon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kVLen <= n; i += kVLen) {
    const float64x2_t v = vld1q_f64(x + i);
    acc = vfmaq_f64(acc, v, v);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

void clamp_neon(double* x, double lo, double hi, std::size_t n) {
  const float64x2_t vlo = vdupq_n_f64(lo);
  const float64x2_t vhi = vdupq_n_f64(hi);
  std::size_t i = 0;
  for (; i + kVLen <= n; i += kVLen) {
    vst1q_f64(x + i, vminq_f64(vhi, vmaxq_f64(vlo, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) x[i] = std::min(hi, std::max(lo, x[i]));
}

const Ops kNeon = {
    "neon",       dot_neon,     axpy_neon,   scale_neon,
    sum_abs_neon, max_abs_neon, sum_sq_neon, clamp_neon,
};

}  // namespace

const Ops& neon_ops() { return kNeon; }

}  // namespace polyattack::simd
