#include "polyattack/simd_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace polyattack::simd {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double* x, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sum_abs_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::fabs(x[i]);
  return acc;
}

double max_abs_scalar(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

double sum_sq_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void clamp_scalar(double* x, double lo, double hi, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::min(hi, std::max(lo, x[i]));
}

const Ops kScalar = {
    "scalar",    dot_scalar,    axpy_scalar,   scale_scalar,
    sum_abs_scalar, max_abs_scalar, sum_sq_scalar, clamp_scalar,
};

}  // namespace

const Ops& scalar_ops() { return kScalar; }

#if defined(POLYATTACK_HAVE_AVX2)
const Ops& avx2_ops();  // defined in simd_kernels_avx2.cpp
#endif
#if defined(POLYATTACK_HAVE_NEON)
const Ops& neon_ops();  // defined in simd_kernels_neon.cpp
#endif

const std::vector<const Ops*>& available_backends() {
  static const std::vector<const Ops*> backends = [] {
    std::vector<const Ops*> v{&kScalar};
#if defined(POLYATTACK_HAVE_AVX2)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
      v.push_back(&avx2_ops());
    }
#endif
#if defined(POLYATTACK_HAVE_NEON)
    v.push_back(&neon_ops());
#endif
    return v;
  }();
  return backends;
}

namespace {
const Ops* g_active = [] {
  if (const char* force = std::getenv("POLYATTACK_FORCE_SCALAR");
      force != nullptr && force[0] == '1') {
    return &kScalar;
  }
  return available_backends().back();
}();
}  // namespace

const Ops& active() { return *g_active; }
void set_active(const Ops& ops) { g_active = &ops; }

}  // namespace polyattack::simd
