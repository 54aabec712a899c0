#include "polyattack/linalg.hpp"

#include <cmath>

#include "doctest.h"
#include "polyattack/rng.hpp"

using namespace polyattack;

namespace {
Vector random_vec(Rng& rng, std::size_t n, double lo = -5.0, double hi = 5.0) {
  Vector v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}
}  // namespace

TEST_CASE("dot examples") {
  CHECK(dot({1, 2, 3}, {4, 5, 6}) == 32.0);
  CHECK(dot({3.5, -2.0, 9.1}, {0, 0, 0}) == 0.0);          // annihilator
  CHECK(dot({0, 1, 0}, {7.25, -3.5, 11.0}) == -3.5);       // basis projection
  CHECK_THROWS_AS((void)dot({1, 2}, {1, 2, 3}), DimensionMismatch);
}

TEST_CASE("norm examples") {
  CHECK(norm({1, -2, 3}, Norm::L1) == 6.0);
  CHECK(norm({3, 4}, Norm::L2) == 5.0);
  CHECK(norm({1, -7, 3}, Norm::Linf) == 7.0);
}

TEST_CASE("triangle inequality on random pairs") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(32);
    const Vector a = random_vec(rng, n);
    const Vector b = random_vec(rng, n);
    const Vector s = add_scaled(a, 1.0, b);
    for (Norm p : {Norm::L1, Norm::L2, Norm::Linf}) {
      CHECK(norm(s, p) <= norm(a, p) + norm(b, p) + 1e-12);
    }
  }
}

TEST_CASE("norm is zero iff the vector is zero") {
  Rng rng(43);
  for (Norm p : {Norm::L1, Norm::L2, Norm::Linf}) {
    CHECK(norm(Vector(17, 0.0), p) == 0.0);
    for (int trial = 0; trial < 50; ++trial) {
      Vector v(1 + rng.uniform_index(16), 0.0);
      v[rng.uniform_index(v.size())] = rng.uniform(1e-8, 2.0) * (rng.uniform() < 0.5 ? -1 : 1);
      CHECK(norm(v, p) > 0.0);
    }
  }
}

TEST_CASE("dot is symmetric and bilinear") {
  Rng rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(24);
    const Vector a = random_vec(rng, n), b = random_vec(rng, n), c = random_vec(rng, n);
    const double alpha = rng.uniform(-2.0, 2.0);
    CHECK(dot(a, b) == doctest::Approx(dot(b, a)).epsilon(1e-12));
    const Vector combo = add_scaled(b, alpha, c);
    CHECK(dot(a, combo) ==
          doctest::Approx(dot(a, b) + alpha * dot(a, c)).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("matvec and transpose") {
  Matrix m(2, 3);
  m.at(0, 0) = 1; m.at(0, 1) = 2; m.at(0, 2) = 3;
  m.at(1, 0) = 4; m.at(1, 1) = 5; m.at(1, 2) = 6;
  CHECK(matvec(m, {1, 1, 1}) == Vector{6, 15});
  CHECK(matvec_transposed(m, {1, 1}) == Vector{5, 7, 9});
  CHECK_THROWS_AS((void)matvec(m, {1, 1}), DimensionMismatch);
  CHECK_THROWS_AS((void)matvec_transposed(m, {1, 1, 1}), DimensionMismatch);
}

TEST_CASE("all_finite flags NaN and Inf") {
  CHECK(all_finite({0.0, -1.5, 3.0}));
  CHECK(!all_finite({0.0, std::nan(""), 3.0}));
  CHECK(!all_finite({0.0, INFINITY}));
}
