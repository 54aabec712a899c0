#include "polyattack/simplex.hpp"

#include <chrono>
#include <cstring>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "polyattack/errors.hpp"
#include "polyattack/rng.hpp"

using namespace polyattack;
using namespace polyattack::lp;

namespace {

LinearProgram make_lp(Vector objective, std::vector<LpConstraint> cons,
                      std::vector<VarBound> bounds = {}) {
  LinearProgram lp;
  lp.objective = std::move(objective);
  lp.constraints = std::move(cons);
  lp.var_bounds = bounds.empty()
                      ? std::vector<VarBound>(lp.objective.size(), VarBound::NonNeg)
                      : std::move(bounds);
  return lp;
}

}  // namespace

TEST_CASE("bound-tight minimum: min z s.t. z >= 0") {
  const auto sol = solve(make_lp({1.0}, {}));
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.z[0] == 0.0);
  CHECK(sol.objective_value == 0.0);
}

TEST_CASE("vertex optimum: min z1+z2 s.t. z1+2z2 >= 2") {
  const auto sol = solve(make_lp({1.0, 1.0}, {{{1.0, 2.0}, Relation::GE, 2.0}}));
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.z[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sol.z[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.objective_value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("contradictory halfspaces are Infeasible") {
  const auto sol = solve(make_lp({1.0}, {{{1.0}, Relation::GE, 1.0},
                                         {{-1.0}, Relation::GE, 0.0}}));
  CHECK(sol.status == LpStatus::Infeasible);
}

TEST_CASE("unbounded program") {
  const auto sol = solve(make_lp({-1.0}, {}));
  CHECK(sol.status == LpStatus::Unbounded);
}

TEST_CASE("iteration limit reported distinctly") {
  // Needs at least two pivots to reach the optimum.
  auto lp = make_lp({-1.0, -1.0}, {{{1.0, 0.0}, Relation::LE, 1.0},
                                   {{0.0, 1.0}, Relation::LE, 1.0},
                                   {{1.0, 1.0}, Relation::LE, 1.5}});
  SolveOptions opts;
  opts.max_iters = 1;
  CHECK(solve(lp, opts).status == LpStatus::IterationLimit);
  CHECK(solve(lp).status == LpStatus::Optimal);  // default budget succeeds
}

TEST_CASE("free_var_split examples") {
  SUBCASE("one free variable becomes two with duplicated flipped objective") {
    const auto lp = make_lp({2.5}, {{{1.0}, Relation::LE, 4.0}}, {VarBound::Free});
    const auto split = free_var_split(lp);
    REQUIRE(split.lp.objective.size() == 2);
    CHECK(split.lp.objective == Vector{2.5, -2.5});
    CHECK(split.lp.constraints[0].row == Vector{1.0, -1.0});
    CHECK(split.lp.var_bounds ==
          std::vector<VarBound>(2, VarBound::NonNeg));
    CHECK(split.recover({7.0, 3.0}) == Vector{4.0});
  }
  SUBCASE("all-nonneg program is unchanged") {
    const auto lp = make_lp({1.0, 2.0}, {{{1.0, 1.0}, Relation::GE, 1.0}});
    const auto split = free_var_split(lp);
    CHECK(split.lp.objective == lp.objective);
    CHECK(split.lp.constraints[0].row == lp.constraints[0].row);
    CHECK(split.recover({0.25, 0.75}) == Vector{0.25, 0.75});
  }
  SUBCASE("absolute value via t bound: z fixed to -3 gives t=3") {
    // Variables (z free, t >= 0): min t s.t. t >= z, t >= -z, z == -3.
    LinearProgram lp = make_lp({0.0, 1.0},
                               {{{-1.0, 1.0}, Relation::GE, 0.0},
                                {{1.0, 1.0}, Relation::GE, 0.0},
                                {{1.0, 0.0}, Relation::EQ, -3.0}},
                               {VarBound::Free, VarBound::NonNeg});
    const auto split = free_var_split(lp);
    const auto sol = solve(split.lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    const Vector orig = split.recover(sol.z);
    CHECK(orig[0] == doctest::Approx(-3.0).epsilon(1e-9));
    CHECK(orig[1] == doctest::Approx(3.0).epsilon(1e-9));
    // solve() also handles the free variable natively
    const auto direct = solve(lp);
    REQUIRE(direct.status == LpStatus::Optimal);
    CHECK(direct.z[1] == doctest::Approx(3.0).epsilon(1e-9));
  }
}

TEST_CASE("presolve corners") {
  SUBCASE("single-variable EQ row fixes the variable") {
    const auto sol = solve(make_lp({1.0, 1.0}, {{{1.0, 0.0}, Relation::EQ, 2.0},
                                                {{1.0, 1.0}, Relation::GE, 3.0}}));
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.z[0] == doctest::Approx(2.0));
    CHECK(sol.z[1] == doctest::Approx(1.0));
  }
  SUBCASE("contradictory single-variable bounds") {
    CHECK(solve(make_lp({1.0}, {{{1.0}, Relation::GE, 2.0},
                                {{1.0}, Relation::LE, 1.0}}))
              .status == LpStatus::Infeasible);
  }
  SUBCASE("empty row with negative rhs is Infeasible") {
    CHECK(solve(make_lp({1.0}, {{{0.0}, Relation::LE, -1.0}})).status ==
          LpStatus::Infeasible);
  }
  SUBCASE("redundant wide row is dropped without changing the optimum") {
    const auto sol = solve(make_lp({-1.0, -1.0}, {{{1.0, 0.0}, Relation::LE, 1.0},
                                                  {{0.0, 1.0}, Relation::LE, 1.0},
                                                  {{1.0, 1.0}, Relation::LE, 100.0}}));
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective_value == doctest::Approx(-2.0));
  }
  SUBCASE("negative lower bound via GE row on a free variable") {
    // min z s.t. z >= -5 (free var): optimum at the bound.
    const auto sol = solve(make_lp({1.0}, {{{1.0}, Relation::GE, -5.0}},
                                   {VarBound::Free}));
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.z[0] == doctest::Approx(-5.0));
  }
}

TEST_CASE("determinism: identical inputs give bitwise-identical solutions") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const auto lp = oracles::random_feasible_lp(rng);
    for (PivotRule rule : {PivotRule::Bland, PivotRule::DantzigBland}) {
      SolveOptions opts;
      opts.pivot_rule = rule;
      const auto a = solve(lp, opts);
      const auto b = solve(lp, opts);
      REQUIRE(a.status == b.status);
      REQUIRE(a.z.size() == b.z.size());
      CHECK(std::memcmp(a.z.data(), b.z.data(), a.z.size() * sizeof(double)) == 0);
      CHECK(a.iterations == b.iterations);
    }
  }
}

TEST_CASE("oracle equivalence: 100 random feasible LPs, both pivot rules") {
  Rng rng(2024);
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    const auto lp = oracles::random_feasible_lp(rng);
    const auto oracle = oracles::lp_vertex_oracle(lp);
    REQUIRE(oracle.feasible);  // feasible by construction (planted point)
    for (PivotRule rule : {PivotRule::Bland, PivotRule::DantzigBland}) {
      SolveOptions opts;
      opts.pivot_rule = rule;
      const auto sol = solve(lp, opts);
      INFO("trial ", trial, " rule ", rule == PivotRule::Bland ? "bland" : "dantzig");
      REQUIRE(sol.status == LpStatus::Optimal);
      CHECK(sol.objective_value == doctest::Approx(oracle.objective).epsilon(1e-6));
    }
  }
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
  CHECK(elapsed.count() < 5.0);
}

TEST_CASE("debug dump emits a per-iteration trace") {
  std::ostringstream trace;
  SolveOptions opts;
  opts.debug_dump = &trace;
  const auto sol = solve(make_lp({1.0, 1.0}, {{{1.0, 2.0}, Relation::GE, 2.0}}), opts);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(trace.str().find("enter col") != std::string::npos);
}

TEST_CASE("malformed programs throw DimensionMismatch") {
  LinearProgram lp;
  lp.objective = {1.0, 2.0};
  lp.var_bounds = {VarBound::NonNeg};  // wrong size
  CHECK_THROWS_AS((void)solve(lp), DimensionMismatch);

  lp.var_bounds = {VarBound::NonNeg, VarBound::NonNeg};
  lp.constraints.push_back({{1.0}, Relation::LE, 0.0});  // short row
  CHECK_THROWS_AS((void)solve(lp), DimensionMismatch);
}
