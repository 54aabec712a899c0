#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "polyattack/linalg.hpp"

namespace polyattack::lp {

enum class Relation { LE, GE, EQ };
enum class VarBound { Free, NonNeg };

struct LpConstraint {
  Vector row;
  Relation rel = Relation::LE;
  double rhs = 0.0;
};

// min objective·z subject to the constraints and per-variable bound kinds.
struct LinearProgram {
  Vector objective;
  std::vector<LpConstraint> constraints;
  std::vector<VarBound> var_bounds;  // one per variable
};

// IterationLimit reports an exceeded pivot budget; it is distinct from the
// three mathematical statuses and callers treat it as a solver failure.
enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

enum class PivotRule {
  Bland,         // smallest-index entering column; anti-cycling, slow
  DantzigBland,  // most-negative reduced cost, falls back to Bland for good
                 // after a run of degenerate pivots (still deterministic)
};

struct SolveOptions {
  double feas_tol = 1e-7;
  double pivot_tol = 1e-9;
  int max_iters = 0;  // 0 → 10·(rows+cols) of the internal standard form
  PivotRule pivot_rule = PivotRule::DantzigBland;
  std::ostream* debug_dump = nullptr;  // per-iteration tableau trace
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vector z;                    // valid iff Optimal
  double objective_value = 0;  // objective·z, recomputed on the original program
  int iterations = 0;
};

// Two-phase dense primal simplex.  GE rows are negated to LE internally, EQ
// becomes paired inequalities, free variables are split u−v, and single
// variable rows are folded into bounds before the tableau is built.  Every
// Optimal answer is re-verified against the original constraints within
// feas_tol (SolverNumericsError if that ever fails).
LpSolution solve(const LinearProgram& lp, const SolveOptions& opts = {});

// Result of free_var_split: the transformed program plus the map back.
// var_map[i] = (positive column, negative column); negative column is -1 for
// variables that were already nonnegative.
struct SplitProgram {
  LinearProgram lp;
  std::vector<std::pair<int, int>> var_map;

  Vector recover(const Vector& split_z) const;
};

// Replace every free variable z by u−v with u,v ≥ 0.
SplitProgram free_var_split(const LinearProgram& lp);

}  // namespace polyattack::lp
