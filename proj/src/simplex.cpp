#include "polyattack/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "polyattack/errors.hpp"
#include "polyattack/simd_kernels.hpp"

namespace polyattack::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate(const LinearProgram& lp) {
  const std::size_t n = lp.objective.size();
  if (n == 0) throw DimensionMismatch("lp: empty objective");
  if (lp.var_bounds.size() != n) {
    throw DimensionMismatch("lp: var_bounds size " + std::to_string(lp.var_bounds.size()) +
                            " vs " + std::to_string(n) + " variables");
  }
  if (!all_finite(lp.objective)) throw DimensionMismatch("lp: non-finite objective");
  for (const auto& c : lp.constraints) {
    if (c.row.size() != n) throw DimensionMismatch("lp: constraint row length mismatch");
    if (!all_finite(c.row) || !std::isfinite(c.rhs)) {
      throw DimensionMismatch("lp: non-finite constraint");
    }
  }
}

// Per-variable substitution chosen by presolve so the tableau sees only
// nonnegative variables.
struct VarXform {
  enum Kind { Shift, Flip, Fixed, Split } kind = Shift;
  double offset = 0.0;  // Shift: z = offset + z'; Flip: z = offset − z'; Fixed: z = offset
  int col = -1;
  int col_neg = -1;  // Split only: z = z'[col] − z'[col_neg]
};

struct ReducedLp {
  bool infeasible = false;
  std::vector<VarXform> xform;
  int ncols = 0;
  std::vector<Vector> rows;  // row·z' ≤ rhs with z' ≥ 0
  Vector rhs;
  Vector cost;
};

// Fold single-variable rows into bounds, substitute variables so everything
// is nonnegative, drop rows made redundant by the bounds, and re-emit the
// residual finite upper bounds as explicit rows (the tableau has no native
// bounded-variable support).
ReducedLp presolve(const LinearProgram& lp, const SolveOptions& opts) {
  const std::size_t n = lp.objective.size();
  ReducedLp red;

  // Normalize relations: GE negated, EQ as paired inequalities.
  std::vector<std::pair<Vector, double>> le_rows;
  le_rows.reserve(lp.constraints.size() * 2);
  for (const auto& c : lp.constraints) {
    if (c.rel == Relation::LE || c.rel == Relation::EQ) {
      le_rows.emplace_back(c.row, c.rhs);
    }
    if (c.rel == Relation::GE || c.rel == Relation::EQ) {
      Vector neg(c.row.size());
      for (std::size_t i = 0; i < c.row.size(); ++i) neg[i] = -c.row[i];
      le_rows.emplace_back(std::move(neg), -c.rhs);
    }
  }

  // Bound extraction from empty and single-variable rows.
  Vector lb(n), ub(n, kInf);
  for (std::size_t j = 0; j < n; ++j) {
    lb[j] = (lp.var_bounds[j] == VarBound::NonNeg) ? 0.0 : -kInf;
  }
  std::vector<std::pair<Vector, double>> body;
  body.reserve(le_rows.size());
  for (auto& [row, r] : le_rows) {
    int nz = -1, count = 0;
    for (std::size_t j = 0; j < n && count < 2; ++j) {
      if (row[j] != 0.0) {
        nz = static_cast<int>(j);
        ++count;
      }
    }
    if (count == 0) {
      if (r < -opts.feas_tol) {
        red.infeasible = true;
        return red;
      }
      continue;
    }
    if (count == 1) {
      const double a = row[nz];
      if (a > 0.0) {
        ub[nz] = std::min(ub[nz], r / a);
      } else {
        lb[nz] = std::max(lb[nz], r / a);
      }
      continue;
    }
    body.emplace_back(std::move(row), r);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (lb[j] > ub[j] + opts.feas_tol) {
      red.infeasible = true;
      return red;
    }
  }

  // Variable substitutions; col_ub holds the residual upper bound per column.
  red.xform.resize(n);
  Vector col_ub;
  for (std::size_t j = 0; j < n; ++j) {
    VarXform& xf = red.xform[j];
    if (lb[j] > -kInf && ub[j] < kInf && ub[j] - lb[j] <= 0.0) {
      xf.kind = VarXform::Fixed;
      xf.offset = lb[j] == ub[j] ? lb[j] : 0.5 * (lb[j] + ub[j]);
    } else if (lb[j] > -kInf) {
      xf.kind = VarXform::Shift;
      xf.offset = lb[j];
      xf.col = red.ncols++;
      col_ub.push_back(ub[j] < kInf ? ub[j] - lb[j] : kInf);
    } else if (ub[j] < kInf) {
      xf.kind = VarXform::Flip;
      xf.offset = ub[j];
      xf.col = red.ncols++;
      col_ub.push_back(kInf);
    } else {
      xf.kind = VarXform::Split;
      xf.col = red.ncols++;
      xf.col_neg = red.ncols++;
      col_ub.push_back(kInf);
      col_ub.push_back(kInf);
    }
  }

  // Substitute into the body rows; drop rows satisfied for every z' in its
  // bound box (their supremum never exceeds the rhs).
  for (auto& [row, r] : body) {
    Vector nr(red.ncols, 0.0);
    double nrhs = r;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = row[j];
      if (a == 0.0) continue;
      const VarXform& xf = red.xform[j];
      switch (xf.kind) {
        case VarXform::Fixed:
          nrhs -= a * xf.offset;
          break;
        case VarXform::Shift:
          nr[xf.col] += a;
          nrhs -= a * xf.offset;
          break;
        case VarXform::Flip:
          nr[xf.col] -= a;
          nrhs -= a * xf.offset;
          break;
        case VarXform::Split:
          nr[xf.col] += a;
          nr[xf.col_neg] -= a;
          break;
      }
    }
    double sup = 0.0;
    bool any = false;
    for (int j = 0; j < red.ncols && sup < kInf; ++j) {
      if (nr[j] > 0.0) {
        sup += nr[j] * col_ub[j];  // may go to +inf
        any = true;
      } else if (nr[j] < 0.0) {
        any = true;  // contributes its minimum, 0, to the supremum
      }
    }
    if (!any) {
      if (nrhs < -opts.feas_tol) {
        red.infeasible = true;
        return red;
      }
      continue;
    }
    if (sup <= nrhs) continue;  // redundant
    red.rows.push_back(std::move(nr));
    red.rhs.push_back(nrhs);
  }

  // Residual finite upper bounds become explicit rows.
  for (int j = 0; j < red.ncols; ++j) {
    if (col_ub[j] < kInf) {
      Vector br(red.ncols, 0.0);
      br[j] = 1.0;
      red.rows.push_back(std::move(br));
      red.rhs.push_back(col_ub[j]);
    }
  }

  // Objective under the same substitutions (constant offset irrelevant: the
  // reported objective value is recomputed on the original program).
  red.cost.assign(red.ncols, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const VarXform& xf = red.xform[j];
    const double c = lp.objective[j];
    switch (xf.kind) {
      case VarXform::Fixed:
        break;
      case VarXform::Shift:
        red.cost[xf.col] += c;
        break;
      case VarXform::Flip:
        red.cost[xf.col] -= c;
        break;
      case VarXform::Split:
        red.cost[xf.col] += c;
        red.cost[xf.col_neg] -= c;
        break;
    }
  }
  return red;
}

// Dense two-phase tableau over the reduced program.
class Tableau {
 public:
  Tableau(const ReducedLp& red, const SolveOptions& opts)
      : opts_(opts), m_(red.rows.size()), n_(red.ncols) {
    // Column layout: [0,n) structural, [n,n+m) slacks, then artificials, rhs last.
    art_begin_ = n_ + m_;
    std::vector<int> art_rows;
    for (std::size_t i = 0; i < m_; ++i) {
      if (red.rhs[i] < 0.0) art_rows.push_back(static_cast<int>(i));
    }
    n_art_ = art_rows.size();
    width_ = art_begin_ + n_art_ + 1;
    rhs_col_ = width_ - 1;
    tab_.assign((m_ + 2) * width_, 0.0);  // +2: phase-2 and phase-1 cost rows
    basis_.resize(m_);
    dead_.assign(m_, false);

    std::size_t next_art = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      double* row = row_ptr(i);
      const double sgn = red.rhs[i] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) row[j] = sgn * red.rows[i][j];
      row[n_ + i] = sgn;
      row[rhs_col_] = sgn * red.rhs[i];
      if (sgn < 0.0) {
        const std::size_t art_col = art_begin_ + next_art++;
        row[art_col] = 1.0;
        basis_[i] = static_cast<int>(art_col);
      } else {
        basis_[i] = static_cast<int>(n_ + i);
      }
    }
    // Phase-2 cost row (structural costs; basic slacks have zero cost, so no
    // pricing needed yet — artificial columns get priced below).
    double* c2 = cost_row(2);
    for (std::size_t j = 0; j < n_; ++j) c2[j] = red.cost[j];
    // Phase-1 cost row: minimize the sum of artificials, priced out.
    double* c1 = cost_row(1);
    for (std::size_t k = 0; k < n_art_; ++k) c1[art_begin_ + k] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] >= static_cast<int>(art_begin_)) {
        simd::axpy(-1.0, row_ptr(i), c1, width_);
      }
    }
    max_iters_ = opts.max_iters > 0
                     ? opts.max_iters
                     : std::max<long>(100, 10 * static_cast<long>(m_ + width_));
  }

  LpStatus run() {
    if (n_art_ > 0) {
      const LpStatus s = pivot_loop(1);
      if (s != LpStatus::Optimal) return s;
      if (-cost_row(1)[rhs_col_] > opts_.feas_tol) return LpStatus::Infeasible;
      drive_out_artificials();
    }
    return pivot_loop(2);
  }

  int iterations() const { return iterations_; }

  Vector primal(std::size_t ncols) const {
    Vector z(ncols, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (!dead_[i] && basis_[i] >= 0 && basis_[i] < static_cast<int>(ncols)) {
        z[basis_[i]] = row_ptr(i)[rhs_col_];
      }
    }
    return z;
  }

 private:
  double* row_ptr(std::size_t i) { return tab_.data() + i * width_; }
  const double* row_ptr(std::size_t i) const { return tab_.data() + i * width_; }
  double* cost_row(int phase) { return tab_.data() + (m_ + (phase == 1 ? 1 : 0)) * width_; }
  const double* cost_row(int phase) const {
    return tab_.data() + (m_ + (phase == 1 ? 1 : 0)) * width_;
  }

  // Entering column under the active rule; -1 when optimal.
  int choose_entering(int phase) {
    const double* c = cost_row(phase);
    // Artificial columns never re-enter; phase 2 ignores them entirely.
    const std::size_t limit = art_begin_;
    if (rule_ == PivotRule::Bland) {
      for (std::size_t j = 0; j < limit; ++j) {
        if (c[j] < -opts_.pivot_tol) return static_cast<int>(j);
      }
      return -1;
    }
    int best = -1;
    double best_val = -opts_.pivot_tol;
    for (std::size_t j = 0; j < limit; ++j) {
      if (c[j] < best_val) {
        best_val = c[j];
        best = static_cast<int>(j);
      }
    }
    return best;
  }

  // Blocking row by minimum ratio; ties by smallest basis index (Bland).
  int choose_leaving(int col) const {
    int best = -1;
    double best_ratio = kInf;
    for (std::size_t i = 0; i < m_; ++i) {
      if (dead_[i]) continue;
      const double a = row_ptr(i)[col];
      if (a <= opts_.pivot_tol) continue;
      const double ratio = row_ptr(i)[rhs_col_] / a;
      if (ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && best >= 0 && basis_[i] < basis_[best])) {
        best_ratio = ratio;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  void pivot(std::size_t row, int col) {
    double* pr = row_ptr(row);
    simd::scale(pr, 1.0 / pr[col], width_);
    pr[col] = 1.0;
    for (std::size_t k = 0; k < m_ + 2; ++k) {
      if (k == row) continue;
      double* rk = tab_.data() + k * width_;
      const double f = rk[col];
      if (f != 0.0) {
        simd::axpy(-f, pr, rk, width_);
        rk[col] = 0.0;
      }
    }
    basis_[row] = col;
  }

  LpStatus pivot_loop(int phase) {
    int stall = 0;
    double prev_obj = kInf;
    while (true) {
      const int col = choose_entering(phase);
      if (col < 0) return LpStatus::Optimal;
      const int row = choose_leaving(col);
      if (row < 0) {
        if (phase == 1) {
          // Phase-1 objective is bounded below by zero; no blocking row means
          // the numerics have broken down.
          throw SolverNumericsError("simplex: unbounded phase-1 objective");
        }
        return LpStatus::Unbounded;
      }
      if (++iterations_ > max_iters_) return LpStatus::IterationLimit;
      if (opts_.debug_dump != nullptr) {
        *opts_.debug_dump << "phase " << phase << " iter " << iterations_
                          << ": enter col " << col << ", leave row " << row
                          << " (var " << basis_[row] << "), obj "
                          << -cost_row(phase)[rhs_col_] << "\n";
      }
      pivot(static_cast<std::size_t>(row), col);
      if (rule_ == PivotRule::DantzigBland) {
        const double obj = -cost_row(phase)[rhs_col_];
        if (prev_obj - obj > 1e-12) {
          stall = 0;
        } else if (++stall >= 60) {
          rule_ = PivotRule::Bland;  // permanent: guarantees termination
        }
        prev_obj = obj;
      }
    }
  }

  // After phase 1, pivot zero-level artificials out of the basis; rows with
  // no eligible column are redundant and go inert.
  void drive_out_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < static_cast<int>(art_begin_)) continue;
      const double* pr = row_ptr(i);
      int col = -1;
      for (std::size_t j = 0; j < art_begin_; ++j) {
        if (std::fabs(pr[j]) > opts_.pivot_tol) {
          col = static_cast<int>(j);
          break;
        }
      }
      if (col >= 0) {
        pivot(i, col);
      } else {
        dead_[i] = true;
      }
    }
  }

  SolveOptions opts_;
  PivotRule rule_ = opts_.pivot_rule;
  std::size_t m_, n_, n_art_ = 0, art_begin_ = 0, width_ = 0, rhs_col_ = 0;
  std::vector<double> tab_;
  std::vector<int> basis_;
  std::vector<bool> dead_;
  long max_iters_ = 0;
  int iterations_ = 0;
};

void verify_against_original(const LinearProgram& lp, const Vector& z, double feas_tol) {
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (lp.var_bounds[j] == VarBound::NonNeg && z[j] < -feas_tol) {
      throw SolverNumericsError("simplex: optimal point violates nonnegativity");
    }
  }
  for (const auto& c : lp.constraints) {
    const double v = simd::dot(c.row.data(), z.data(), z.size());
    const double tol = feas_tol * std::max(1.0, std::fabs(c.rhs));
    const bool ok = (c.rel == Relation::LE && v <= c.rhs + tol) ||
                    (c.rel == Relation::GE && v >= c.rhs - tol) ||
                    (c.rel == Relation::EQ && std::fabs(v - c.rhs) <= tol);
    if (!ok) {
      throw SolverNumericsError("simplex: optimal point violates a constraint");
    }
  }
}

}  // namespace

LpSolution solve(const LinearProgram& lp, const SolveOptions& opts) {
  validate(lp);
  LpSolution sol;

  const ReducedLp red = presolve(lp, opts);
  if (red.infeasible) {
    sol.status = LpStatus::Infeasible;
    return sol;
  }

  Tableau tab(red, opts);
  sol.status = tab.run();
  sol.iterations = tab.iterations();
  if (sol.status != LpStatus::Optimal) return sol;

  const Vector zr = tab.primal(red.ncols);
  sol.z.resize(lp.objective.size());
  for (std::size_t j = 0; j < sol.z.size(); ++j) {
    const VarXform& xf = red.xform[j];
    switch (xf.kind) {
      case VarXform::Fixed:
        sol.z[j] = xf.offset;
        break;
      case VarXform::Shift:
        sol.z[j] = xf.offset + zr[xf.col];
        break;
      case VarXform::Flip:
        sol.z[j] = xf.offset - zr[xf.col];
        break;
      case VarXform::Split:
        sol.z[j] = zr[xf.col] - zr[xf.col_neg];
        break;
    }
  }
  sol.objective_value = dot(lp.objective, sol.z);
  verify_against_original(lp, sol.z, opts.feas_tol);
  return sol;
}

SplitProgram free_var_split(const LinearProgram& lp) {
  validate(lp);
  SplitProgram out;
  const std::size_t n = lp.objective.size();
  out.var_map.resize(n);
  int next = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (lp.var_bounds[j] == VarBound::Free) {
      out.var_map[j] = {next, next + 1};
      next += 2;
    } else {
      out.var_map[j] = {next, -1};
      next += 1;
    }
  }
  out.lp.objective.assign(next, 0.0);
  out.lp.var_bounds.assign(next, VarBound::NonNeg);
  for (std::size_t j = 0; j < n; ++j) {
    const auto [p, q] = out.var_map[j];
    out.lp.objective[p] = lp.objective[j];
    if (q >= 0) out.lp.objective[q] = -lp.objective[j];
  }
  out.lp.constraints.reserve(lp.constraints.size());
  for (const auto& c : lp.constraints) {
    LpConstraint nc;
    nc.rel = c.rel;
    nc.rhs = c.rhs;
    nc.row.assign(next, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const auto [p, q] = out.var_map[j];
      nc.row[p] = c.row[j];
      if (q >= 0) nc.row[q] = -c.row[j];
    }
    out.lp.constraints.push_back(std::move(nc));
  }
  return out;
}

Vector SplitProgram::recover(const Vector& split_z) const {
  Vector z(var_map.size());
  for (std::size_t j = 0; j < var_map.size(); ++j) {
    const auto [p, q] = var_map[j];
    z[j] = split_z[p] - (q >= 0 ? split_z[q] : 0.0);
  }
  return z;
}

}  // namespace polyattack::lp
