#include "polyattack/linear_attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "polyattack/errors.hpp"
#include "polyattack/io_util.hpp"
#include "polyattack/rng.hpp"
#include "polyattack/simd_kernels.hpp"

namespace polyattack {
namespace {

// Spec fields resolved to concrete values: costs default to all-ones, the
// mutable set defaults to every feature, and membership is precomputed.
struct ResolvedSpec {
  std::vector<std::size_t> mutable_idx;  // sorted feature indices in A
  Vector costs;                          // size == dim
  std::vector<bool> is_attacked;         // per classifier
  std::vector<bool> is_protected;        // per classifier
};

ResolvedSpec resolve(const Vector& x, const std::vector<int>& y,
                     const std::vector<LinearClassifier>& clfs,
                     const AttackSpec& spec) {
  const std::size_t dim = x.size();
  if (y.size() != clfs.size())
    throw LengthMismatch("labels and classifier list differ in length");
  for (const auto& clf : clfs) {
    if (clf.w.size() != dim)
      throw DimensionMismatch("classifier dimension does not match instance");
  }
  if (spec.attack_margin < 0.0 || spec.protect_margin < 0.0)
    throw std::invalid_argument("attack/protect margins must be >= 0");
  if (spec.solver_margin_pad < 0.0)
    throw std::invalid_argument("solver_margin_pad must be >= 0");

  ResolvedSpec r;
  r.is_attacked.assign(clfs.size(), false);
  r.is_protected.assign(clfs.size(), false);
  for (std::size_t j : spec.attacked) {
    if (j >= clfs.size()) throw std::invalid_argument("attacked index out of range");
    r.is_attacked[j] = true;
  }
  for (std::size_t k : spec.protected_) {
    if (k >= clfs.size()) throw std::invalid_argument("protected index out of range");
    if (r.is_attacked[k])
      throw std::invalid_argument("attacked and protected sets must be disjoint");
    r.is_protected[k] = true;
  }

  if (spec.costs.empty()) {
    r.costs.assign(dim, 1.0);
  } else {
    if (spec.costs.size() != dim)
      throw DimensionMismatch("cost vector dimension does not match instance");
    for (double c : spec.costs) {
      if (!(c > 0.0)) throw std::invalid_argument("all costs must be > 0");
    }
    r.costs = spec.costs;
  }

  if (spec.mutable_features.empty()) {
    r.mutable_idx.resize(dim);
    std::iota(r.mutable_idx.begin(), r.mutable_idx.end(), std::size_t{0});
  } else {
    r.mutable_idx = spec.mutable_features;
    std::sort(r.mutable_idx.begin(), r.mutable_idx.end());
    r.mutable_idx.erase(std::unique(r.mutable_idx.begin(), r.mutable_idx.end()),
                        r.mutable_idx.end());
    if (!r.mutable_idx.empty() && r.mutable_idx.back() >= dim)
      throw std::invalid_argument("mutable feature index out of range");
  }

  if (spec.box) {
    if (spec.box->lo.size() != dim || spec.box->hi.size() != dim)
      throw DimensionMismatch("box dimension does not match instance");
    for (std::size_t i = 0; i < dim; ++i) {
      if (!(spec.box->lo[i] <= spec.box->hi[i]))
        throw std::invalid_argument("box has lo > hi");
    }
  }
  return r;
}

// One margin row in LE form over the mutable coordinates:  a·Δx_A ≤ rhs.
// rhs0 is the same right-hand side with zero pad (the true constraint).
struct MarginRow {
  Vector a;
  double rhs = 0.0;
  double rhs0 = 0.0;
};

// Attacked rows  y(w·(x+Δx)+b) ≤ −δ_att  and protected rows (negated to LE)
// −y·w·Δx ≤ y(w·x+b) − δ_prot, restricted to the mutable coordinates.
std::vector<MarginRow> margin_rows(const Vector& x, const std::vector<int>& y,
                                   const std::vector<LinearClassifier>& clfs,
                                   const AttackSpec& spec, const ResolvedSpec& r,
                                   double pad) {
  std::vector<MarginRow> rows;
  for (std::size_t i = 0; i < clfs.size(); ++i) {
    if (!r.is_attacked[i] && !r.is_protected[i]) continue;
    const double value = decision_value(clfs[i], x);
    MarginRow row;
    row.a.resize(r.mutable_idx.size());
    if (r.is_attacked[i]) {
      const double s = spec.positive_only ? 1.0 : static_cast<double>(y[i]);
      for (std::size_t c = 0; c < r.mutable_idx.size(); ++c)
        row.a[c] = s * clfs[i].w[r.mutable_idx[c]];
      row.rhs = -(spec.attack_margin + pad) - s * value;
      row.rhs0 = -spec.attack_margin - s * value;
    } else {
      const double s = static_cast<double>(y[i]);
      for (std::size_t c = 0; c < r.mutable_idx.size(); ++c)
        row.a[c] = -s * clfs[i].w[r.mutable_idx[c]];
      row.rhs = s * value - (spec.protect_margin + pad);
      row.rhs0 = s * value - spec.protect_margin;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Box rows Δx_a ≤ hi−x and −Δx_a ≤ x−lo over the mutable coordinates; the
// box is never padded — the solution is clamped into it exactly instead.
std::vector<MarginRow> box_rows(const Vector& x, const AttackSpec& spec,
                                const ResolvedSpec& r) {
  std::vector<MarginRow> rows;
  if (!spec.box) return rows;
  const std::size_t na = r.mutable_idx.size();
  for (std::size_t c = 0; c < na; ++c) {
    const std::size_t a = r.mutable_idx[c];
    MarginRow up;
    up.a.assign(na, 0.0);
    up.a[c] = 1.0;
    up.rhs = up.rhs0 = spec.box->hi[a] - x[a];
    rows.push_back(std::move(up));
    MarginRow down;
    down.a.assign(na, 0.0);
    down.a[c] = -1.0;
    down.rhs = down.rhs0 = x[a] - spec.box->lo[a];
    rows.push_back(std::move(down));
  }
  return rows;
}

double cost_norm(const Vector& delta, const Vector& costs, Norm norm) {
  double acc = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double v = costs[i] * std::fabs(delta[i]);
    switch (norm) {
      case Norm::L1: acc += v; break;
      case Norm::L2: acc += v * v; break;
      case Norm::Linf: acc = std::max(acc, v); break;
    }
  }
  return norm == Norm::L2 ? std::sqrt(acc) : acc;
}

// Expand the mutable-coordinate solution into a full-dimension delta and
// clamp it into the box (the LP/dual enforce the box only within solver
// tolerance; the clamp makes it exact).
Vector expand_and_clamp(const Vector& z_mutable, const Vector& x,
                        const AttackSpec& spec, const ResolvedSpec& r) {
  Vector delta(x.size(), 0.0);
  for (std::size_t c = 0; c < r.mutable_idx.size(); ++c)
    delta[r.mutable_idx[c]] = z_mutable[c];
  if (spec.box) {
    for (std::size_t c = 0; c < r.mutable_idx.size(); ++c) {
      const std::size_t a = r.mutable_idx[c];
      delta[a] = std::clamp(delta[a], spec.box->lo[a] - x[a],
                            spec.box->hi[a] - x[a]);
    }
  }
  return delta;
}

PerturbationResult failure(AttackStatus status, const Vector& x,
                           const std::vector<int>& y,
                           const std::vector<LinearClassifier>& clfs,
                           const AttackSpec& spec) {
  PerturbationResult res;
  res.status = status;
  res.delta.assign(x.size(), 0.0);
  res.cost_value = 0.0;
  res.constraint_slacks = verify(x, res.delta, y, clfs, spec);
  return res;
}

// L1 program in the positive/negative-part encoding: Δx = p⁺ − p⁻ with
// p± ≥ 0 and objective Σ cᵢ(p⁺ᵢ + p⁻ᵢ).  Unlike the shared-t form used for
// L∞ this needs no per-feature coupling rows, so the program has only the
// margin rows plus one single-variable cap row per entry of `caps` (box caps
// p⁺ᵢ ≤ hi−x and p⁻ᵢ ≤ x−lo; single-variable rows fold into variable bounds
// during presolve).  Columns: [0,na) = p⁺, [na,2na) = p⁻.
lp::LinearProgram build_l1_split_lp(const Vector& x, const std::vector<int>& y,
                                    const std::vector<LinearClassifier>& clfs,
                                    const AttackSpec& spec, const ResolvedSpec& r,
                                    double pad, const std::vector<std::size_t>& caps) {
  const std::size_t na = r.mutable_idx.size();
  lp::LinearProgram prog;
  prog.objective.assign(2 * na, 0.0);
  for (std::size_t c = 0; c < na; ++c) {
    prog.objective[c] = prog.objective[na + c] = r.costs[r.mutable_idx[c]];
  }
  prog.var_bounds.assign(2 * na, lp::VarBound::NonNeg);

  for (auto& row : margin_rows(x, y, clfs, spec, r, pad)) {
    Vector full(2 * na, 0.0);
    for (std::size_t c = 0; c < na; ++c) {
      full[c] = row.a[c];
      full[na + c] = -row.a[c];
    }
    prog.constraints.push_back({std::move(full), lp::Relation::LE, row.rhs});
  }
  if (spec.box) {
    for (std::size_t c : caps) {
      const std::size_t a = r.mutable_idx[c];
      Vector up(2 * na, 0.0);
      up[c] = 1.0;
      prog.constraints.push_back({std::move(up), lp::Relation::LE, spec.box->hi[a] - x[a]});
      Vector down(2 * na, 0.0);
      down[na + c] = 1.0;
      prog.constraints.push_back({std::move(down), lp::Relation::LE, x[a] - spec.box->lo[a]});
    }
  }
  return prog;
}

// Solve one padded L1 program with the box caps generated lazily: solve with
// the margin rows only, cap exactly the coordinates whose optimum violates
// the box, and re-solve.  Dropping caps only relaxes the program, so an
// infeasible relaxation proves the capped program infeasible, and a solution
// violating no omitted cap is optimal for the full program.  L1 optima
// concentrate on few coordinates, so the tableau stays margin-rows tall
// instead of two-rows-per-feature tall.
lp::LpSolution solve_l1_padded(const Vector& x, const std::vector<int>& y,
                               const std::vector<LinearClassifier>& clfs,
                               const AttackSpec& spec, const ResolvedSpec& r,
                               double pad) {
  const std::size_t na = r.mutable_idx.size();
  std::vector<char> capped(na, 0);
  std::vector<std::size_t> caps;
  while (true) {
    const lp::LinearProgram prog = build_l1_split_lp(x, y, clfs, spec, r, pad, caps);
    lp::LpSolution sol = lp::solve(prog, spec.lp_options);
    if (sol.status != lp::LpStatus::Optimal || !spec.box) return sol;
    bool added = false;
    for (std::size_t c = 0; c < na; ++c) {
      if (capped[c]) continue;
      const std::size_t a = r.mutable_idx[c];
      const double up = spec.box->hi[a] - x[a];
      const double down = x[a] - spec.box->lo[a];
      const double d = sol.z[c] - sol.z[na + c];
      if (d > up + 1e-9 * std::max(1.0, std::fabs(up)) ||
          -d > down + 1e-9 * std::max(1.0, std::fabs(down))) {
        capped[c] = 1;
        caps.push_back(c);
        added = true;
      }
    }
    if (!added) return sol;
  }
}

lp::LinearProgram build_attack_lp(const Vector& x, const std::vector<int>& y,
                                  const std::vector<LinearClassifier>& clfs,
                                  const AttackSpec& spec, const ResolvedSpec& r,
                                  double pad, bool shared_t) {
  const std::size_t na = r.mutable_idx.size();
  const std::size_t nt = shared_t ? 1 : na;
  lp::LinearProgram prog;
  prog.objective.assign(na + nt, 0.0);
  for (std::size_t t = 0; t < nt; ++t) prog.objective[na + t] = 1.0;
  prog.var_bounds.assign(na, lp::VarBound::Free);
  prog.var_bounds.insert(prog.var_bounds.end(), nt, lp::VarBound::NonNeg);

  auto le_row = [&](Vector row, double rhs) {
    prog.constraints.push_back({std::move(row), lp::Relation::LE, rhs});
  };

  // |c_i Δx_i| ≤ t_i (own t per feature) or ≤ t (one shared bound).
  for (std::size_t c = 0; c < na; ++c) {
    const double ci = r.costs[r.mutable_idx[c]];
    const std::size_t tcol = na + (shared_t ? 0 : c);
    Vector up(na + nt, 0.0);
    up[c] = ci;
    up[tcol] = -1.0;
    le_row(std::move(up), 0.0);
    Vector down(na + nt, 0.0);
    down[c] = -ci;
    down[tcol] = -1.0;
    le_row(std::move(down), 0.0);
  }

  for (auto& row : margin_rows(x, y, clfs, spec, r, pad)) {
    row.a.resize(na + nt, 0.0);
    le_row(std::move(row.a), row.rhs);
  }
  for (auto& row : box_rows(x, spec, r)) {
    row.a.resize(na + nt, 0.0);
    le_row(std::move(row.a), row.rhs);
  }
  return prog;
}

// Δx = 0 is optimal whenever x itself already satisfies every margin (any
// other perturbation costs more than zero) and sits inside the box.  Worth a
// dedicated check: full-flip attacks leave the already-misclassified
// instances nothing to do, and the LP spends an entire solve discovering
// that.
bool zero_delta_optimal(const Vector& x, const std::vector<int>& y,
                        const std::vector<LinearClassifier>& clfs,
                        const AttackSpec& spec, PerturbationResult& res) {
  if (spec.box) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < spec.box->lo[i] || x[i] > spec.box->hi[i]) return false;
    }
  }
  Vector zero(x.size(), 0.0);
  Vector slacks = verify(x, zero, y, clfs, spec);
  if (!satisfies_margins(slacks, spec)) return false;
  res.status = AttackStatus::Success;
  res.delta = std::move(zero);
  res.cost_value = 0.0;
  res.constraint_slacks = std::move(slacks);
  return true;
}

PerturbationResult attack_via_lp(const Vector& x, const std::vector<int>& y,
                                 const std::vector<LinearClassifier>& clfs,
                                 const AttackSpec& spec, bool shared_t) {
  const ResolvedSpec r = resolve(x, y, clfs, spec);
  const std::size_t na = r.mutable_idx.size();

  PerturbationResult trivial;
  if (zero_delta_optimal(x, y, clfs, spec, trivial)) return trivial;

  // Escalating margin pads: solver tolerance erodes the enforced margins a
  // little, so the LP is solved slightly inside the true feasible set and the
  // answer verified at the true margins.  A zero-pad attempt is the final
  // arbiter of infeasibility (it is exactly the true constraint set).
  std::vector<double> pads = {spec.solver_margin_pad,
                              100.0 * spec.solver_margin_pad, 0.0};
  pads.erase(std::unique(pads.begin(), pads.end()), pads.end());

  std::size_t attempt = 0;
  while (attempt < pads.size()) {
    const double pad = pads[attempt];
    lp::LpSolution sol;
    if (shared_t) {
      sol = lp::solve(build_attack_lp(x, y, clfs, spec, r, pad, shared_t),
                      spec.lp_options);
    } else {
      sol = solve_l1_padded(x, y, clfs, spec, r, pad);
    }
    if (sol.status == lp::LpStatus::Optimal) {
      Vector z_mut(na, 0.0);
      for (std::size_t c = 0; c < na; ++c) {
        // shared-t layout: Δx directly; split layout: Δx = p⁺ − p⁻
        z_mut[c] = shared_t ? sol.z[c] : sol.z[c] - sol.z[na + c];
      }
      PerturbationResult res;
      res.delta = expand_and_clamp(z_mut, x, spec, r);
      res.constraint_slacks = verify(x, res.delta, y, clfs, spec);
      if (satisfies_margins(res.constraint_slacks, spec)) {
        res.status = AttackStatus::Success;
        res.cost_value = cost_norm(res.delta, r.costs, spec.norm);
        return res;
      }
      ++attempt;  // verification failed: escalate the pad
    } else if (sol.status == lp::LpStatus::Infeasible) {
      if (pad == 0.0) return failure(AttackStatus::Infeasible, x, y, clfs, spec);
      // A padded program may be spuriously infeasible near the boundary;
      // only the unpadded program decides.
      pads = {0.0};
      attempt = 0;
    } else {
      return failure(AttackStatus::SolverFailure, x, y, clfs, spec);
    }
  }
  return failure(AttackStatus::SolverFailure, x, y, clfs, spec);
}

}  // namespace

const char* to_string(AttackStatus s) {
  switch (s) {
    case AttackStatus::Success: return "Success";
    case AttackStatus::Infeasible: return "Infeasible";
    case AttackStatus::SolverFailure: return "SolverFailure";
  }
  return "SolverFailure";
}

Vector verify(const Vector& x, const Vector& delta, const std::vector<int>& y,
              const std::vector<LinearClassifier>& clfs, const AttackSpec& spec) {
  if (delta.size() != x.size())
    throw DimensionMismatch("delta dimension does not match instance");
  if (y.size() != clfs.size())
    throw LengthMismatch("labels and classifier list differ in length");
  std::vector<bool> attacked(clfs.size(), false);
  for (std::size_t j : spec.attacked)
    if (j < clfs.size()) attacked[j] = true;
  const Vector xp = add_scaled(x, 1.0, delta);
  Vector slacks(clfs.size(), 0.0);
  for (std::size_t i = 0; i < clfs.size(); ++i) {
    const double value = decision_value(clfs[i], xp);
    // The positive-only relaxation drops the label factor on attacked rows,
    // so the reported slack is the value the enforced constraint bounds.
    const double s = (spec.positive_only && attacked[i])
                         ? 1.0
                         : static_cast<double>(y[i]);
    slacks[i] = s * value;
  }
  return slacks;
}

bool satisfies_margins(const Vector& slacks, const AttackSpec& spec) {
  for (std::size_t j : spec.attacked) {
    if (j >= slacks.size()) return false;
    if (!(slacks[j] <= -spec.attack_margin)) return false;
  }
  for (std::size_t k : spec.protected_) {
    if (k >= slacks.size()) return false;
    if (!(slacks[k] >= spec.protect_margin)) return false;
  }
  return true;
}

lp::LinearProgram build_l1_lp(const Vector& x, const std::vector<int>& y,
                              const std::vector<LinearClassifier>& clfs,
                              const AttackSpec& spec, double margin_pad) {
  const ResolvedSpec r = resolve(x, y, clfs, spec);
  std::vector<std::size_t> all_caps(r.mutable_idx.size());
  std::iota(all_caps.begin(), all_caps.end(), std::size_t{0});
  return build_l1_split_lp(x, y, clfs, spec, r, margin_pad, all_caps);
}

lp::LinearProgram build_linf_lp(const Vector& x, const std::vector<int>& y,
                                const std::vector<LinearClassifier>& clfs,
                                const AttackSpec& spec, double margin_pad) {
  const ResolvedSpec r = resolve(x, y, clfs, spec);
  return build_attack_lp(x, y, clfs, spec, r, margin_pad, /*shared_t=*/true);
}

PerturbationResult attack_l1(const Vector& x, const std::vector<int>& y,
                             const std::vector<LinearClassifier>& clfs,
                             const AttackSpec& spec) {
  if (spec.norm != Norm::L1)
    throw std::invalid_argument("attack_l1 requires spec.norm == L1");
  return attack_via_lp(x, y, clfs, spec, /*shared_t=*/false);
}

PerturbationResult attack_linf(const Vector& x, const std::vector<int>& y,
                               const std::vector<LinearClassifier>& clfs,
                               const AttackSpec& spec) {
  if (spec.norm != Norm::Linf)
    throw std::invalid_argument("attack_linf requires spec.norm == Linf");
  return attack_via_lp(x, y, clfs, spec, /*shared_t=*/true);
}

namespace {

// Projected gradient ascent on the dual of
//   min Δxᵀ diag(c²) Δx   s.t.  a_k·Δx ≤ r_k   (k over margin + box rows)
// with  g(λ) = Σ λ_k a_k,  Δx(λ) = −½ Q⁻¹ g,  q(λ) = −¼ gᵀQ⁻¹g − λ·r and
// ∂q/∂λ_k = a_k·Δx(λ) − r_k (the constraint residual at the primal point).
struct DualAscent {
  const std::vector<MarginRow>& rows;
  const Vector& qinv;  // 1 / c_i² over the mutable coordinates
  Vector lambda;
  Vector g;        // Σ λ_k a_k
  Vector dx;       // −½ Q⁻¹ g
  Vector grad;     // residuals
  double q = 0.0;  // dual objective
  bool converged = false;
  bool blew_up = false;

  explicit DualAscent(const std::vector<MarginRow>& rows_in, const Vector& qinv_in)
      : rows(rows_in), qinv(qinv_in), lambda(rows_in.size(), 0.0) {}

  void refresh() {
    const std::size_t na = qinv.size();
    g.assign(na, 0.0);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (lambda[k] != 0.0)
        simd::axpy(lambda[k], rows[k].a.data(), g.data(), g.size());
    }
    dx.resize(na);
    for (std::size_t i = 0; i < na; ++i) dx[i] = -0.5 * qinv[i] * g[i];
    q = 0.0;
    for (std::size_t i = 0; i < na; ++i) q -= 0.25 * qinv[i] * g[i] * g[i];
    grad.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      q -= lambda[k] * rows[k].rhs;
      grad[k] = simd::dot(rows[k].a.data(), dx.data(), dx.size()) - rows[k].rhs;
    }
  }

  double kkt_residual() const {
    double worst = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double v = lambda[k] > 0.0 ? std::fabs(grad[k]) : std::max(grad[k], 0.0);
      worst = std::max(worst, v);
    }
    return worst;
  }

  // Runs ascent until the KKT residual drops below tol; returns early if the
  // dual objective exceeds the blow-up bound (primal infeasibility
  // certificate: a feasible primal would cap the dual from above).
  void run(int max_iters, double tol) {
    converged = false;
    blew_up = false;
    refresh();
    double lipschitz = 0.0;
    for (const auto& row : rows) {
      double s = 0.0;
      for (std::size_t i = 0; i < row.a.size(); ++i)
        s += qinv[i] * row.a[i] * row.a[i];
      lipschitz += 0.5 * s;
    }
    const double base_step = 1.0 / std::max(lipschitz, 1e-300);
    // The step adapts: doubling after clean ascents lets the dual diverge
    // geometrically on infeasible instances (reaching the blow-up certificate
    // fast); the monotone acceptance test halves it right back when needed.
    // The growth cap keeps the largest step within backtracking range.
    const double max_step = base_step * 0x1p40;
    double step = base_step;
    for (int it = 0; it < max_iters; ++it) {
      if (kkt_residual() < tol) {
        converged = true;
        return;
      }
      if (q > 1e12) {
        blew_up = true;
        return;
      }
      const Vector prev_lambda = lambda;
      const Vector prev_grad = grad;
      const double prev_q = q;
      bool accepted = false;
      bool halved = false;
      for (int bt = 0; bt < 120 && !accepted; ++bt) {
        for (std::size_t k = 0; k < rows.size(); ++k)
          lambda[k] = std::max(0.0, prev_lambda[k] + step * prev_grad[k]);
        refresh();
        accepted = q >= prev_q - 1e-15;
        if (!accepted) {
          step *= 0.5;
          halved = true;
        }
      }
      if (!accepted) {
        lambda = prev_lambda;
        refresh();
        break;  // numerically stagnated; report whatever the KKT check says
      }
      if (!halved) step = std::min(step * 2.0, max_step);
    }
    converged = kkt_residual() < tol;
    blew_up = q > 1e12;
  }
};

// Refines the ascent's final iterate into the exact optimum.  Projected
// gradient stalls once a λ-step moves the dual objective by less than its
// floating-point resolution, which for large row norms leaves the primal
// residuals around 1e-6 — enough to eat the solver pad.  The stalled λ still
// identifies the active set, so solving the KKT equality system
//   (A_S Q⁻¹ A_Sᵀ) μ = −2 r_S,   Δx = −½ Q⁻¹ A_Sᵀ μ
// directly lands the residuals at machine precision.  Rows whose multiplier
// comes out negative are dropped and strongly violated rows are added
// (bounded active-set refinement); returns nullopt when the Gram system is
// singular or the loop fails to settle, in which case the caller keeps the
// raw iterate.
std::optional<Vector> polish_active_set(const std::vector<MarginRow>& rows,
                                        const Vector& qinv, const Vector& lambda) {
  const std::size_t m = rows.size();
  const std::size_t na = qinv.size();
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < m; ++k)
    if (lambda[k] > 0.0) active.push_back(k);
  if (active.empty()) return std::nullopt;

  Vector dx(na, 0.0);
  const int max_rounds = 50;
  for (int round = 0; round < max_rounds; ++round) {
    const std::size_t s = active.size();
    // Gram system over the active rows, solved in place by Gaussian
    // elimination with partial pivoting.
    std::vector<Vector> gram(s, Vector(s + 1, 0.0));
    for (std::size_t i = 0; i < s; ++i) {
      const Vector& ai = rows[active[i]].a;
      for (std::size_t j = i; j < s; ++j) {
        const Vector& aj = rows[active[j]].a;
        double acc = 0.0;
        for (std::size_t c = 0; c < na; ++c) acc += qinv[c] * ai[c] * aj[c];
        gram[i][j] = gram[j][i] = acc;
      }
      gram[i][s] = -2.0 * rows[active[i]].rhs;
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) scale = std::max(scale, std::fabs(gram[i][j]));
    for (std::size_t col = 0; col < s; ++col) {
      std::size_t piv = col;
      for (std::size_t i = col + 1; i < s; ++i)
        if (std::fabs(gram[i][col]) > std::fabs(gram[piv][col])) piv = i;
      if (std::fabs(gram[piv][col]) <= 1e-12 * std::max(scale, 1.0)) return std::nullopt;
      std::swap(gram[col], gram[piv]);
      for (std::size_t i = col + 1; i < s; ++i) {
        const double f = gram[i][col] / gram[col][col];
        if (f == 0.0) continue;
        for (std::size_t j = col; j <= s; ++j) gram[i][j] -= f * gram[col][j];
      }
    }
    Vector mu(s, 0.0);
    for (std::size_t i = s; i-- > 0;) {
      double acc = gram[i][s];
      for (std::size_t j = i + 1; j < s; ++j) acc -= gram[i][j] * mu[j];
      mu[i] = acc / gram[i][i];
    }

    // Dual feasibility: drop the most negative multiplier and re-solve.
    std::size_t worst_neg = s;
    for (std::size_t i = 0; i < s; ++i)
      if (mu[i] < -1e-12 && (worst_neg == s || mu[i] < mu[worst_neg])) worst_neg = i;
    if (worst_neg != s) {
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst_neg));
      if (active.empty()) return std::nullopt;
      continue;
    }

    dx.assign(na, 0.0);
    for (std::size_t i = 0; i < s; ++i)
      simd::axpy(mu[i], rows[active[i]].a.data(), dx.data(), na);
    for (std::size_t c = 0; c < na; ++c) dx[c] *= -0.5 * qinv[c];

    // Primal feasibility over the inactive rows: add the worst violator.
    std::size_t worst_viol = m;
    double worst_amount = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (std::find(active.begin(), active.end(), k) != active.end()) continue;
      const double v = simd::dot(rows[k].a.data(), dx.data(), na) - rows[k].rhs;
      const double tol = 1e-9 * (1.0 + std::fabs(rows[k].rhs));
      if (v > tol && v > worst_amount) {
        worst_amount = v;
        worst_viol = k;
      }
    }
    if (worst_viol != m) {
      active.push_back(worst_viol);
      continue;
    }
    return dx;
  }
  return std::nullopt;
}

}  // namespace

PerturbationResult attack_l2(const Vector& x, const std::vector<int>& y,
                             const std::vector<LinearClassifier>& clfs,
                             const AttackSpec& spec) {
  if (spec.norm != Norm::L2)
    throw std::invalid_argument("attack_l2 requires spec.norm == L2");
  const ResolvedSpec r = resolve(x, y, clfs, spec);
  const std::size_t na = r.mutable_idx.size();

  PerturbationResult trivial;
  if (zero_delta_optimal(x, y, clfs, spec, trivial)) return trivial;

  std::vector<MarginRow> rows =
      margin_rows(x, y, clfs, spec, r, spec.solver_margin_pad);
  for (auto& row : box_rows(x, spec, r)) rows.push_back(std::move(row));

  // Rows with a zero normal are decided outright: unsatisfiable if their true
  // right-hand side is negative, vacuous otherwise.
  std::vector<MarginRow> active;
  for (auto& row : rows) {
    double amax = 0.0;
    for (double v : row.a) amax = std::max(amax, std::fabs(v));
    if (amax == 0.0) {
      if (row.rhs0 < 0.0) return failure(AttackStatus::Infeasible, x, y, clfs, spec);
      continue;
    }
    active.push_back(std::move(row));
  }

  Vector qinv(na);
  for (std::size_t c = 0; c < na; ++c) {
    const double ci = r.costs[r.mutable_idx[c]];
    qinv[c] = 1.0 / (ci * ci);
  }

  DualAscent ascent(active, qinv);
  Rng restart_rng(0x9e3779b97f4a7c15ull);
  constexpr int kMaxIters = 10000;
  constexpr double kTol = 1e-8;
  bool restarted = false;
  auto try_point = [&](const Vector& dx_mut, PerturbationResult& res) {
    res.delta = expand_and_clamp(dx_mut, x, spec, r);
    res.constraint_slacks = verify(x, res.delta, y, clfs, spec);
    if (!satisfies_margins(res.constraint_slacks, spec)) return false;
    res.status = AttackStatus::Success;
    res.cost_value = cost_norm(res.delta, r.costs, spec.norm);
    return true;
  };
  for (;;) {
    ascent.run(kMaxIters, kTol);
    if (ascent.blew_up)
      return failure(AttackStatus::Infeasible, x, y, clfs, spec);
    PerturbationResult res;
    if (const auto polished = polish_active_set(active, qinv, ascent.lambda)) {
      if (try_point(*polished, res)) return res;
    }
    if (try_point(ascent.dx, res)) return res;
    if (restarted) {
      // Converged twice onto a primal point that violates the true margins →
      // the constraint set has no interior to offer: infeasible.  Anything
      // else is a failure to converge.
      return failure(ascent.converged ? AttackStatus::Infeasible
                                      : AttackStatus::SolverFailure,
                     x, y, clfs, spec);
    }
    restarted = true;
    for (double& l : ascent.lambda) l = restart_rng.uniform();
  }
}

PerturbationResult attack(const Vector& x, const std::vector<int>& y,
                          const std::vector<LinearClassifier>& clfs,
                          const AttackSpec& spec) {
  switch (spec.norm) {
    case Norm::L1: return attack_l1(x, y, clfs, spec);
    case Norm::L2: return attack_l2(x, y, clfs, spec);
    case Norm::Linf: return attack_linf(x, y, clfs, spec);
  }
  throw std::invalid_argument("unknown norm");
}

void write_attack_csv(const std::string& path, const std::vector<int>& ids,
                      const std::vector<PerturbationResult>& results,
                      const std::vector<std::string>& concept_names) {
  if (ids.size() != results.size())
    throw LengthMismatch("ids and results differ in length");
  std::ostringstream out;
  out << "instance_id,status,cost_value";
  for (const auto& name : concept_names) out << ",slack_" << name;
  out << "\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const PerturbationResult& res = results[i];
    if (res.constraint_slacks.size() != concept_names.size())
      throw LengthMismatch("slack vector does not match concept names");
    out << ids[i] << "," << to_string(res.status) << ","
        << io::format_double(res.cost_value);
    for (double s : res.constraint_slacks) out << "," << io::format_double(s);
    out << "\n";
  }
  io::write_file(path, out.str());
}

}  // namespace polyattack
