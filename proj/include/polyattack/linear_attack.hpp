#pragma once

// Minimum-cost perturbations against sets of linear classifiers.
//
// Given an instance x, per-concept labels y and a registry of linear
// classifiers, computes the smallest perturbation Δx (under an L1, L2 or L∞
// cost) that flips every classifier in the attacked set while every
// classifier in the protected set keeps a positive margin on the true label:
//
//   attacked j:   y_j (w_j·(x+Δx) + b_j) ≤ −δ_att
//   protected k:  y_k (w_k·(x+Δx) + b_k) ≥ +δ_prot
//
// L1 and L∞ costs reduce to linear programs solved with lp::solve; the L2
// cost is handled by projected gradient ascent on the Lagrangian dual of the
// diagonal QP.  Every Success result is re-verified against the margin
// constraints in plain arithmetic — nothing is trusted from the solver.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polyattack/linalg.hpp"
#include "polyattack/simplex.hpp"
#include "polyattack/svm.hpp"

namespace polyattack {

enum class AttackStatus : std::uint8_t { Success, Infeasible, SolverFailure };

const char* to_string(AttackStatus s);

struct FeatureBox {
  Vector lo;  // per-feature lower bound on x + Δx
  Vector hi;  // per-feature upper bound on x + Δx
};

struct AttackSpec {
  std::vector<std::size_t> attacked;    // indices J into the classifier list
  std::vector<std::size_t> protected_;  // indices K, disjoint from J
  Norm norm = Norm::L1;
  Vector costs;  // per-feature positive costs c; empty = all ones
  double attack_margin = 1e-4;   // δ_att ≥ 0
  double protect_margin = 1e-4;  // δ_prot ≥ 0
  std::vector<std::size_t> mutable_features;  // set A; empty = all features
  std::optional<FeatureBox> box;              // bounds on x + Δx, if any
  bool positive_only = false;  // §3.1.1 relaxation: drop the label factor on
                               // attacked rows so only positive instances are
                               // forced across the boundary
  // Margins are tightened by this pad inside the solver so that solver
  // tolerance cannot leak into the verified result.  Escalated automatically
  // when verification of an Optimal point fails.
  double solver_margin_pad = 1e-6;
  lp::SolveOptions lp_options;
};

struct PerturbationResult {
  AttackStatus status = AttackStatus::SolverFailure;
  Vector delta;               // zero vector unless status == Success
  double cost_value = 0.0;    // cost norm of delta (0 unless Success)
  Vector constraint_slacks;   // y_i (w_i·(x+Δx)+b_i) for every classifier,
                              // at Δx = delta (Δx = 0 for failures)
};

// Slack vector y_i (w_i·(x+delta) + b_i) for every classifier; pure
// arithmetic, no solver involved.  positive_only drops the label factor on
// the listed attacked rows.
Vector verify(const Vector& x, const Vector& delta, const std::vector<int>& y,
              const std::vector<LinearClassifier>& clfs, const AttackSpec& spec);

// True iff the slack vector satisfies every attacked/protected margin of the
// spec (closed inequalities: a slack of exactly −δ_att counts as attacked).
bool satisfies_margins(const Vector& slacks, const AttackSpec& spec);

// LP constructions from §3.1.1 / §3.1.2, exposed so tests can cross-check
// them against a vertex-enumeration oracle.  The L1 program uses the
// positive/negative-part encoding [p⁺_{A[0]}, …, p⁻_{A[0]}, …] (all
// nonnegative, Δx = p⁺ − p⁻); the L∞ program is ordered [Δx_A…, t] with the
// Δx block free and the shared bound t nonnegative.  margin_pad is added to
// both margins inside the rows.
lp::LinearProgram build_l1_lp(const Vector& x, const std::vector<int>& y,
                              const std::vector<LinearClassifier>& clfs,
                              const AttackSpec& spec, double margin_pad);
lp::LinearProgram build_linf_lp(const Vector& x, const std::vector<int>& y,
                                const std::vector<LinearClassifier>& clfs,
                                const AttackSpec& spec, double margin_pad);

// Minimum Σ c_i |Δx_i| perturbation (§3.1.1).  Requires spec.norm == L1.
PerturbationResult attack_l1(const Vector& x, const std::vector<int>& y,
                             const std::vector<LinearClassifier>& clfs,
                             const AttackSpec& spec);

// Minimum max_i c_i |Δx_i| perturbation (§3.1.2).  Requires spec.norm == Linf.
PerturbationResult attack_linf(const Vector& x, const std::vector<int>& y,
                               const std::vector<LinearClassifier>& clfs,
                               const AttackSpec& spec);

// Minimum ‖c ⊙ Δx‖₂ perturbation (§3.1.3) via projected gradient ascent on
// the Lagrangian dual of  min Δxᵀ diag(c²) Δx  s.t. the margin rows.
// Requires spec.norm == L2.
PerturbationResult attack_l2(const Vector& x, const std::vector<int>& y,
                             const std::vector<LinearClassifier>& clfs,
                             const AttackSpec& spec);

// Dispatch on spec.norm.
PerturbationResult attack(const Vector& x, const std::vector<int>& y,
                          const std::vector<LinearClassifier>& clfs,
                          const AttackSpec& spec);

// Batch export: one row per instance —
//   instance_id,status,cost_value,slack_<concept>...
void write_attack_csv(const std::string& path, const std::vector<int>& ids,
                      const std::vector<PerturbationResult>& results,
                      const std::vector<std::string>& concept_names);

}  // namespace polyattack
