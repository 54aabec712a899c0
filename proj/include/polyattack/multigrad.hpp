#pragma once

// Multi-concept gradient attack for nonlinear classifiers.
//
// Projected gradient ascent on the combined loss
//
//   (1/|M|) Σ_{i∈M} λ_i · BCE(f_i(x′), y_i)  +
//   (1/|N|) Σ_{i∈N} λ_i · BCE(f_i(x′), 1−y_i)
//
// where M is the attacked set (raise the loss on the true label) and N the
// protected set (raise the loss on the negated label, i.e. hold the true
// prediction).  Each iterate steps along the normalized gradient, projects
// the perturbation onto the ε-ball of the chosen norm, then clamps into the
// feature box — that order is part of the contract since the composition is
// not a joint projection.  The single-model PGD baseline is the M={net},
// N=∅ special case.

#include <string>
#include <vector>

#include "polyattack/linalg.hpp"
#include "polyattack/mlp.hpp"

namespace polyattack {

struct MultiAttackConfig {
  std::vector<std::size_t> attacked;    // index set M
  std::vector<std::size_t> protected_;  // index set N, disjoint from M
  Norm norm = Norm::Linf;               // L2 or Linf ball
  double epsilon = 0.3;                 // ball radius in feature scale
  double step_size = 0.06;              // α
  int iterations = 200;
  Vector lambda_weights;          // per classifier; empty = all ones
  double clip_lo = 0.0;           // feature box, applied after the ball
  double clip_hi = 1.0;
};

// Defaults from the evaluation protocol: 200 iterations, λ=1 and
// (L2: ε=4, α=0.8) / (L∞: ε=0.3, α=0.06) in [0,1] feature scale.
MultiAttackConfig default_config(Norm norm);

struct CombinedLoss {
  double value = 0.0;
  Vector per_classifier;  // λ_i-scaled loss term for i ∈ M ∪ N, else 0
};

// Combined loss and its exact input gradient at x.  Labels y are {0,1} per
// classifier.  Throws on invalid sets/dims; never fails numerically.
std::pair<CombinedLoss, Vector> combined_loss_grad(
    const std::vector<MlpClassifier>& nets, const Vector& x, const Vector& y,
    const MultiAttackConfig& cfg);

struct AttackTrace {
  int zero_gradient_steps = 0;        // iterates skipped at ‖grad‖₂ < 1e-12
  std::vector<double> loss_per_iteration;  // combined loss before each step
};

// PGD ascent on the combined loss.  Returns x′ with ‖x′−x‖_norm ≤ ε and every
// coordinate in [clip_lo, clip_hi]; ε=0 or iterations=0 return x bit-exactly.
Vector attack(const std::vector<MlpClassifier>& nets, const Vector& x,
              const Vector& y, const MultiAttackConfig& cfg,
              AttackTrace* trace = nullptr);

// Single-model PGD baseline: attack with M = {net}, N = ∅.  cfg.attacked /
// cfg.protected_ are ignored.
Vector baseline_pgd(const MlpClassifier& net, const Vector& x, double y,
                    const MultiAttackConfig& cfg, AttackTrace* trace = nullptr);

// CSV export of perturbed instances: header id,f0,…,fd-1, one row each.
void write_perturbed_csv(const std::string& path, const std::vector<int>& ids,
                         const std::vector<Vector>& instances);

}  // namespace polyattack
