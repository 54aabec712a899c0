#include "polyattack/multigrad.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "polyattack/errors.hpp"
#include "polyattack/io_util.hpp"
#include "polyattack/simd_kernels.hpp"

namespace polyattack {
namespace {

void validate(const std::vector<MlpClassifier>& nets, const Vector& x,
              const Vector& y, const MultiAttackConfig& cfg) {
  if (y.size() != nets.size())
    throw LengthMismatch("labels and network list differ in length");
  for (double t : y) {
    if (t != 0.0 && t != 1.0)
      throw std::invalid_argument("labels must be exactly 0 or 1");
  }
  for (const MlpClassifier& net : nets) check_shapes(net, x.size());
  std::vector<bool> in_attacked(nets.size(), false);
  for (std::size_t i : cfg.attacked) {
    if (i >= nets.size()) throw std::invalid_argument("attacked index out of range");
    in_attacked[i] = true;
  }
  for (std::size_t i : cfg.protected_) {
    if (i >= nets.size()) throw std::invalid_argument("protected index out of range");
    if (in_attacked[i])
      throw std::invalid_argument("attacked and protected sets must be disjoint");
  }
  if (!cfg.lambda_weights.empty()) {
    if (cfg.lambda_weights.size() != nets.size())
      throw LengthMismatch("lambda_weights must have one entry per classifier");
    for (double l : cfg.lambda_weights) {
      if (!(l > 0.0)) throw std::invalid_argument("lambda_weights must be > 0");
    }
  }
  if (cfg.norm != Norm::L2 && cfg.norm != Norm::Linf)
    throw std::invalid_argument("attack ball must be L2 or Linf");
  if (cfg.epsilon < 0.0) throw std::invalid_argument("epsilon must be >= 0");
  if (cfg.iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (!(cfg.clip_lo <= cfg.clip_hi))
    throw std::invalid_argument("clip box has lo > hi");
}

}  // namespace

MultiAttackConfig default_config(Norm norm) {
  MultiAttackConfig cfg;
  cfg.norm = norm;
  cfg.iterations = 200;
  if (norm == Norm::L2) {
    cfg.epsilon = 4.0;
    cfg.step_size = 0.8;
  } else {
    cfg.epsilon = 0.3;
    cfg.step_size = 0.06;
  }
  return cfg;
}

std::pair<CombinedLoss, Vector> combined_loss_grad(
    const std::vector<MlpClassifier>& nets, const Vector& x, const Vector& y,
    const MultiAttackConfig& cfg) {
  validate(nets, x, y, cfg);
  CombinedLoss loss;
  loss.per_classifier.assign(nets.size(), 0.0);
  Vector grad(x.size(), 0.0);

  auto accumulate = [&](const std::vector<std::size_t>& members, bool negate) {
    if (members.empty()) return;
    const double inv = 1.0 / static_cast<double>(members.size());
    for (std::size_t i : members) {
      const double lambda =
          cfg.lambda_weights.empty() ? 1.0 : cfg.lambda_weights[i];
      const double target = negate ? 1.0 - y[i] : y[i];
      const double term = lambda * bce_loss(forward(nets[i], x), target);
      loss.per_classifier[i] = term;
      loss.value += inv * term;
      const Vector g = input_gradient(nets[i], x, target);
      simd::axpy(inv * lambda, g.data(), grad.data(), grad.size());
    }
  };
  accumulate(cfg.attacked, /*negate=*/false);
  accumulate(cfg.protected_, /*negate=*/true);
  return {std::move(loss), std::move(grad)};
}

Vector attack(const std::vector<MlpClassifier>& nets, const Vector& x,
              const Vector& y, const MultiAttackConfig& cfg,
              AttackTrace* trace) {
  validate(nets, x, y, cfg);
  Vector xp = x;
  for (int it = 0; it < cfg.iterations; ++it) {
    auto [loss, grad] = combined_loss_grad(nets, xp, y, cfg);
    if (trace) trace->loss_per_iteration.push_back(loss.value);
    const double gnorm = norm(grad, Norm::L2);
    if (gnorm < 1e-12) {
      if (trace) ++trace->zero_gradient_steps;
      continue;  // saturated iterate: skip the step, keep iterating
    }
    if (cfg.norm == Norm::L2) {
      simd::axpy(cfg.step_size / gnorm, grad.data(), xp.data(), xp.size());
    } else {
      for (std::size_t i = 0; i < xp.size(); ++i) {
        if (grad[i] > 0.0) xp[i] += cfg.step_size;
        else if (grad[i] < 0.0) xp[i] -= cfg.step_size;
      }
    }
    // ε-ball projection of the perturbation, then the box clamp (fixed order).
    Vector delta = add_scaled(xp, -1.0, x);
    if (cfg.norm == Norm::L2) {
      const double dnorm = norm(delta, Norm::L2);
      if (dnorm > cfg.epsilon)
        for (double& d : delta) d *= cfg.epsilon / dnorm;
    } else {
      for (double& d : delta) d = std::clamp(d, -cfg.epsilon, cfg.epsilon);
    }
    for (std::size_t i = 0; i < xp.size(); ++i)
      xp[i] = std::clamp(x[i] + delta[i], cfg.clip_lo, cfg.clip_hi);
  }
  return xp;
}

Vector baseline_pgd(const MlpClassifier& net, const Vector& x, double y,
                    const MultiAttackConfig& cfg, AttackTrace* trace) {
  MultiAttackConfig single = cfg;
  single.attacked = {0};
  single.protected_.clear();
  // With one attacked model the λ weight scales loss and gradient uniformly
  // and the step is normalized, so it cannot change the iterates; drop it
  // rather than guess which registry entry this net was.
  single.lambda_weights.clear();
  return attack({net}, x, {y}, single, trace);
}

void write_perturbed_csv(const std::string& path, const std::vector<int>& ids,
                         const std::vector<Vector>& instances) {
  if (ids.size() != instances.size())
    throw LengthMismatch("ids and instances differ in length");
  std::ostringstream out;
  out << "id";
  const std::size_t dim = instances.empty() ? 0 : instances.front().size();
  for (std::size_t j = 0; j < dim; ++j) out << ",f" << j;
  out << "\n";
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].size() != dim)
      throw DimensionMismatch("ragged instance rows");
    out << ids[i];
    for (double v : instances[i]) out << "," << io::format_double(v);
    out << "\n";
  }
  io::write_file(path, out.str());
}

}  // namespace polyattack
