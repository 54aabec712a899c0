#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polyattack/dataset.hpp"
#include "polyattack/linalg.hpp"

namespace polyattack {

struct LinearClassifier {
  Vector w;
  double b = 0.0;
  std::string concept_name;
};

// w·x + b
double decision_value(const LinearClassifier& clf, const Vector& x);

// +1 if w·x+b > 0 else −1 (exact 0 maps to −1, consistent with the attack
// constraint "≤ 0" counting as flipped for positive instances).
int predict(const LinearClassifier& clf, const Vector& x);

struct SvmHyperParams {
  double lambda_reg = 1e-4;
  int epochs = 20;
  std::uint64_t seed = 1;
};

struct SvmTrainResult {
  LinearClassifier clf;
  double train_accuracy = 0.0;
  // Regularized hinge objective after each epoch (for the monotonicity check).
  std::vector<double> epoch_objectives;
};

// Pegasos subgradient training with the classic 1/√λ ball projection,
// shuffled each epoch under the seed.  Throws DegenerateLabels when the
// concept has a single class.
SvmTrainResult train_svm(const ConceptDataset& ds, int concept_idx,
                         const SvmHyperParams& hp = {});

// Persistence: {"concept": ..., "b": ..., "w": [...]} with round-trip-safe
// decimal encoding.
std::string linear_to_json(const LinearClassifier& clf);
LinearClassifier linear_from_json(const std::string& text);

}  // namespace polyattack
