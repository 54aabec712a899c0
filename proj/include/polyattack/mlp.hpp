#pragma once

// Minimal feed-forward binary classifiers with exact backpropagation.
//
// A network is a chain of affine layers with ReLU or Identity activations
// ending in a single logit; forward() applies a sigmoid to that logit.  The
// module exposes the exact input gradient of the binary cross-entropy loss
// (the quantity the multi-concept gradient attack ascends) and of the raw
// logit (the quantity gradient-SHAP integrates).

#include <cstdint>
#include <string>
#include <vector>

#include "polyattack/dataset.hpp"
#include "polyattack/linalg.hpp"

namespace polyattack {

enum class Activation : std::uint8_t { ReLU, Identity };

enum class LossKind : std::uint8_t { BinaryCrossEntropy };

struct MlpLayer {
  Matrix weights;  // out × in, row-major
  Vector bias;     // size out
  Activation activation = Activation::ReLU;
};

struct MlpClassifier {
  std::vector<MlpLayer> layers;  // consecutive dimensions chain; final out = 1
  std::string concept_name;
};

// Throws DimensionMismatch unless consecutive layer shapes chain from
// input_dim down to a single output.
void check_shapes(const MlpClassifier& net, std::size_t input_dim);

// Raw pre-sigmoid output.
double logit(const MlpClassifier& net, const Vector& x);

// sigmoid(logit); deterministic, in (0,1).
double forward(const MlpClassifier& net, const Vector& x);

// +1 if forward > 0.5 else −1; with a single Identity layer this matches
// linear predict() exactly (both thresholds sit at logit 0).
int predict(const MlpClassifier& net, const Vector& x);

// Binary cross-entropy of a probability against a {0,1} target, with the
// probability clamped to [1e-12, 1−1e-12] before the logs.
double bce_loss(double probability, double target);

// Exact ∂BCE(forward(net,x), target)/∂x via backpropagation; the logit-space
// derivative is σ(z) − target, so no clamping enters the gradient.
Vector input_gradient(const MlpClassifier& net, const Vector& x, double target,
                      LossKind loss = LossKind::BinaryCrossEntropy);

// Exact ∂logit(net,x)/∂x.
Vector logit_input_gradient(const MlpClassifier& net, const Vector& x);

struct MlpHyperParams {
  std::vector<std::size_t> hidden_sizes = {16};
  double lr = 0.05;
  int epochs = 30;
  std::size_t batch = 32;
  std::uint64_t seed = 1;
  double val_fraction = 0.1;  // deterministic tail split under the seed
};

struct MlpTrainResult {
  MlpClassifier net;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

// He-initialized SGD on BCE for one concept column of the dataset.  Labels
// map {−1→0, +1→1} at this boundary.  Deterministic under hp.seed.
// Throws DegenerateLabels if the training split has a single class.
MlpTrainResult train_mlp(const ConceptDataset& ds, int concept_idx,
                         const MlpHyperParams& hp);

// JSON persistence (layer shapes + row-major weights, round-trip-safe
// decimals).
std::string mlp_to_json(const MlpClassifier& net);
MlpClassifier mlp_from_json(const std::string& text);

}  // namespace polyattack
