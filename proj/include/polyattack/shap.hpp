#pragma once

// Feature attribution: exact SHAP for linear models, sampled gradient-SHAP
// for MLPs, and the cosine-distance shift metric used to show that attacks
// erase attacked-concept evidence while preserving protected-concept
// evidence.
//
// MLP attributions are computed on the pre-sigmoid logit (saturation would
// flatten probability-space gradients).  gradient_shap averages
// ∇logit(b + u(x−b)) ⊙ (x−b) over every background b crossed with `samples`
// stratified uniform draws of u — exhausting the backgrounds (rather than
// sampling them) keeps the constant-gradient case exact for any sample count
// and the estimator deterministic under the seed.

#include <cstdint>
#include <string>
#include <vector>

#include "polyattack/linalg.hpp"
#include "polyattack/mlp.hpp"
#include "polyattack/svm.hpp"

namespace polyattack {

struct Attribution {
  Vector phi;                // per-feature contribution
  double base_value = 0.0;   // model output at the baseline (mean background)
  double model_output = 0.0; // model output at x
};

// φᵢ = wᵢ (xᵢ − μᵢ); base = w·μ + b; exact efficiency Σφ = output − base.
Attribution linear_shap(const LinearClassifier& clf, const Vector& x,
                        const Vector& background_mean);

// Sampled expected-gradients attribution on the logit.  background must be
// non-empty and samples ≥ 1; deterministic under seed.
Attribution gradient_shap(const MlpClassifier& net, const Vector& x,
                          const std::vector<Vector>& background, int samples,
                          std::uint64_t seed);

// Cosine distance between the two phi vectors, in [0, 2].  Throws ZeroVector
// if either attribution is identically zero.
double attribution_shift(const Attribution& before, const Attribution& after);

// Image-shaped attribution dumped as P5 PGM after an affine rescale of
// [min φ, max φ] onto [0, 255]; the rescale parameters land in a sidecar
// JSON at path + ".json".
void write_attribution_pgm(const std::string& path, const Attribution& attr,
                           int height, int width);

}  // namespace polyattack
