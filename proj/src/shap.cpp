#include "polyattack/shap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "polyattack/errors.hpp"
#include "polyattack/io_util.hpp"
#include "polyattack/rng.hpp"

namespace polyattack {

Attribution linear_shap(const LinearClassifier& clf, const Vector& x,
                        const Vector& background_mean) {
  if (x.size() != clf.w.size() || background_mean.size() != clf.w.size()) {
    throw DimensionMismatch("linear_shap: x/background dimension != weight dimension");
  }
  Attribution attr;
  attr.phi.assign(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    attr.phi[i] = clf.w[i] * (x[i] - background_mean[i]);
  }
  attr.base_value = dot(clf.w, background_mean) + clf.b;
  attr.model_output = dot(clf.w, x) + clf.b;
  return attr;
}

Attribution gradient_shap(const MlpClassifier& net, const Vector& x,
                          const std::vector<Vector>& background, int samples,
                          std::uint64_t seed) {
  check_shapes(net, x.size());
  const std::size_t dim = x.size();
  if (background.empty()) {
    throw std::invalid_argument("gradient_shap: background must be non-empty");
  }
  for (const Vector& b : background) {
    if (b.size() != dim) {
      throw DimensionMismatch("gradient_shap: background dimension != network input dimension");
    }
  }
  if (samples < 1) {
    throw std::invalid_argument("gradient_shap: samples must be >= 1");
  }

  Attribution attr;
  attr.phi.assign(dim, 0.0);
  attr.model_output = logit(net, x);

  // Stratified u keeps the path integral low-variance; every background is
  // visited at each draw so constant-gradient models are exact regardless of
  // the sample count.
  Rng rng(seed);
  Vector point(dim, 0.0);
  const double pair_weight = 1.0 / (static_cast<double>(samples) *
                                    static_cast<double>(background.size()));
  double base_sum = 0.0;
  for (const Vector& b : background) {
    base_sum += logit(net, b);
  }
  attr.base_value = base_sum / static_cast<double>(background.size());

  for (int s = 0; s < samples; ++s) {
    const double u = (static_cast<double>(s) + rng.uniform()) /
                     static_cast<double>(samples);
    for (const Vector& b : background) {
      for (std::size_t i = 0; i < dim; ++i) {
        point[i] = b[i] + u * (x[i] - b[i]);
      }
      const Vector grad = logit_input_gradient(net, point);
      for (std::size_t i = 0; i < dim; ++i) {
        attr.phi[i] += pair_weight * grad[i] * (x[i] - b[i]);
      }
    }
  }
  return attr;
}

double attribution_shift(const Attribution& before, const Attribution& after) {
  if (before.phi.size() != after.phi.size()) {
    throw LengthMismatch("attribution_shift: phi vectors of unequal length");
  }
  const double na = norm(before.phi, Norm::L2);
  const double nb = norm(after.phi, Norm::L2);
  if (na == 0.0 || nb == 0.0) {
    throw ZeroVector("attribution_shift: attribution vector is identically zero");
  }
  double cosine = dot(before.phi, after.phi) / (na * nb);
  cosine = std::clamp(cosine, -1.0, 1.0);
  return 1.0 - cosine;
}

void write_attribution_pgm(const std::string& path, const Attribution& attr,
                           int height, int width) {
  if (height <= 0 || width <= 0 ||
      attr.phi.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw DimensionMismatch("write_attribution_pgm: phi size != height*width");
  }
  const auto [lo_it, hi_it] = std::minmax_element(attr.phi.begin(), attr.phi.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double span = hi - lo;
  Vector scaled(attr.phi.size(), 0.5);
  if (span > 0.0) {
    for (std::size_t i = 0; i < attr.phi.size(); ++i) {
      scaled[i] = (attr.phi[i] - lo) / span;
    }
  }
  io::write_pgm(path, scaled, height, width);

  nlohmann::json side;
  side["min_phi"] = lo;
  side["max_phi"] = hi;
  side["pixel_formula"] = "round(255 * (phi - min_phi) / (max_phi - min_phi))";
  side["base_value"] = attr.base_value;
  side["model_output"] = attr.model_output;
  io::write_file(path + ".json", side.dump(2) + "\n");
}

}  // namespace polyattack
