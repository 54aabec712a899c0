#include "polyattack/svm.hpp"

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "polyattack/errors.hpp"
#include "polyattack/rng.hpp"
#include "polyattack/simd_kernels.hpp"

namespace polyattack {

double decision_value(const LinearClassifier& clf, const Vector& x) {
  if (clf.w.size() != x.size()) {
    throw DimensionMismatch("decision_value: weight dim " + std::to_string(clf.w.size()) +
                            " vs input dim " + std::to_string(x.size()));
  }
  return simd::dot(clf.w.data(), x.data(), x.size()) + clf.b;
}

int predict(const LinearClassifier& clf, const Vector& x) {
  return decision_value(clf, x) > 0.0 ? +1 : -1;
}

namespace {

double hinge_objective(const ConceptDataset& ds, int concept_idx, const LinearClassifier& clf,
                       double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double margin = ds.labels[i][concept_idx] * decision_value(clf, ds.instances[i]);
    hinge += std::max(0.0, 1.0 - margin);
  }
  return 0.5 * lambda * simd::sum_sq(clf.w.data(), clf.w.size()) + hinge / ds.size();
}

}  // namespace

SvmTrainResult train_svm(const ConceptDataset& ds, int concept_idx, const SvmHyperParams& hp) {
  if (concept_idx < 0 || static_cast<std::size_t>(concept_idx) >= ds.concept_names.size()) {
    throw ConfigError("train_svm: concept index out of range");
  }
  std::size_t pos = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i][concept_idx] == +1) ++pos;
  }
  if (pos == 0 || pos == ds.size()) {
    throw DegenerateLabels("train_svm: concept " + ds.concept_names[concept_idx] +
                           " has a single class");
  }

  SvmTrainResult res;
  res.clf.concept_name = ds.concept_names[concept_idx];
  res.clf.w.assign(ds.dim(), 0.0);
  double& b = res.clf.b;
  Vector& w = res.clf.w;

  const double lambda = hp.lambda_reg;
  const double radius = 1.0 / std::sqrt(lambda);
  Rng rng(hp.seed);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);

  long t = 0;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const Vector& x = ds.instances[i];
      const double y = ds.labels[i][concept_idx];
      const double margin = y * (simd::dot(w.data(), x.data(), w.size()) + b);
      simd::scale(w.data(), 1.0 - eta * lambda, w.size());
      if (margin < 1.0) {
        simd::axpy(eta * y, x.data(), w.data(), w.size());
        b += eta * y;  // unregularized bias step
      }
      const double nrm = std::sqrt(simd::sum_sq(w.data(), w.size()));
      if (nrm > radius) simd::scale(w.data(), radius / nrm, w.size());
    }
    res.epoch_objectives.push_back(hinge_objective(ds, concept_idx, res.clf, lambda));
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (predict(res.clf, ds.instances[i]) == ds.labels[i][concept_idx]) ++correct;
  }
  res.train_accuracy = static_cast<double>(correct) / ds.size();
  return res;
}

std::string linear_to_json(const LinearClassifier& clf) {
  nlohmann::json j;
  j["concept"] = clf.concept_name;
  j["b"] = clf.b;
  j["w"] = clf.w;
  return j.dump(2) + "\n";
}

LinearClassifier linear_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  LinearClassifier clf;
  clf.concept_name = j.at("concept").get<std::string>();
  clf.b = j.at("b").get<double>();
  clf.w = j.at("w").get<Vector>();
  return clf;
}

}  // namespace polyattack
