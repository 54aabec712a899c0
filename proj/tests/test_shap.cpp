#include "polyattack/shap.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "polyattack/errors.hpp"
#include "polyattack/io_util.hpp"
#include "polyattack/rng.hpp"

using namespace polyattack;

namespace {

MlpClassifier identity_net(Vector w, double b) {
  MlpClassifier net;
  MlpLayer l;
  l.weights.rows = 1;
  l.weights.cols = w.size();
  l.weights.data = std::move(w);
  l.bias = {b};
  l.activation = Activation::Identity;
  net.layers.push_back(std::move(l));
  return net;
}

MlpClassifier random_net(Rng& rng, std::size_t in_dim, std::size_t hidden) {
  MlpClassifier net;
  MlpLayer l1;
  l1.weights.rows = hidden;
  l1.weights.cols = in_dim;
  l1.weights.data.resize(hidden * in_dim);
  for (double& w : l1.weights.data) w = rng.uniform(-1.0, 1.0);
  l1.bias.resize(hidden);
  for (double& b : l1.bias) b = rng.uniform(-0.5, 0.5);
  l1.activation = Activation::ReLU;
  net.layers.push_back(std::move(l1));
  MlpLayer l2;
  l2.weights.rows = 1;
  l2.weights.cols = hidden;
  l2.weights.data.resize(hidden);
  for (double& w : l2.weights.data) w = rng.uniform(-1.0, 1.0);
  l2.bias = {rng.uniform(-0.5, 0.5)};
  l2.activation = Activation::Identity;
  net.layers.push_back(std::move(l2));
  return net;
}

double sum(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST_CASE("linear shap closed form") {
  SUBCASE("x equal to the baseline mean gives zero attribution everywhere") {
    LinearClassifier clf{{0.4, -1.7, 2.0}, 0.3, "c"};
    const Vector x = {0.9, -0.2, 5.0};
    const Attribution a = linear_shap(clf, x, x);
    for (double p : a.phi) CHECK(p == 0.0);
    CHECK(a.base_value == a.model_output);
  }
  SUBCASE("worked example") {
    LinearClassifier clf{{2.0, 0.0}, 0.0, "c"};
    const Attribution a = linear_shap(clf, {3.0, 9.0}, {0.0, 0.0});
    REQUIRE(a.phi.size() == 2);
    CHECK(a.phi[0] == 6.0);
    CHECK(a.phi[1] == 0.0);
    CHECK(a.base_value == 0.0);
    CHECK(a.model_output == 6.0);
  }
  SUBCASE("efficiency holds to 1e-12 on random instances") {
    Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t dim = 1 + rng.uniform_index(12);
      LinearClassifier clf;
      clf.b = rng.uniform(-2.0, 2.0);
      clf.w.resize(dim);
      Vector x(dim), mu(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        clf.w[i] = rng.uniform(-3.0, 3.0);
        x[i] = rng.uniform(-2.0, 2.0);
        mu[i] = rng.uniform(-2.0, 2.0);
      }
      const Attribution a = linear_shap(clf, x, mu);
      CHECK(std::fabs(sum(a.phi) - (a.model_output - a.base_value)) < 1e-12);
      CHECK(a.model_output == doctest::Approx(dot(clf.w, x) + clf.b).epsilon(1e-15));
    }
  }
  SUBCASE("dimension mismatch throws") {
    LinearClassifier clf{{1.0, 2.0}, 0.0, "c"};
    CHECK_THROWS_AS(linear_shap(clf, {1.0}, {0.0, 0.0}), DimensionMismatch);
    CHECK_THROWS_AS(linear_shap(clf, {1.0, 2.0}, {0.0}), DimensionMismatch);
  }
}

TEST_CASE("gradient shap on a constant-gradient net reduces to linear shap") {
  Rng rng(77);
  const Vector w = {1.5, -0.7, 0.3, 2.2};
  const MlpClassifier net = identity_net(w, -0.4);
  LinearClassifier clf{w, -0.4, "c"};

  std::vector<Vector> background;
  Vector mu(4, 0.0);
  for (int k = 0; k < 5; ++k) {
    Vector b(4);
    for (double& v : b) v = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < 4; ++i) mu[i] += b[i] / 5.0;
    background.push_back(std::move(b));
  }
  const Vector x = {0.3, 0.9, -0.6, 0.1};
  const Attribution lin = linear_shap(clf, x, mu);

  // "Any sample count": counts that do and do not divide the background size.
  for (int samples : {1, 3, 7, 40}) {
    const Attribution grad = gradient_shap(net, x, background, samples, 5);
    REQUIRE(grad.phi.size() == lin.phi.size());
    for (std::size_t i = 0; i < grad.phi.size(); ++i) {
      CHECK(std::fabs(grad.phi[i] - lin.phi[i]) < 1e-10);
    }
    CHECK(std::fabs(grad.base_value - lin.base_value) < 1e-10);
    CHECK(std::fabs(grad.model_output - lin.model_output) < 1e-12);
  }
}

TEST_CASE("gradient shap with the input as its own background is exactly zero") {
  Rng rng(78);
  const MlpClassifier net = random_net(rng, 5, 6);
  const Vector x = {0.2, 0.8, -0.1, 0.5, 0.9};
  const Attribution a = gradient_shap(net, x, {x}, 20, 9);
  for (double p : a.phi) CHECK(p == 0.0);
  CHECK(a.base_value == a.model_output);
}

TEST_CASE("gradient shap tracks the dense path-integral oracle within 5%") {
  Rng rng(4242);
  int tested = 0;
  for (int trial = 0; trial < 8 && tested < 5; ++trial) {
    const std::size_t dim = 4 + rng.uniform_index(3);
    const MlpClassifier net = random_net(rng, dim, 8);
    Vector x(dim);
    for (double& v : x) v = rng.uniform(-1.5, 1.5);
    std::vector<Vector> background;
    for (int k = 0; k < 16; ++k) {
      Vector b(dim);
      for (double& v : b) v = rng.uniform(-1.5, 1.5);
      background.push_back(std::move(b));
    }
    const Vector oracle = oracles::path_integral_shap_oracle(net, x, background, 10000);
    const double oracle_norm = norm(oracle, Norm::L2);
    if (oracle_norm < 1e-3) continue;  // degenerate draw; attribution ~ 0
    ++tested;

    const Attribution est = gradient_shap(net, x, background, 200, 2026);
    Vector diff = est.phi;
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= oracle[i];
    CHECK(norm(diff, Norm::L2) <= 0.05 * oracle_norm);

    // Efficiency of the estimate against its own recorded outputs.
    const double gap = est.model_output - est.base_value;
    CHECK(std::fabs(sum(est.phi) - gap) <= 0.05 * std::fabs(gap) + 1e-9);
  }
  CHECK(tested >= 5);
}

TEST_CASE("gradient shap determinism and validation") {
  Rng rng(99);
  const MlpClassifier net = random_net(rng, 4, 5);
  const Vector x = {0.1, 0.2, 0.3, 0.4};
  std::vector<Vector> background;
  for (int k = 0; k < 3; ++k) {
    Vector b(4);
    for (double& v : b) v = rng.uniform(-1.0, 1.0);
    background.push_back(std::move(b));
  }

  SUBCASE("same seed reproduces bitwise, different seed differs") {
    const Attribution a = gradient_shap(net, x, background, 25, 7);
    const Attribution b = gradient_shap(net, x, background, 25, 7);
    const Attribution c = gradient_shap(net, x, background, 25, 8);
    REQUIRE(a.phi.size() == b.phi.size());
    for (std::size_t i = 0; i < a.phi.size(); ++i) CHECK(a.phi[i] == b.phi[i]);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.phi.size(); ++i) any_diff |= (a.phi[i] != c.phi[i]);
    CHECK(any_diff);
  }
  SUBCASE("bad inputs throw") {
    CHECK_THROWS_AS(gradient_shap(net, x, {}, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(gradient_shap(net, x, background, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(gradient_shap(net, {0.1, 0.2}, background, 10, 1), DimensionMismatch);
    CHECK_THROWS_AS(gradient_shap(net, x, {Vector{1.0}}, 10, 1), DimensionMismatch);
  }
}

TEST_CASE("attribution shift is the cosine distance") {
  Attribution a, b;
  a.phi = {1.0, 2.0, -1.0};

  SUBCASE("identical gives zero") {
    b.phi = a.phi;
    CHECK(attribution_shift(a, b) == 0.0);
  }
  SUBCASE("negated gives two") {
    b.phi = {-1.0, -2.0, 1.0};
    CHECK(attribution_shift(a, b) == 2.0);
  }
  SUBCASE("orthogonal gives one") {
    a.phi = {1.0, 0.0};
    b.phi = {0.0, -3.0};
    CHECK(attribution_shift(a, b) == 1.0);
  }
  SUBCASE("scaling either vector changes nothing") {
    b.phi = {2.5, 5.0, -2.5};
    CHECK(std::fabs(attribution_shift(a, b)) < 1e-14);
  }
  SUBCASE("zero vectors and length mismatches throw") {
    b.phi = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(attribution_shift(a, b), ZeroVector);
    CHECK_THROWS_AS(attribution_shift(b, a), ZeroVector);
    b.phi = {1.0};
    CHECK_THROWS_AS(attribution_shift(a, b), LengthMismatch);
  }
}

TEST_CASE("attribution pgm dump rescales affinely with a sidecar json") {
  Attribution attr;
  attr.phi = {-2.0, 0.0, 6.0, 2.0};
  attr.base_value = 0.25;
  attr.model_output = 6.25;
  const std::string path = "/tmp/polyattack_test_attr.pgm";
  write_attribution_pgm(path, attr, 2, 2);

  int h = 0, w = 0;
  const std::vector<std::uint8_t> px = io::read_pgm(path, h, w);
  REQUIRE(h == 2);
  REQUIRE(w == 2);
  // (phi + 2) / 8 * 255, rounded.
  CHECK(px[0] == 0);
  CHECK(px[1] == 64);
  CHECK(px[2] == 255);
  CHECK(px[3] == 128);

  const auto side = nlohmann::json::parse(io::read_file(path + ".json"));
  CHECK(side.at("min_phi").get<double>() == -2.0);
  CHECK(side.at("max_phi").get<double>() == 6.0);
  CHECK(side.at("base_value").get<double>() == 0.25);
  CHECK(side.at("model_output").get<double>() == 6.25);

  SUBCASE("constant attribution maps to mid gray") {
    Attribution flat;
    flat.phi = {3.0, 3.0};
    write_attribution_pgm(path, flat, 1, 2);
    const std::vector<std::uint8_t> fp = io::read_pgm(path, h, w);
    CHECK(fp[0] == 128);
    CHECK(fp[1] == 128);
  }
  SUBCASE("shape mismatch throws") {
    CHECK_THROWS_AS(write_attribution_pgm(path, attr, 3, 2), DimensionMismatch);
  }
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}
