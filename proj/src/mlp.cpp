#include "polyattack/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <nlohmann/json.hpp>

#include "polyattack/errors.hpp"
#include "polyattack/rng.hpp"
#include "polyattack/simd_kernels.hpp"

namespace polyattack {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Forward pass keeping pre-activations (z) and activations (a) per layer;
// a[0] is the input, a[l+1] = act(z[l]).
struct ForwardTrace {
  std::vector<Vector> z;
  std::vector<Vector> a;
};

ForwardTrace run_forward(const MlpClassifier& net, const Vector& x) {
  check_shapes(net, x.size());
  ForwardTrace t;
  t.a.push_back(x);
  for (const MlpLayer& layer : net.layers) {
    Vector z = matvec(layer.weights, t.a.back());
    simd::axpy(1.0, layer.bias.data(), z.data(), z.size());
    Vector a = z;
    if (layer.activation == Activation::ReLU) {
      for (double& v : a) v = std::max(v, 0.0);
    }
    t.z.push_back(std::move(z));
    t.a.push_back(std::move(a));
  }
  return t;
}

// Backpropagates a seed derivative at the logit down to the input, optionally
// accumulating parameter gradients (same trace layout as the net).
Vector backprop(const MlpClassifier& net, const ForwardTrace& t,
                double logit_seed, std::vector<MlpLayer>* param_grads) {
  Vector delta = {logit_seed};
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const MlpLayer& layer = net.layers[li];
    // activation derivative of this layer's output
    if (layer.activation == Activation::ReLU) {
      for (std::size_t i = 0; i < delta.size(); ++i)
        if (t.z[li][i] <= 0.0) delta[i] = 0.0;
    }
    if (param_grads) {
      MlpLayer& g = (*param_grads)[li];
      for (std::size_t r = 0; r < layer.weights.rows; ++r)
        simd::axpy(delta[r], t.a[li].data(), g.weights.row_ptr(r),
                   layer.weights.cols);
      simd::axpy(1.0, delta.data(), g.bias.data(), delta.size());
    }
    delta = matvec_transposed(layer.weights, delta);
  }
  return delta;
}

std::vector<MlpLayer> zero_like(const MlpClassifier& net) {
  std::vector<MlpLayer> grads;
  for (const MlpLayer& layer : net.layers) {
    MlpLayer g;
    g.weights.rows = layer.weights.rows;
    g.weights.cols = layer.weights.cols;
    g.weights.data.assign(layer.weights.data.size(), 0.0);
    g.bias.assign(layer.bias.size(), 0.0);
    g.activation = layer.activation;
    grads.push_back(std::move(g));
  }
  return grads;
}

const char* activation_name(Activation a) {
  return a == Activation::ReLU ? "relu" : "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "identity") return Activation::Identity;
  throw DataError("unknown activation: " + name);
}

}  // namespace

void check_shapes(const MlpClassifier& net, std::size_t input_dim) {
  if (net.layers.empty()) throw DimensionMismatch("network has no layers");
  std::size_t dim = input_dim;
  for (const MlpLayer& layer : net.layers) {
    if (layer.weights.cols != dim)
      throw DimensionMismatch("layer input dimension does not chain");
    if (layer.bias.size() != layer.weights.rows)
      throw DimensionMismatch("bias size does not match layer rows");
    if (layer.weights.data.size() != layer.weights.rows * layer.weights.cols)
      throw DimensionMismatch("weight matrix storage size mismatch");
    dim = layer.weights.rows;
  }
  if (dim != 1) throw DimensionMismatch("final layer must output one logit");
}

double logit(const MlpClassifier& net, const Vector& x) {
  return run_forward(net, x).a.back()[0];
}

double forward(const MlpClassifier& net, const Vector& x) {
  return sigmoid(logit(net, x));
}

int predict(const MlpClassifier& net, const Vector& x) {
  return forward(net, x) > 0.5 ? +1 : -1;
}

double bce_loss(double probability, double target) {
  const double p = std::clamp(probability, 1e-12, 1.0 - 1e-12);
  return -target * std::log(p) - (1.0 - target) * std::log(1.0 - p);
}

Vector input_gradient(const MlpClassifier& net, const Vector& x, double target,
                      LossKind loss) {
  (void)loss;  // single kind; the BCE/sigmoid pair cancels to σ(z) − target
  const ForwardTrace t = run_forward(net, x);
  const double seed = sigmoid(t.a.back()[0]) - target;
  return backprop(net, t, seed, nullptr);
}

Vector logit_input_gradient(const MlpClassifier& net, const Vector& x) {
  const ForwardTrace t = run_forward(net, x);
  return backprop(net, t, 1.0, nullptr);
}

MlpTrainResult train_mlp(const ConceptDataset& ds, int concept_idx,
                         const MlpHyperParams& hp) {
  if (concept_idx < 0 ||
      static_cast<std::size_t>(concept_idx) >= ds.concept_names.size())
    throw ConfigError("concept index out of range");
  if (ds.size() == 0) throw DataError("empty dataset");

  const std::size_t val_count = static_cast<std::size_t>(
      std::floor(hp.val_fraction * static_cast<double>(ds.size())));
  const std::size_t train_count = ds.size() - val_count;
  const auto [train, val] = split_dataset(ds, train_count, hp.seed);

  bool saw_pos = false, saw_neg = false;
  for (std::size_t i = 0; i < train.size(); ++i) {
    (train.labels[i][concept_idx] > 0 ? saw_pos : saw_neg) = true;
  }
  if (!saw_pos || !saw_neg)
    throw DegenerateLabels("training split has a single class");

  Rng rng(hp.seed);
  MlpTrainResult res;
  res.net.concept_name = ds.concept_names[concept_idx];
  std::size_t in_dim = ds.dim();
  for (std::size_t li = 0; li <= hp.hidden_sizes.size(); ++li) {
    const bool last = li == hp.hidden_sizes.size();
    const std::size_t out_dim = last ? 1 : hp.hidden_sizes[li];
    MlpLayer layer;
    layer.weights.rows = out_dim;
    layer.weights.cols = in_dim;
    layer.weights.data.resize(out_dim * in_dim);
    const double scale = std::sqrt(2.0 / static_cast<double>(in_dim));
    for (double& w : layer.weights.data) w = scale * rng.normal();
    layer.bias.assign(out_dim, 0.0);
    layer.activation = last ? Activation::Identity : Activation::ReLU;
    res.net.layers.push_back(std::move(layer));
    in_dim = out_dim;
  }

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t take = std::min(hp.batch, order.size() - pos);
      std::vector<MlpLayer> grads = zero_like(res.net);
      for (std::size_t b = 0; b < take; ++b) {
        const std::size_t i = order[pos + b];
        const ForwardTrace t = run_forward(res.net, train.instances[i]);
        const double target = train.labels[i][concept_idx] > 0 ? 1.0 : 0.0;
        const double seed = sigmoid(t.a.back()[0]) - target;
        (void)backprop(res.net, t, seed, &grads);
      }
      const double step = -hp.lr / static_cast<double>(take);
      for (std::size_t li = 0; li < res.net.layers.size(); ++li) {
        MlpLayer& layer = res.net.layers[li];
        simd::axpy(step, grads[li].weights.data.data(),
                   layer.weights.data.data(), layer.weights.data.size());
        simd::axpy(step, grads[li].bias.data(), layer.bias.data(),
                   layer.bias.size());
      }
      pos += take;
    }
  }

  auto accuracy = [&](const ConceptDataset& part) {
    if (part.size() == 0) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < part.size(); ++i) {
      if (predict(res.net, part.instances[i]) == part.labels[i][concept_idx])
        ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(part.size());
  };
  res.train_accuracy = accuracy(train);
  res.val_accuracy = accuracy(val);
  return res;
}

std::string mlp_to_json(const MlpClassifier& net) {
  nlohmann::json j;
  j["concept"] = net.concept_name;
  j["layers"] = nlohmann::json::array();
  for (const MlpLayer& layer : net.layers) {
    nlohmann::json lj;
    lj["rows"] = layer.weights.rows;
    lj["cols"] = layer.weights.cols;
    lj["weights"] = layer.weights.data;
    lj["bias"] = layer.bias;
    lj["activation"] = activation_name(layer.activation);
    j["layers"].push_back(std::move(lj));
  }
  return j.dump(2) + "\n";
}

MlpClassifier mlp_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MlpClassifier net;
  net.concept_name = j.at("concept").get<std::string>();
  for (const auto& lj : j.at("layers")) {
    MlpLayer layer;
    layer.weights.rows = lj.at("rows").get<std::size_t>();
    layer.weights.cols = lj.at("cols").get<std::size_t>();
    layer.weights.data = lj.at("weights").get<Vector>();
    layer.bias = lj.at("bias").get<Vector>();
    layer.activation = activation_from_name(lj.at("activation").get<std::string>());
    if (layer.weights.data.size() != layer.weights.rows * layer.weights.cols)
      throw DataError("weight matrix storage size mismatch in JSON");
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace polyattack
