#include "polyattack/config.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "polyattack/dataset.hpp"
#include "polyattack/errors.hpp"
#include "polyattack/io_util.hpp"
#include "polyattack/multigrad.hpp"

namespace polyattack {
namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected a JSON object");
}

void expect_keys(const json& j, const std::string& ctx,
                 const std::set<std::string>& allowed) {
  expect_object(j, ctx);
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError(ctx + ": unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
T typed(const json& j, const std::string& ctx) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(ctx + ": wrong type");
  }
}

template <typename T>
T field_or(const json& j, const std::string& ctx, const char* key, T def) {
  if (!j.contains(key)) return def;
  return typed<T>(j.at(key), ctx + "." + key);
}

template <typename T>
T required(const json& j, const std::string& ctx, const char* key) {
  if (!j.contains(key)) throw ConfigError(ctx + ": missing required key '" + std::string(key) + "'");
  return typed<T>(j.at(key), ctx + "." + key);
}

Norm parse_ball(const std::string& text, const std::string& ctx) {
  if (text == "l2") return Norm::L2;
  if (text == "linf") return Norm::Linf;
  throw ConfigError(ctx + ": ball must be \"l2\" or \"linf\"");
}

DatasetConfig parse_dataset(const json& j) {
  const std::string ctx = "dataset";
  expect_keys(j, ctx,
              {"kind", "images", "labels", "n", "seed", "train_count", "split_seed",
               "eval_count", "eval_seed"});
  DatasetConfig ds;
  ds.kind = required<std::string>(j, ctx, "kind");
  if (ds.kind == "mnist_idx") {
    ds.images = required<std::string>(j, ctx, "images");
    ds.labels = required<std::string>(j, ctx, "labels");
    if (j.contains("n") || j.contains("seed")) {
      throw ConfigError(ctx + ": n/seed are synth_blobs keys, not valid for mnist_idx");
    }
  } else if (ds.kind == "synth_blobs") {
    ds.n = required<std::size_t>(j, ctx, "n");
    if (ds.n < 4) throw ConfigError(ctx + ".n: synth_blobs needs n >= 4");
    ds.seed = field_or<std::uint64_t>(j, ctx, "seed", ds.seed);
    if (j.contains("images") || j.contains("labels")) {
      throw ConfigError(ctx + ": images/labels are mnist_idx keys, not valid for synth_blobs");
    }
  } else {
    throw ConfigError(ctx + ".kind: must be \"mnist_idx\" or \"synth_blobs\"");
  }
  ds.train_count = required<std::size_t>(j, ctx, "train_count");
  if (ds.train_count == 0) throw ConfigError(ctx + ".train_count: must be >= 1");
  ds.split_seed = field_or<std::uint64_t>(j, ctx, "split_seed", ds.split_seed);
  ds.eval_count = field_or<std::size_t>(j, ctx, "eval_count", ds.eval_count);
  ds.eval_seed = field_or<std::uint64_t>(j, ctx, "eval_seed", ds.eval_seed);
  return ds;
}

Scenario parse_scenario(const json& j, std::size_t index) {
  const std::string ctx = "scenarios[" + std::to_string(index) + "]";
  expect_keys(j, ctx,
              {"name", "kind", "attacked", "protected", "attack_margin", "protect_margin",
               "positive_only", "use_box", "ball", "epsilon", "step_size", "iterations",
               "lambda_attacked", "lambda_protected", "run_baseline", "seed"});
  Scenario sc;
  sc.name = required<std::string>(j, ctx, "name");
  if (sc.name.empty()) throw ConfigError(ctx + ".name: must be non-empty");
  sc.kind = attack_kind_from_string(required<std::string>(j, ctx, "kind"));
  sc.attacked = field_or<std::vector<std::string>>(j, ctx, "attacked", {});
  sc.protected_ = field_or<std::vector<std::string>>(j, ctx, "protected", {});
  std::set<std::string> seen;
  for (const std::string& name : sc.attacked) {
    if (!seen.insert(name).second)
      throw ConfigError(ctx + ": concept '" + name + "' listed twice");
  }
  for (const std::string& name : sc.protected_) {
    if (!seen.insert(name).second) {
      throw ConfigError(ctx + ": attacked and protected sets overlap on '" + name + "'");
    }
  }

  sc.attack_margin = field_or<double>(j, ctx, "attack_margin", sc.attack_margin);
  sc.protect_margin = field_or<double>(j, ctx, "protect_margin", sc.protect_margin);
  if (sc.attack_margin < 0.0 || sc.protect_margin < 0.0) {
    throw ConfigError(ctx + ": margins must be >= 0");
  }
  sc.positive_only = field_or<bool>(j, ctx, "positive_only", sc.positive_only);
  sc.use_box = field_or<bool>(j, ctx, "use_box", sc.use_box);

  sc.ball = parse_ball(field_or<std::string>(j, ctx, "ball", "linf"), ctx + ".ball");
  const MultiAttackConfig defaults = default_config(sc.ball);
  sc.epsilon = field_or<double>(j, ctx, "epsilon", defaults.epsilon);
  sc.step_size = field_or<double>(j, ctx, "step_size", defaults.step_size);
  sc.iterations = field_or<int>(j, ctx, "iterations", defaults.iterations);
  if (sc.epsilon < 0.0) throw ConfigError(ctx + ".epsilon: must be >= 0");
  if (sc.step_size < 0.0) throw ConfigError(ctx + ".step_size: must be >= 0");
  if (sc.iterations < 0) throw ConfigError(ctx + ".iterations: must be >= 0");
  sc.lambda_attacked = field_or<double>(j, ctx, "lambda_attacked", 1.0);
  sc.lambda_protected = field_or<double>(j, ctx, "lambda_protected", 1.0);
  if (!(sc.lambda_attacked > 0.0) || !(sc.lambda_protected > 0.0)) {
    throw ConfigError(ctx + ": lambda weights must be > 0");
  }
  sc.run_baseline = field_or<bool>(j, ctx, "run_baseline", sc.run_baseline);
  sc.seed = field_or<std::uint64_t>(j, ctx, "seed", sc.seed);
  return sc;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  expect_keys(j, "config", {"dataset", "concepts", "models", "scenarios", "explain", "output_dir"});

  RunConfig cfg;
  if (!j.contains("dataset")) throw ConfigError("config: missing required key 'dataset'");
  cfg.dataset = parse_dataset(j.at("dataset"));

  cfg.concepts = field_or<std::vector<std::string>>(j, "config", "concepts", {});
  if (cfg.dataset.kind == "mnist_idx") {
    if (cfg.concepts.empty()) {
      throw ConfigError("config.concepts: mnist_idx needs at least one concept rule name");
    }
    rules_by_names(cfg.concepts);  // early name validation
  } else if (!cfg.concepts.empty()) {
    const std::vector<std::string> blob_names = {"A", "B"};
    if (cfg.concepts != blob_names) {
      throw ConfigError("config.concepts: synth_blobs concepts are fixed to [\"A\", \"B\"]");
    }
  }

  if (j.contains("models")) {
    const json& m = j.at("models");
    expect_keys(m, "models", {"linear", "mlp"});
    if (m.contains("linear")) {
      const json& lin = m.at("linear");
      expect_keys(lin, "models.linear", {"lambda_reg", "epochs", "seed"});
      cfg.train_linear = true;
      cfg.linear_hp.lambda_reg =
          field_or<double>(lin, "models.linear", "lambda_reg", cfg.linear_hp.lambda_reg);
      cfg.linear_hp.epochs = field_or<int>(lin, "models.linear", "epochs", cfg.linear_hp.epochs);
      cfg.linear_hp.seed =
          field_or<std::uint64_t>(lin, "models.linear", "seed", cfg.linear_hp.seed);
      if (cfg.linear_hp.epochs < 1 || !(cfg.linear_hp.lambda_reg > 0.0)) {
        throw ConfigError("models.linear: epochs must be >= 1 and lambda_reg > 0");
      }
    }
    if (m.contains("mlp")) {
      const json& mlp = m.at("mlp");
      expect_keys(mlp, "models.mlp",
                  {"hidden_sizes", "lr", "epochs", "batch", "seed", "val_fraction"});
      cfg.train_mlp = true;
      cfg.mlp_hp.hidden_sizes = field_or<std::vector<std::size_t>>(
          mlp, "models.mlp", "hidden_sizes", cfg.mlp_hp.hidden_sizes);
      cfg.mlp_hp.lr = field_or<double>(mlp, "models.mlp", "lr", cfg.mlp_hp.lr);
      cfg.mlp_hp.epochs = field_or<int>(mlp, "models.mlp", "epochs", cfg.mlp_hp.epochs);
      cfg.mlp_hp.batch = field_or<std::size_t>(mlp, "models.mlp", "batch", cfg.mlp_hp.batch);
      cfg.mlp_hp.seed = field_or<std::uint64_t>(mlp, "models.mlp", "seed", cfg.mlp_hp.seed);
      cfg.mlp_hp.val_fraction =
          field_or<double>(mlp, "models.mlp", "val_fraction", cfg.mlp_hp.val_fraction);
      if (cfg.mlp_hp.epochs < 0 || cfg.mlp_hp.batch == 0 || !(cfg.mlp_hp.lr > 0.0) ||
          cfg.mlp_hp.val_fraction < 0.0 || cfg.mlp_hp.val_fraction >= 1.0) {
        throw ConfigError("models.mlp: invalid hyperparameters");
      }
    }
  }

  if (j.contains("scenarios")) {
    const json& scs = j.at("scenarios");
    if (!scs.is_array()) throw ConfigError("config.scenarios: expected an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < scs.size(); ++i) {
      Scenario sc = parse_scenario(scs.at(i), i);
      if (!names.insert(sc.name).second) {
        throw ConfigError("config.scenarios: duplicate scenario name '" + sc.name + "'");
      }
      cfg.scenarios.push_back(std::move(sc));
    }
  }

  if (j.contains("explain")) {
    const json& ex = j.at("explain");
    expect_keys(ex, "explain", {"samples", "background", "seed", "dump_images"});
    cfg.explain.samples = field_or<int>(ex, "explain", "samples", cfg.explain.samples);
    cfg.explain.background =
        field_or<std::size_t>(ex, "explain", "background", cfg.explain.background);
    cfg.explain.seed = field_or<std::uint64_t>(ex, "explain", "seed", cfg.explain.seed);
    cfg.explain.dump_images =
        field_or<std::size_t>(ex, "explain", "dump_images", cfg.explain.dump_images);
    if (cfg.explain.samples < 1 || cfg.explain.background == 0) {
      throw ConfigError("explain: samples must be >= 1 and background >= 1");
    }
  }

  cfg.output_dir = field_or<std::string>(j, "config", "output_dir", cfg.output_dir);
  if (cfg.output_dir.empty()) throw ConfigError("config.output_dir: must be non-empty");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  // An unreadable config path is a usage error, not a data error: the dataset
  // files named *inside* the config are the data.
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  RunConfig cfg = parse_run_config(text);
  // Dataset paths resolve relative to the config file so shipped configs work
  // from any working directory; output_dir stays relative to the caller.
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) {
      p = (base / p).string();
    }
  };
  resolve(cfg.dataset.images);
  resolve(cfg.dataset.labels);
  return cfg;
}

void override_seeds(RunConfig& cfg, std::uint64_t seed) {
  cfg.dataset.seed = seed;
  cfg.dataset.split_seed = seed;
  cfg.dataset.eval_seed = seed;
  cfg.linear_hp.seed = seed;
  cfg.mlp_hp.seed = seed;
  for (Scenario& sc : cfg.scenarios) sc.seed = seed;
  cfg.explain.seed = seed;
}

}  // namespace polyattack
