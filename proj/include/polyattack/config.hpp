#pragma once

// Run configuration: the JSON schema driving the CLI.  Parsing is strict —
// unknown keys anywhere in the document are rejected up front so a typo
// cannot silently fall back to a default.

#include <cstdint>
#include <string>
#include <vector>

#include "polyattack/mlp.hpp"
#include "polyattack/report.hpp"
#include "polyattack/svm.hpp"

namespace polyattack {

struct DatasetConfig {
  std::string kind;    // "mnist_idx" | "synth_blobs"
  std::string images;  // mnist_idx: IDX file paths (relative to the config file)
  std::string labels;
  std::size_t n = 0;          // synth_blobs: point count
  std::uint64_t seed = 7;     // synth_blobs generator seed
  std::size_t train_count = 0;     // instances routed to training
  std::uint64_t split_seed = 13;   // shuffled-split seed
  std::size_t eval_count = 200;    // evaluation subset size (0 = full held-out set)
  std::uint64_t eval_seed = 99;
};

struct ExplainConfig {
  int samples = 200;           // gradient-SHAP interpolation draws
  std::size_t background = 16; // training samples in the gradient-SHAP background
  std::uint64_t seed = 2;
  std::size_t dump_images = 0; // per scenario: attribution PGMs for the first k instances
};

struct RunConfig {
  DatasetConfig dataset;
  std::vector<std::string> concepts;  // rule names for mnist_idx; ignored for blobs
  bool train_linear = false;
  bool train_mlp = false;
  SvmHyperParams linear_hp;     // applied to each concept's linear model
  MlpHyperParams mlp_hp;        // applied to each concept's MLP
  std::vector<Scenario> scenarios;
  ExplainConfig explain;
  std::string output_dir = "out";
};

// Parse and validate a full config document.  Throws ConfigError on unknown
// keys, wrong types, missing required fields, or invariant violations
// (overlapping attacked/protected sets, duplicate scenario names, unknown
// attack kinds...).
RunConfig parse_run_config(const std::string& json_text);

// Convenience: read the file (DataError if unreadable) and parse it.
RunConfig load_run_config(const std::string& path);

// Apply the POLYATTACK_SEED global override: every seed in the config
// (dataset, split, eval, model training, scenarios, explain) is replaced.
void override_seeds(RunConfig& cfg, std::uint64_t seed);

}  // namespace polyattack
