#pragma once

// Scenario runner and report emission: run an attack-m-protect-n scenario
// over an evaluation set and produce the original / baseline-PGD / custom
// accuracy-and-recall columns, per-instance statuses, and the dumped
// perturbed instances that make every column independently recomputable.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polyattack/dataset.hpp"
#include "polyattack/linalg.hpp"
#include "polyattack/linear_attack.hpp"
#include "polyattack/mlp.hpp"
#include "polyattack/svm.hpp"

namespace polyattack {

// ---------------------------------------------------------------------------
// Metrics.  Labels and predictions are ±1; recall is over the positive class
// and is undefined (nullopt) when the labels contain no positives — rendered
// as "NA" in CSV and null in JSON, never silently 0/0.

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);
std::optional<double> recall(const std::vector<int>& preds, const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Scenario description (the A:{...}, P:{...} notation plus attack knobs).

enum class AttackKind { LinearL1, LinearLinf, LinearL2, MultiGrad, BaselinePGD };

std::string to_string(AttackKind kind);
AttackKind attack_kind_from_string(const std::string& text);  // ConfigError on unknown

struct Scenario {
  std::string name;
  std::vector<std::string> attacked;    // concept names
  std::vector<std::string> protected_;  // concept names, disjoint from attacked
  AttackKind kind = AttackKind::LinearL1;

  // Linear-attack knobs.
  double attack_margin = 1e-4;
  double protect_margin = 1e-4;
  bool positive_only = false;
  bool use_box = true;  // constrain x+Δx to the [0,1] feature box

  // Gradient-attack knobs (MultiGrad / BaselinePGD).
  Norm ball = Norm::Linf;
  double epsilon = 0.3;
  double step_size = 0.06;
  int iterations = 200;
  // Preset λ per objective group.  Low-dimensional inputs need an attacked-set
  // boost: the protected term's gradient stays near full strength on confident
  // instances and otherwise swamps the vanishing attacked-BCE gradient.
  double lambda_attacked = 1.0;
  double lambda_protected = 1.0;
  bool run_baseline = false;  // add the single-model PGD baseline column

  std::uint64_t seed = 1;
};

// ---------------------------------------------------------------------------
// Trained models keyed by concept name.  A family may be empty when the
// config trains only the other one; scenarios fail with ConfigError when the
// family they need is missing a concept.

struct ModelRegistry {
  std::vector<LinearClassifier> linear;
  std::vector<MlpClassifier> mlps;

  int linear_index(const std::string& concept_name) const;  // -1 if absent
  int mlp_index(const std::string& concept_name) const;
};

// ---------------------------------------------------------------------------
// Report structures.

struct MetricPair {
  double accuracy = 0.0;
  std::optional<double> recall;
};

struct ConceptRow {
  std::string concept_name;
  std::string role;  // "attacked" | "protected"
  MetricPair original;
  std::optional<MetricPair> baseline;  // present only when configured
  MetricPair custom;
};

struct InstanceRecord {
  int id = 0;
  AttackStatus status = AttackStatus::Success;
  double perturbation_norm = 0.0;  // under the scenario's norm
};

struct ReportMetadata {
  std::uint64_t seed = 0;
  double attack_margin = 0.0;
  double protect_margin = 0.0;
  double epsilon = 0.0;
  double step_size = 0.0;
  int iterations = 0;
  std::size_t instances = 0;
  std::size_t success = 0;
  std::size_t infeasible = 0;
  std::size_t solver_failure = 0;
  bool baseline_configured = false;
};

struct AttackReport {
  Scenario scenario;
  std::vector<ConceptRow> concepts;     // attacked ∪ protected, scenario order
  std::vector<InstanceRecord> records;  // stable instance order
  ReportMetadata meta;
  std::vector<Vector> perturbed;           // custom-attack inputs, one per instance
  std::vector<Vector> baseline_perturbed;  // empty unless baseline configured
};

// Run one scenario over the evaluation set.  Deterministic under the
// scenario seed for any jobs value (workers own disjoint, preassigned
// slots).  Per-instance solver failures are recorded, never abort the batch.
// Throws ConfigError for unresolvable names, overlapping sets, or a missing
// model family; LengthMismatch/DimensionMismatch propagate from bad inputs.
AttackReport run_scenario(const Scenario& sc, const ModelRegistry& models,
                          const ConceptDataset& ds_eval, int jobs = 1);

// ---------------------------------------------------------------------------
// Emission.  Files are named `{scenario}_{timestamp}.{csv,json}`; an empty
// timestamp suppresses the suffix (used by tests and the determinism gate).

std::string report_basename(const std::string& scenario_name, const std::string& timestamp);

// One row per concept per column-group:
//   scenario,concept,role,column,accuracy,recall
std::string report_csv(const AttackReport& report);

// Per-instance attack outcomes: id,status,perturbation_norm.
std::string instances_csv(const AttackReport& report);

// Full metadata: scenario snapshot, per-concept columns, per-instance records.
std::string report_json(const AttackReport& report);

// Writes `{base}.csv`, `{base}.json`, `{base}_instances.csv`,
// `{base}_perturbed.csv` and, when the baseline is configured,
// `{base}_baseline_perturbed.csv` into out_dir.  Returns the base path used.
std::string write_report_files(const AttackReport& report, const std::string& out_dir,
                               const std::string& timestamp);

}  // namespace polyattack
