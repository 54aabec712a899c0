#include "polyattack/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "polyattack/errors.hpp"
#include "polyattack/io_util.hpp"
#include "polyattack/multigrad.hpp"

namespace polyattack {

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size())
    throw LengthMismatch("accuracy: preds and labels differ in length");
  if (preds.empty()) throw std::invalid_argument("accuracy: empty inputs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::optional<double> recall(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size())
    throw LengthMismatch("recall: preds and labels differ in length");
  std::size_t positives = 0;
  std::size_t true_positives = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] == +1) {
      ++positives;
      if (preds[i] == +1) ++true_positives;
    }
  }
  if (positives == 0) return std::nullopt;
  return static_cast<double>(true_positives) / static_cast<double>(positives);
}

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::LinearL1: return "LinearL1";
    case AttackKind::LinearLinf: return "LinearLinf";
    case AttackKind::LinearL2: return "LinearL2";
    case AttackKind::MultiGrad: return "MultiGrad";
    case AttackKind::BaselinePGD: return "BaselinePGD";
  }
  return "?";
}

AttackKind attack_kind_from_string(const std::string& text) {
  if (text == "LinearL1") return AttackKind::LinearL1;
  if (text == "LinearLinf") return AttackKind::LinearLinf;
  if (text == "LinearL2") return AttackKind::LinearL2;
  if (text == "MultiGrad") return AttackKind::MultiGrad;
  if (text == "BaselinePGD") return AttackKind::BaselinePGD;
  throw ConfigError("unknown attack kind: " + text);
}

int ModelRegistry::linear_index(const std::string& concept_name) const {
  for (std::size_t i = 0; i < linear.size(); ++i) {
    if (linear[i].concept_name == concept_name) return static_cast<int>(i);
  }
  return -1;
}

int ModelRegistry::mlp_index(const std::string& concept_name) const {
  for (std::size_t i = 0; i < mlps.size(); ++i) {
    if (mlps[i].concept_name == concept_name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

bool is_linear_kind(AttackKind k) {
  return k == AttackKind::LinearL1 || k == AttackKind::LinearLinf || k == AttackKind::LinearL2;
}

Norm linear_norm(AttackKind k) {
  if (k == AttackKind::LinearL1) return Norm::L1;
  if (k == AttackKind::LinearL2) return Norm::L2;
  return Norm::Linf;
}

std::string norm_name(Norm n) {
  switch (n) {
    case Norm::L1: return "l1";
    case Norm::L2: return "l2";
    case Norm::Linf: return "linf";
  }
  return "?";
}

// One resolved concept: its column in ds_eval and its model slot.
struct BoundConcept {
  std::string name;
  bool attacked = false;
  int eval_idx = -1;
  int model_idx = -1;  // into registry.linear or registry.mlps per kind
};

std::vector<BoundConcept> bind_concepts(const Scenario& sc, const ModelRegistry& models,
                                        const ConceptDataset& ds) {
  std::set<std::string> seen;
  std::vector<BoundConcept> bound;
  const bool linear = is_linear_kind(sc.kind);
  auto bind_one = [&](const std::string& name, bool attacked) {
    if (!seen.insert(name).second) {
      throw ConfigError("scenario '" + sc.name + "': concept '" + name +
                        "' listed more than once across attacked/protected sets");
    }
    BoundConcept bc;
    bc.name = name;
    bc.attacked = attacked;
    bc.eval_idx = ds.concept_index(name);
    if (bc.eval_idx < 0) {
      throw ConfigError("scenario '" + sc.name + "': concept '" + name +
                        "' not present in the evaluation dataset");
    }
    bc.model_idx = linear ? models.linear_index(name) : models.mlp_index(name);
    if (bc.model_idx < 0) {
      throw ConfigError("scenario '" + sc.name + "': no trained " +
                        (linear ? std::string("linear") : std::string("mlp")) +
                        " model for concept '" + name + "'");
    }
    bound.push_back(std::move(bc));
  };
  for (const std::string& name : sc.attacked) bind_one(name, true);
  for (const std::string& name : sc.protected_) bind_one(name, false);
  return bound;
}

// Outcome of attacking one instance.
struct InstanceOutcome {
  Vector custom;
  Vector baseline;
  AttackStatus status = AttackStatus::Success;
};

void run_instances(const Scenario& sc, const ModelRegistry& models,
                   const ConceptDataset& ds, const std::vector<BoundConcept>& bound,
                   bool with_baseline, int jobs, std::vector<InstanceOutcome>& out) {
  const std::size_t n = ds.size();
  out.assign(n, InstanceOutcome{});

  // Per-kind fixed context, shared read-only across workers.
  std::vector<LinearClassifier> lin_clfs;
  AttackSpec lin_spec;
  std::vector<MlpClassifier> grad_nets;
  MultiAttackConfig grad_cfg;
  int baseline_model = -1;

  if (is_linear_kind(sc.kind)) {
    for (const BoundConcept& bc : bound)
      lin_clfs.push_back(models.linear[static_cast<std::size_t>(bc.model_idx)]);
    for (std::size_t c = 0; c < bound.size(); ++c) {
      (bound[c].attacked ? lin_spec.attacked : lin_spec.protected_).push_back(c);
    }
    lin_spec.norm = linear_norm(sc.kind);
    lin_spec.attack_margin = sc.attack_margin;
    lin_spec.protect_margin = sc.protect_margin;
    lin_spec.positive_only = sc.positive_only;
    if (sc.use_box) {
      lin_spec.box = FeatureBox{Vector(ds.dim(), 0.0), Vector(ds.dim(), 1.0)};
    }
  } else {
    for (const BoundConcept& bc : bound)
      grad_nets.push_back(models.mlps[static_cast<std::size_t>(bc.model_idx)]);
    for (std::size_t c = 0; c < bound.size(); ++c) {
      (bound[c].attacked ? grad_cfg.attacked : grad_cfg.protected_).push_back(c);
    }
    grad_cfg.norm = sc.ball;
    grad_cfg.epsilon = sc.epsilon;
    grad_cfg.step_size = sc.step_size;
    grad_cfg.iterations = sc.iterations;
    if (!(sc.lambda_attacked > 0.0) || !(sc.lambda_protected > 0.0)) {
      throw ConfigError("scenario '" + sc.name + "': lambda weights must be > 0");
    }
    if (sc.lambda_attacked != 1.0 || sc.lambda_protected != 1.0) {
      grad_cfg.lambda_weights.assign(bound.size(), 1.0);
      for (std::size_t c = 0; c < bound.size(); ++c) {
        grad_cfg.lambda_weights[c] = bound[c].attacked ? sc.lambda_attacked : sc.lambda_protected;
      }
    }
    if (sc.kind == AttackKind::BaselinePGD || with_baseline) {
      if (sc.attacked.empty()) {
        throw ConfigError("scenario '" + sc.name + "': PGD baseline needs an attacked concept");
      }
      baseline_model = bound.front().model_idx;  // attacked names come first
    }
  }

  auto run_one = [&](std::size_t i) {
    const Vector& x = ds.instances[i];
    InstanceOutcome& res = out[i];
    if (is_linear_kind(sc.kind)) {
      std::vector<int> y(bound.size(), 0);
      for (std::size_t c = 0; c < bound.size(); ++c) {
        y[c] = ds.labels[i][static_cast<std::size_t>(bound[c].eval_idx)];
      }
      const PerturbationResult pr = attack(x, y, lin_clfs, lin_spec);
      res.status = pr.status;
      res.custom = pr.status == AttackStatus::Success ? add_scaled(x, 1.0, pr.delta) : x;
    } else {
      Vector y01(bound.size(), 0.0);
      for (std::size_t c = 0; c < bound.size(); ++c) {
        y01[c] = ds.labels[i][static_cast<std::size_t>(bound[c].eval_idx)] == +1 ? 1.0 : 0.0;
      }
      if (sc.kind == AttackKind::BaselinePGD) {
        res.custom = baseline_pgd(models.mlps[static_cast<std::size_t>(baseline_model)], x,
                                  y01.front(), grad_cfg);
      } else {
        res.custom = attack(grad_nets, x, y01, grad_cfg);
        if (with_baseline) {
          res.baseline = baseline_pgd(models.mlps[static_cast<std::size_t>(baseline_model)],
                                      x, y01.front(), grad_cfg);
        }
      }
      res.status = AttackStatus::Success;
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) run_one(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

MetricPair metrics_for(const std::vector<int>& preds, const std::vector<int>& labels) {
  MetricPair mp;
  mp.accuracy = accuracy(preds, labels);
  mp.recall = recall(preds, labels);
  return mp;
}

nlohmann::json metric_json(const MetricPair& mp) {
  nlohmann::json j;
  j["accuracy"] = mp.accuracy;
  j["recall"] = mp.recall ? nlohmann::json(*mp.recall) : nlohmann::json();
  return j;
}

void append_metric_row(std::string& csv, const AttackReport& report,
                       const ConceptRow& row, const std::string& column,
                       const MetricPair& mp) {
  csv += report.scenario.name + "," + row.concept_name + "," + row.role + "," + column + "," +
         io::format_double(mp.accuracy) + "," +
         (mp.recall ? io::format_double(*mp.recall) : std::string("NA")) + "\n";
}

}  // namespace

AttackReport run_scenario(const Scenario& sc, const ModelRegistry& models,
                          const ConceptDataset& ds_eval, int jobs) {
  if (ds_eval.size() == 0) throw std::invalid_argument("run_scenario: empty evaluation set");
  const std::vector<BoundConcept> bound = bind_concepts(sc, models, ds_eval);
  const bool with_baseline = sc.run_baseline && sc.kind == AttackKind::MultiGrad;

  std::vector<InstanceOutcome> outcomes;
  run_instances(sc, models, ds_eval, bound, with_baseline, jobs, outcomes);

  AttackReport report;
  report.scenario = sc;
  const std::size_t n = ds_eval.size();
  const Norm pert_norm = is_linear_kind(sc.kind) ? linear_norm(sc.kind) : sc.ball;

  report.perturbed.reserve(n);
  if (with_baseline) report.baseline_perturbed.reserve(n);
  report.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    InstanceRecord& rec = report.records[i];
    rec.id = ds_eval.ids[i];
    rec.status = outcomes[i].status;
    const Vector delta = add_scaled(outcomes[i].custom, -1.0, ds_eval.instances[i]);
    rec.perturbation_norm = norm(delta, pert_norm);
    report.perturbed.push_back(std::move(outcomes[i].custom));
    if (with_baseline) report.baseline_perturbed.push_back(std::move(outcomes[i].baseline));
  }

  // Column metrics per concept: predictions from the dumped vectors only, so
  // the emitted files are sufficient to recompute every column.
  for (const BoundConcept& bc : bound) {
    ConceptRow row;
    row.concept_name = bc.name;
    row.role = bc.attacked ? "attacked" : "protected";
    std::vector<int> labels(n), orig(n), custom(n), base(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = ds_eval.labels[i][static_cast<std::size_t>(bc.eval_idx)];
      if (is_linear_kind(sc.kind)) {
        const LinearClassifier& clf = models.linear[static_cast<std::size_t>(bc.model_idx)];
        orig[i] = predict(clf, ds_eval.instances[i]);
        custom[i] = predict(clf, report.perturbed[i]);
        if (with_baseline) base[i] = predict(clf, report.baseline_perturbed[i]);
      } else {
        const MlpClassifier& net = models.mlps[static_cast<std::size_t>(bc.model_idx)];
        orig[i] = predict(net, ds_eval.instances[i]);
        custom[i] = predict(net, report.perturbed[i]);
        if (with_baseline) base[i] = predict(net, report.baseline_perturbed[i]);
      }
    }
    row.original = metrics_for(orig, labels);
    row.custom = metrics_for(custom, labels);
    if (with_baseline) row.baseline = metrics_for(base, labels);
    report.concepts.push_back(std::move(row));
  }

  ReportMetadata& meta = report.meta;
  meta.seed = sc.seed;
  meta.instances = n;
  meta.baseline_configured = with_baseline;
  if (is_linear_kind(sc.kind)) {
    meta.attack_margin = sc.attack_margin;
    meta.protect_margin = sc.protect_margin;
  } else {
    meta.epsilon = sc.epsilon;
    meta.step_size = sc.step_size;
    meta.iterations = sc.iterations;
  }
  for (const InstanceRecord& rec : report.records) {
    switch (rec.status) {
      case AttackStatus::Success: ++meta.success; break;
      case AttackStatus::Infeasible: ++meta.infeasible; break;
      case AttackStatus::SolverFailure: ++meta.solver_failure; break;
    }
  }
  return report;
}

std::string report_basename(const std::string& scenario_name, const std::string& timestamp) {
  return timestamp.empty() ? scenario_name : scenario_name + "_" + timestamp;
}

std::string report_csv(const AttackReport& report) {
  std::string csv = "scenario,concept,role,column,accuracy,recall\n";
  for (const ConceptRow& row : report.concepts) {
    append_metric_row(csv, report, row, "original", row.original);
    if (row.baseline) append_metric_row(csv, report, row, "baseline", *row.baseline);
    append_metric_row(csv, report, row, "custom", row.custom);
  }
  return csv;
}

std::string instances_csv(const AttackReport& report) {
  std::string csv = "id,status,perturbation_norm\n";
  for (const InstanceRecord& rec : report.records) {
    csv += std::to_string(rec.id) + "," + to_string(rec.status) + "," +
           io::format_double(rec.perturbation_norm) + "\n";
  }
  return csv;
}

std::string report_json(const AttackReport& report) {
  const Scenario& sc = report.scenario;
  nlohmann::json j;
  j["scenario"]["name"] = sc.name;
  j["scenario"]["kind"] = to_string(sc.kind);
  j["scenario"]["attacked"] = sc.attacked;
  j["scenario"]["protected"] = sc.protected_;
  j["scenario"]["attack_margin"] = sc.attack_margin;
  j["scenario"]["protect_margin"] = sc.protect_margin;
  j["scenario"]["positive_only"] = sc.positive_only;
  j["scenario"]["use_box"] = sc.use_box;
  j["scenario"]["ball"] = norm_name(sc.ball);
  j["scenario"]["epsilon"] = sc.epsilon;
  j["scenario"]["step_size"] = sc.step_size;
  j["scenario"]["iterations"] = sc.iterations;
  j["scenario"]["lambda_attacked"] = sc.lambda_attacked;
  j["scenario"]["lambda_protected"] = sc.lambda_protected;
  j["scenario"]["run_baseline"] = sc.run_baseline;
  j["scenario"]["seed"] = sc.seed;

  nlohmann::json& meta = j["metadata"];
  meta["seed"] = report.meta.seed;
  meta["attack_margin"] = report.meta.attack_margin;
  meta["protect_margin"] = report.meta.protect_margin;
  meta["epsilon"] = report.meta.epsilon;
  meta["step_size"] = report.meta.step_size;
  meta["iterations"] = report.meta.iterations;
  meta["instances"] = report.meta.instances;
  meta["success"] = report.meta.success;
  meta["infeasible"] = report.meta.infeasible;
  meta["solver_failure"] = report.meta.solver_failure;
  meta["baseline_configured"] = report.meta.baseline_configured;

  j["concepts"] = nlohmann::json::array();
  for (const ConceptRow& row : report.concepts) {
    nlohmann::json cj;
    cj["name"] = row.concept_name;
    cj["role"] = row.role;
    cj["original"] = metric_json(row.original);
    cj["baseline"] = row.baseline ? metric_json(*row.baseline) : nlohmann::json();
    cj["custom"] = metric_json(row.custom);
    j["concepts"].push_back(std::move(cj));
  }

  j["instances"] = nlohmann::json::array();
  for (const InstanceRecord& rec : report.records) {
    nlohmann::json rj;
    rj["id"] = rec.id;
    rj["status"] = to_string(rec.status);
    rj["perturbation_norm"] = rec.perturbation_norm;
    j["instances"].push_back(std::move(rj));
  }
  return j.dump(2) + "\n";
}

std::string write_report_files(const AttackReport& report, const std::string& out_dir,
                               const std::string& timestamp) {
  io::ensure_dir(out_dir);
  const std::string base = out_dir + "/" + report_basename(report.scenario.name, timestamp);
  io::write_file(base + ".csv", report_csv(report));
  io::write_file(base + ".json", report_json(report));
  io::write_file(base + "_instances.csv", instances_csv(report));
  std::vector<int> ids;
  ids.reserve(report.records.size());
  for (const InstanceRecord& rec : report.records) ids.push_back(rec.id);
  write_perturbed_csv(base + "_perturbed.csv", ids, report.perturbed);
  if (report.meta.baseline_configured) {
    write_perturbed_csv(base + "_baseline_perturbed.csv", ids, report.baseline_perturbed);
  }
  return base;
}

}  // namespace polyattack
