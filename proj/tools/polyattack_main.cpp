// polyattack: multi-concept adversarial perturbation toolkit.
//
// Subcommands run a deterministic pipeline driven by a JSON config:
//   prepare -> train -> attack -> explain -> report     (`all` = every stage)
// Each subcommand recomputes the stages it depends on in memory (everything
// is seeded, so results are identical) and writes only its own artifacts.
//
// Exit codes: 0 success; 1 usage/config error; 2 data error; 3 solver failure
// in any scenario (or internal numeric failure).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "polyattack/config.hpp"
#include "polyattack/dataset.hpp"
#include "polyattack/errors.hpp"
#include "polyattack/io_util.hpp"
#include "polyattack/mlp.hpp"
#include "polyattack/multigrad.hpp"
#include "polyattack/report.hpp"
#include "polyattack/shap.hpp"
#include "polyattack/svm.hpp"

namespace {

using namespace polyattack;

struct CliOptions {
  std::string config_path;
  int jobs = 1;
  bool no_timestamp = false;
  bool full_eval = false;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

// Deterministic worker fan-out: slot i is owned by exactly one worker.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

class Pipeline {
 public:
  Pipeline(RunConfig cfg, const CliOptions& opts) : cfg_(std::move(cfg)), opts_(opts) {
    timestamp_ = opts_.no_timestamp ? "" : utc_timestamp();
  }

  void prepare_data() {
    if (loaded_) return;
    if (cfg_.dataset.kind == "mnist_idx") {
      raw_ = load_idx(cfg_.dataset.images, cfg_.dataset.labels);
      full_ = apply_concepts(raw_, rules_by_names(cfg_.concepts));
    } else {
      full_ = synth_blobs(cfg_.dataset.n, cfg_.dataset.seed);
    }
    if (cfg_.dataset.train_count >= full_.size()) {
      throw ConfigError("dataset.train_count leaves no evaluation instances");
    }
    auto [train, holdout] = split_dataset(full_, cfg_.dataset.train_count, cfg_.dataset.split_seed);
    train_ = std::move(train);
    holdout_ = std::move(holdout);
    if (opts_.full_eval || cfg_.dataset.eval_count == 0 ||
        cfg_.dataset.eval_count >= holdout_.size()) {
      eval_ = holdout_;
    } else {
      eval_ = sample_eval_subset(holdout_, cfg_.dataset.eval_count, cfg_.dataset.eval_seed);
    }
    loaded_ = true;
  }

  void stage_prepare() {
    prepare_data();
    const std::string dir = cfg_.output_dir + "/data";
    io::ensure_dir(dir);
    if (cfg_.dataset.kind == "mnist_idx") {
      write_idx(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte",
                raw_subset(train_.ids));
      write_idx(dir + "/eval-images-idx3-ubyte", dir + "/eval-labels-idx1-ubyte",
                raw_subset(eval_.ids));
    } else {
      io::write_file(dir + "/train.csv", dataset_csv(train_));
    }
    io::write_file(dir + "/eval.csv", dataset_csv(eval_));

    nlohmann::json manifest;
    manifest["kind"] = cfg_.dataset.kind;
    manifest["concepts"] = eval_.concept_names;
    manifest["dim"] = eval_.dim();
    manifest["train_instances"] = train_.size();
    manifest["holdout_instances"] = holdout_.size();
    manifest["eval_instances"] = eval_.size();
    manifest["split_seed"] = cfg_.dataset.split_seed;
    manifest["eval_seed"] = cfg_.dataset.eval_seed;
    io::write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
  }

  void train_models() {
    if (trained_) return;
    prepare_data();
    if (!cfg_.train_linear && !cfg_.train_mlp) {
      throw ConfigError("config.models: no model family configured");
    }
    for (std::size_t c = 0; c < train_.concept_names.size(); ++c) {
      if (cfg_.train_linear) {
        SvmTrainResult res = train_svm(train_, static_cast<int>(c), cfg_.linear_hp);
        linear_train_acc_.push_back(res.train_accuracy);
        models_.linear.push_back(std::move(res.clf));
      }
      if (cfg_.train_mlp) {
        MlpTrainResult res = train_mlp(train_, static_cast<int>(c), cfg_.mlp_hp);
        mlp_train_acc_.push_back(res.train_accuracy);
        mlp_val_acc_.push_back(res.val_accuracy);
        models_.mlps.push_back(std::move(res.net));
      }
    }
    trained_ = true;
  }

  void stage_train() {
    train_models();
    const std::string dir = cfg_.output_dir + "/models";
    io::ensure_dir(dir);
    std::string metrics = "family,concept,train_accuracy,val_accuracy\n";
    for (std::size_t i = 0; i < models_.linear.size(); ++i) {
      const LinearClassifier& clf = models_.linear[i];
      io::write_file(dir + "/linear_" + clf.concept_name + ".json", linear_to_json(clf));
      metrics += "linear," + clf.concept_name + "," + io::format_double(linear_train_acc_[i]) +
                 ",NA\n";
    }
    for (std::size_t i = 0; i < models_.mlps.size(); ++i) {
      const MlpClassifier& net = models_.mlps[i];
      io::write_file(dir + "/mlp_" + net.concept_name + ".json", mlp_to_json(net));
      metrics += "mlp," + net.concept_name + "," + io::format_double(mlp_train_acc_[i]) + "," +
                 io::format_double(mlp_val_acc_[i]) + "\n";
    }
    io::write_file(dir + "/metrics.csv", metrics);
  }

  void run_attacks() {
    if (attacked_) return;
    train_models();
    for (const Scenario& sc : cfg_.scenarios) {
      reports_.push_back(run_scenario(sc, models_, eval_, opts_.jobs));
    }
    attacked_ = true;
  }

  void stage_attack() {
    run_attacks();
    const std::string dir = cfg_.output_dir + "/reports";
    io::ensure_dir(dir);
    for (const AttackReport& report : reports_) {
      const std::string base = dir + "/" + report_basename(report.scenario.name, timestamp_);
      std::vector<int> ids;
      for (const InstanceRecord& rec : report.records) ids.push_back(rec.id);
      write_perturbed_csv(base + "_perturbed.csv", ids, report.perturbed);
      if (report.meta.baseline_configured) {
        write_perturbed_csv(base + "_baseline_perturbed.csv", ids, report.baseline_perturbed);
      }
      io::write_file(base + "_instances.csv", instances_csv(report));
      dump_instance_pgms(report, base);
    }
  }

  void stage_report() {
    run_attacks();
    const std::string dir = cfg_.output_dir + "/reports";
    io::ensure_dir(dir);
    std::string summary = "scenario,concept,role,column,accuracy,recall\n";
    for (const AttackReport& report : reports_) {
      const std::string base = dir + "/" + report_basename(report.scenario.name, timestamp_);
      io::write_file(base + ".csv", report_csv(report));
      io::write_file(base + ".json", report_json(report));
      const std::string body = report_csv(report);
      summary += body.substr(body.find('\n') + 1);
    }
    io::write_file(dir + "/" + report_basename("summary", timestamp_) + ".csv", summary);
  }

  void stage_explain() {
    run_attacks();
    const std::string dir = cfg_.output_dir + "/reports";
    io::ensure_dir(dir);
    for (const AttackReport& report : reports_) {
      explain_scenario(report, dir);
    }
  }

  std::size_t solver_failures() const {
    std::size_t total = 0;
    for (const AttackReport& report : reports_) total += report.meta.solver_failure;
    return total;
  }

 private:
  RawDataset raw_subset(const std::vector<int>& ids) const {
    RawDataset out;
    out.rows = raw_.rows;
    out.cols = raw_.cols;
    for (int id : ids) {
      out.images.push_back(raw_.images[static_cast<std::size_t>(id)]);
      out.labels.push_back(raw_.labels[static_cast<std::size_t>(id)]);
    }
    return out;
  }

  static bool linear_kind(AttackKind k) {
    return k == AttackKind::LinearL1 || k == AttackKind::LinearLinf || k == AttackKind::LinearL2;
  }

  void dump_instance_pgms(const AttackReport& report, const std::string& base) const {
    if (cfg_.explain.dump_images == 0 || !eval_.feature_shape) return;
    const auto [h, w] = *eval_.feature_shape;
    const std::size_t k = std::min(cfg_.explain.dump_images, report.perturbed.size());
    for (std::size_t i = 0; i < k; ++i) {
      io::write_pgm(base + "_inst" + std::to_string(report.records[i].id) + ".pgm",
                    report.perturbed[i], h, w);
    }
  }

  // Mean attribution shift per concept (custom and, when present, baseline
  // columns), plus attribution PGM grids for the first dump_images instances.
  void explain_scenario(const AttackReport& report, const std::string& dir) {
    const std::string base = dir + "/" + report_basename(report.scenario.name, timestamp_);
    const bool linear = linear_kind(report.scenario.kind);

    Vector train_mean;
    std::vector<Vector> background;
    if (linear) {
      train_mean.assign(train_.dim(), 0.0);
      for (const Vector& inst : train_.instances) {
        for (std::size_t d = 0; d < train_mean.size(); ++d) train_mean[d] += inst[d];
      }
      for (double& v : train_mean) v /= static_cast<double>(train_.size());
    } else {
      const std::size_t count = std::min(cfg_.explain.background, train_.size());
      background = sample_eval_subset(train_, count, cfg_.explain.seed).instances;
    }

    std::string csv =
        "scenario,concept,role,mean_shift_custom,mean_shift_baseline,skipped,instances\n";
    const std::size_t n = eval_.size();
    for (const ConceptRow& row : report.concepts) {
      const int model_idx = linear ? models_.linear_index(row.concept_name)
                                   : models_.mlp_index(row.concept_name);
      auto attribute = [&](const Vector& x) {
        return linear ? linear_shap(models_.linear[static_cast<std::size_t>(model_idx)], x,
                                    train_mean)
                      : gradient_shap(models_.mlps[static_cast<std::size_t>(model_idx)], x,
                                      background, cfg_.explain.samples, cfg_.explain.seed);
      };

      std::vector<Attribution> before(n);
      std::vector<double> shift_custom(n, -1.0);  // -1 marks skipped
      std::vector<double> shift_base(n, -1.0);
      parallel_for(n, opts_.jobs, [&](std::size_t i) {
        before[i] = attribute(eval_.instances[i]);
        try {
          shift_custom[i] = attribution_shift(before[i], attribute(report.perturbed[i]));
        } catch (const ZeroVector&) {
        }
        if (report.meta.baseline_configured) {
          try {
            shift_base[i] = attribution_shift(before[i], attribute(report.baseline_perturbed[i]));
          } catch (const ZeroVector&) {
          }
        }
      });

      double sum_custom = 0.0, sum_base = 0.0;
      std::size_t n_custom = 0, n_base = 0, skipped = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (shift_custom[i] >= 0.0) {
          sum_custom += shift_custom[i];
          ++n_custom;
        } else {
          ++skipped;
        }
        if (shift_base[i] >= 0.0) {
          sum_base += shift_base[i];
          ++n_base;
        }
      }
      csv += report.scenario.name + "," + row.concept_name + "," + row.role + ",";
      csv += (n_custom ? io::format_double(sum_custom / static_cast<double>(n_custom))
                       : std::string("NA")) +
             ",";
      csv += (report.meta.baseline_configured && n_base
                  ? io::format_double(sum_base / static_cast<double>(n_base))
                  : std::string("NA")) +
             ",";
      csv += std::to_string(skipped) + "," + std::to_string(n) + "\n";

      if (cfg_.explain.dump_images > 0 && eval_.feature_shape) {
        const auto [h, w] = *eval_.feature_shape;
        const std::size_t k = std::min(cfg_.explain.dump_images, n);
        for (std::size_t i = 0; i < k; ++i) {
          const std::string stem = base + "_" + row.concept_name + "_inst" +
                                   std::to_string(report.records[i].id);
          write_attribution_pgm(stem + "_orig.pgm", before[i], h, w);
          write_attribution_pgm(stem + "_custom.pgm", attribute(report.perturbed[i]), h, w);
        }
      }
    }
    io::write_file(base + "_shift.csv", csv);
  }

  RunConfig cfg_;
  CliOptions opts_;
  std::string timestamp_;
  RawDataset raw_;
  ConceptDataset full_, train_, holdout_, eval_;
  ModelRegistry models_;
  std::vector<double> linear_train_acc_, mlp_train_acc_, mlp_val_acc_;
  std::vector<AttackReport> reports_;
  bool loaded_ = false;
  bool trained_ = false;
  bool attacked_ = false;
};

int run_command(const std::string& stage, const CliOptions& opts) {
  RunConfig cfg = load_run_config(opts.config_path);
  if (const char* env = std::getenv("POLYATTACK_SEED")) {
    const std::string text(env);
    try {
      std::size_t pos = 0;
      if (text.empty() || text[0] == '-') throw std::invalid_argument("negative");
      const unsigned long long seed = std::stoull(text, &pos);
      if (pos != text.size()) throw std::invalid_argument("trailing chars");
      override_seeds(cfg, seed);
    } catch (const std::exception&) {
      throw ConfigError("POLYATTACK_SEED must be an unsigned integer");
    }
  }

  Pipeline pipe(std::move(cfg), opts);
  if (stage == "prepare" || stage == "all") pipe.stage_prepare();
  if (stage == "train" || stage == "all") pipe.stage_train();
  if (stage == "attack" || stage == "all") pipe.stage_attack();
  if (stage == "explain" || stage == "all") pipe.stage_explain();
  if (stage == "report" || stage == "all") pipe.stage_report();

  if (pipe.solver_failures() > 0) {
    std::fprintf(stderr, "polyattack: %zu instance(s) ended in solver failure\n",
                 pipe.solver_failures());
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-concept adversarial perturbation toolkit"};
  app.require_subcommand(1);

  CliOptions opts;
  const std::vector<std::pair<std::string, std::string>> stages = {
      {"prepare", "load the dataset, derive concept labels, write the splits"},
      {"train", "train one model per concept per configured family"},
      {"attack", "run every scenario, dump perturbed instances and statuses"},
      {"explain", "attribution shift tables and attribution image grids"},
      {"report", "accuracy/recall tables per scenario plus a summary"},
      {"all", "every stage in order"},
  };
  for (const auto& [name, desc] : stages) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opts.config_path, "run configuration JSON")
        ->required();
    sub->add_option("--jobs", opts.jobs, "worker threads across instances")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--no-timestamp", opts.no_timestamp,
                  "suppress the timestamp in report file names");
    sub->add_flag("--full-eval", opts.full_eval,
                  "evaluate on the whole held-out split instead of the sampled subset");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    return run_command(app.get_subcommands().front()->get_name(), opts);
  } catch (const DataError& e) {
    std::fprintf(stderr, "polyattack: data error: %s\n", e.what());
    return 2;
  } catch (const SolverNumericsError& e) {
    std::fprintf(stderr, "polyattack: solver failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "polyattack: %s\n", e.what());
    return 1;
  }
}
