// Config schema: strict key checking, defaults, validation errors, relative
// path resolution, and the global seed override.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include <nlohmann/json.hpp>

#include "polyattack/config.hpp"
#include "polyattack/errors.hpp"
#include "polyattack/io_util.hpp"
#include "polyattack/linalg.hpp"
#include "polyattack/report.hpp"

using namespace polyattack;
using nlohmann::json;

namespace {

json blobs_base() {
  return json::parse(R"({
    "dataset": {"kind": "synth_blobs", "n": 100, "train_count": 60},
    "models": {"linear": {}},
    "scenarios": [
      {"name": "s1", "kind": "LinearL1", "attacked": ["A"], "protected": ["B"]}
    ]
  })");
}

json mnist_base() {
  return json::parse(R"({
    "dataset": {"kind": "mnist_idx", "images": "img", "labels": "lab", "train_count": 500},
    "concepts": ["EVEN", "GE5"],
    "models": {"mlp": {}},
    "scenarios": []
  })");
}

RunConfig parse(const json& j) { return parse_run_config(j.dump()); }

}  // namespace

TEST_CASE("valid configs parse and defaults fill in") {
  const RunConfig cfg = parse(blobs_base());
  CHECK(cfg.dataset.kind == "synth_blobs");
  CHECK(cfg.dataset.n == 100);
  CHECK(cfg.dataset.seed == 7);           // default
  CHECK(cfg.dataset.split_seed == 13);    // default
  CHECK(cfg.dataset.eval_count == 200);   // default
  CHECK(cfg.dataset.eval_seed == 99);     // default
  CHECK(cfg.train_linear);
  CHECK_FALSE(cfg.train_mlp);
  CHECK(cfg.linear_hp.lambda_reg == 1e-4);
  CHECK(cfg.output_dir == "out");
  REQUIRE(cfg.scenarios.size() == 1);
  const Scenario& sc = cfg.scenarios[0];
  CHECK(sc.kind == AttackKind::LinearL1);
  CHECK(sc.attack_margin == 1e-4);
  CHECK(sc.protect_margin == 1e-4);
  CHECK_FALSE(sc.positive_only);
  CHECK(sc.use_box);
  CHECK(sc.lambda_attacked == 1.0);
  CHECK(sc.lambda_protected == 1.0);
  CHECK_FALSE(sc.run_baseline);
  CHECK(sc.seed == 1);

  const RunConfig m = parse(mnist_base());
  CHECK(m.dataset.kind == "mnist_idx");
  CHECK(m.concepts == std::vector<std::string>{"EVEN", "GE5"});
  CHECK(m.train_mlp);
  CHECK_FALSE(m.train_linear);
  CHECK(m.mlp_hp.hidden_sizes == std::vector<std::size_t>{16});
  CHECK(m.explain.samples == 200);
  CHECK(m.explain.background == 16);
  CHECK(m.explain.dump_images == 0);
}

TEST_CASE("scenario ball selects the matching attack defaults") {
  json j = blobs_base();
  j["scenarios"][0] = {{"name", "g"}, {"kind", "MultiGrad"}, {"attacked", {"A"}}};

  SUBCASE("default ball is linf") {
    const Scenario sc = parse(j).scenarios[0];
    CHECK(sc.ball == Norm::Linf);
    CHECK(sc.epsilon == 0.3);
    CHECK(sc.step_size == 0.06);
    CHECK(sc.iterations == 200);
  }
  SUBCASE("l2 ball pulls the l2 defaults") {
    j["scenarios"][0]["ball"] = "l2";
    const Scenario sc = parse(j).scenarios[0];
    CHECK(sc.ball == Norm::L2);
    CHECK(sc.epsilon == 4.0);
    CHECK(sc.step_size == 0.8);
    CHECK(sc.iterations == 200);
  }
  SUBCASE("explicit knobs win over defaults") {
    j["scenarios"][0]["ball"] = "l2";
    j["scenarios"][0]["epsilon"] = 1.5;
    j["scenarios"][0]["iterations"] = 17;
    const Scenario sc = parse(j).scenarios[0];
    CHECK(sc.epsilon == 1.5);
    CHECK(sc.step_size == 0.8);
    CHECK(sc.iterations == 17);
  }
  SUBCASE("bad ball string") {
    j["scenarios"][0]["ball"] = "l7";
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
}

TEST_CASE("unknown keys are rejected at every level") {
  json j = blobs_base();
  SUBCASE("top level") { j["extra"] = 1; }
  SUBCASE("dataset") { j["dataset"]["extra"] = 1; }
  SUBCASE("models") { j["models"]["extra"] = json::object(); }
  SUBCASE("models.linear") { j["models"]["linear"]["extra"] = 1; }
  SUBCASE("models.mlp") { j["models"]["mlp"] = {{"extra", 1}}; }
  SUBCASE("scenario") { j["scenarios"][0]["extra"] = 1; }
  SUBCASE("explain") { j["explain"] = {{"extra", 1}}; }
  CHECK_THROWS_AS(parse(j), ConfigError);
}

TEST_CASE("missing or ill-typed required fields") {
  SUBCASE("not JSON at all") {
    CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);
  }
  SUBCASE("missing dataset") {
    json j = blobs_base();
    j.erase("dataset");
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("missing dataset.kind") {
    json j = blobs_base();
    j["dataset"].erase("kind");
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("unknown dataset.kind") {
    json j = blobs_base();
    j["dataset"]["kind"] = "csv";
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("missing train_count") {
    json j = blobs_base();
    j["dataset"].erase("train_count");
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("zero train_count") {
    json j = blobs_base();
    j["dataset"]["train_count"] = 0;
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("train_count wrong type") {
    json j = blobs_base();
    j["dataset"]["train_count"] = "many";
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("scenario missing name") {
    json j = blobs_base();
    j["scenarios"][0].erase("name");
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("scenario unknown kind") {
    json j = blobs_base();
    j["scenarios"][0]["kind"] = "Linear";
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("scenarios not an array") {
    json j = blobs_base();
    j["scenarios"] = json::object();
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
}

TEST_CASE("dataset kinds reject each other's keys") {
  SUBCASE("mnist_idx with n") {
    json j = mnist_base();
    j["dataset"]["n"] = 10;
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("mnist_idx missing labels") {
    json j = mnist_base();
    j["dataset"].erase("labels");
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("synth_blobs with images") {
    json j = blobs_base();
    j["dataset"]["images"] = "img";
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("synth_blobs n too small") {
    json j = blobs_base();
    j["dataset"]["n"] = 3;
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
}

TEST_CASE("concepts block validation") {
  SUBCASE("mnist_idx needs concepts") {
    json j = mnist_base();
    j.erase("concepts");
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("unknown rule names are rejected early") {
    json j = mnist_base();
    j["concepts"] = {"EVEN", "PRIME"};
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("synth_blobs accepts the canonical pair") {
    json j = blobs_base();
    j["concepts"] = {"A", "B"};
    CHECK_NOTHROW(parse(j));
  }
  SUBCASE("synth_blobs rejects anything else") {
    json j = blobs_base();
    j["concepts"] = {"B", "A"};
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
}

TEST_CASE("scenario set and weight validation") {
  json j = blobs_base();
  SUBCASE("attacked listed twice") {
    j["scenarios"][0]["attacked"] = {"A", "A"};
  }
  SUBCASE("attacked and protected overlap") {
    j["scenarios"][0]["protected"] = {"A"};
  }
  SUBCASE("negative margin") { j["scenarios"][0]["attack_margin"] = -1e-6; }
  SUBCASE("negative epsilon") { j["scenarios"][0]["epsilon"] = -0.1; }
  SUBCASE("negative iterations") { j["scenarios"][0]["iterations"] = -1; }
  SUBCASE("zero lambda") { j["scenarios"][0]["lambda_attacked"] = 0.0; }
  SUBCASE("duplicate scenario names") {
    j["scenarios"].push_back(j["scenarios"][0]);
  }
  CHECK_THROWS_AS(parse(j), ConfigError);
}

TEST_CASE("model and explain hyperparameter validation") {
  SUBCASE("no model family at all is accepted by the parser") {
    json j = blobs_base();
    j.erase("models");
    const RunConfig cfg = parse(j);
    CHECK_FALSE(cfg.train_linear);
    CHECK_FALSE(cfg.train_mlp);
  }
  SUBCASE("linear epochs < 1") {
    json j = blobs_base();
    j["models"]["linear"]["epochs"] = 0;
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("linear lambda_reg <= 0") {
    json j = blobs_base();
    j["models"]["linear"]["lambda_reg"] = 0.0;
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("mlp batch 0") {
    json j = blobs_base();
    j["models"]["mlp"] = {{"batch", 0}};
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("mlp val_fraction 1.0") {
    json j = blobs_base();
    j["models"]["mlp"] = {{"val_fraction", 1.0}};
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("explain samples 0") {
    json j = blobs_base();
    j["explain"] = {{"samples", 0}};
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("explain background 0") {
    json j = blobs_base();
    j["explain"] = {{"background", 0}};
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
  SUBCASE("empty output_dir") {
    json j = blobs_base();
    j["output_dir"] = "";
    CHECK_THROWS_AS(parse(j), ConfigError);
  }
}

TEST_CASE("override_seeds reseeds every stage") {
  json j = blobs_base();
  j["models"]["mlp"] = json::object();
  j["explain"] = {{"seed", 5}};
  RunConfig cfg = parse(j);
  override_seeds(cfg, 424242);
  CHECK(cfg.dataset.seed == 424242);
  CHECK(cfg.dataset.split_seed == 424242);
  CHECK(cfg.dataset.eval_seed == 424242);
  CHECK(cfg.linear_hp.seed == 424242);
  CHECK(cfg.mlp_hp.seed == 424242);
  CHECK(cfg.explain.seed == 424242);
  for (const Scenario& sc : cfg.scenarios) CHECK(sc.seed == 424242);
}

TEST_CASE("load_run_config resolves dataset paths against the config dir") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "polyattack_cfg_test";
  fs::create_directories(dir);
  json j = mnist_base();
  j["dataset"]["images"] = "data/img-idx3";
  j["dataset"]["labels"] = "/abs/lab-idx1";
  const fs::path cfg_path = dir / "run.json";
  io::write_file(cfg_path.string(), j.dump());

  const RunConfig cfg = load_run_config(cfg_path.string());
  CHECK(cfg.dataset.images == (dir / "data/img-idx3").string());
  CHECK(cfg.dataset.labels == "/abs/lab-idx1");  // absolute paths pass through

  CHECK_THROWS_AS(load_run_config((dir / "missing.json").string()), ConfigError);
  fs::remove_all(dir);
}
