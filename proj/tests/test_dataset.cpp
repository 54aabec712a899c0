#include "polyattack/dataset.hpp"

#include <cstdlib>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "polyattack/errors.hpp"
#include "polyattack/io_util.hpp"

using namespace polyattack;

namespace {

// Tiny 2-image 2x2 IDX fixture written on the fly.
struct Fixture {
  std::string img_path, lab_path;

  Fixture() {
    const auto dir = std::filesystem::temp_directory_path() / "polyattack_idx_test";
    std::filesystem::create_directories(dir);
    img_path = (dir / "imgs").string();
    lab_path = (dir / "labs").string();
    RawDataset raw;
    raw.rows = 2;
    raw.cols = 2;
    raw.images = {{0, 51, 102, 255}, {10, 20, 30, 40}};
    raw.labels = {0, 7};
    write_idx(img_path, lab_path, raw);
  }
};

std::string repo_root() {
  if (const char* env = std::getenv("POLYATTACK_DATA_DIR")) return env;
  return ".";
}

}  // namespace

TEST_CASE("IDX round trip and header validation") {
  Fixture fx;
  const RawDataset raw = load_idx(fx.img_path, fx.lab_path);
  CHECK(raw.images.size() == 2);
  CHECK(raw.rows == 2);
  CHECK(raw.cols == 2);
  CHECK(raw.images[0] == std::vector<std::uint8_t>{0, 51, 102, 255});
  CHECK(raw.labels == std::vector<std::uint8_t>{0, 7});

  SUBCASE("label magic in place of image magic is BadMagic") {
    CHECK_THROWS_AS((void)load_idx(fx.lab_path, fx.lab_path), BadMagic);
  }
  SUBCASE("declared count larger than the payload is TruncatedFile") {
    std::string bytes = io::read_file(fx.img_path);
    bytes[7] = 100;  // count field low byte: claim 100 images
    io::write_file(fx.img_path + ".trunc", bytes);
    CHECK_THROWS_AS((void)load_idx(fx.img_path + ".trunc", fx.lab_path), TruncatedFile);
  }
  SUBCASE("image/label count disagreement is CountMismatch") {
    RawDataset extra;
    extra.rows = 2;
    extra.cols = 2;
    extra.images = {{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 12}};
    extra.labels = {1, 2, 3};
    Fixture fx3;
    write_idx(fx3.img_path + ".three", fx3.lab_path + ".three", extra);
    CHECK_THROWS_AS((void)load_idx(fx3.img_path + ".three", fx.lab_path), CountMismatch);
  }
  SUBCASE("missing file is a DataError") {
    CHECK_THROWS_AS((void)load_idx("/nonexistent/a", "/nonexistent/b"), DataError);
  }
}

TEST_CASE("apply_concepts: scaling and rule application") {
  Fixture fx;
  const RawDataset raw = load_idx(fx.img_path, fx.lab_path);
  const ConceptDataset ds = apply_concepts(raw, mnist_rules());

  CHECK(ds.concept_names == std::vector<std::string>{"EVEN", "GE5", "ZERO"});
  CHECK(ds.feature_shape == std::pair<int, int>{2, 2});
  CHECK(ds.instances[0][1] == doctest::Approx(51.0 / 255.0));
  CHECK(ds.instances[0][3] == 1.0);

  // digit 0 → (+1, −1, +1); digit 7 → (−1, +1, −1)
  CHECK(ds.labels[0] == std::vector<int>{+1, -1, +1});
  CHECK(ds.labels[1] == std::vector<int>{-1, +1, -1});

  // digit 4 → (+1, −1, −1)
  RawDataset four;
  four.rows = 1;
  four.cols = 1;
  four.images = {{128}};
  four.labels = {4};
  CHECK(apply_concepts(four, mnist_rules()).labels[0] == std::vector<int>{+1, -1, -1});
}

TEST_CASE("shipped MNIST subset: counts, range, and concept marginals") {
  const std::string root = repo_root();
  const RawDataset raw = load_idx(root + "/data/mnist/mnist-10k-images-idx3-ubyte",
                                  root + "/data/mnist/mnist-10k-labels-idx1-ubyte");
  REQUIRE(raw.images.size() == 10000);
  REQUIRE(raw.rows * raw.cols == 784);

  const ConceptDataset ds = apply_concepts(raw, mnist_rules());
  const int zero_idx = ds.concept_index("ZERO");
  REQUIRE(zero_idx >= 0);
  std::size_t zero_pos = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.instances[i]) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
    if (ds.labels[i][zero_idx] == +1) ++zero_pos;
  }
  const double rate = static_cast<double>(zero_pos) / ds.size();
  CHECK(rate >= 0.088);  // ZERO marginal ≈ 0.098 ± 0.01
  CHECK(rate <= 0.108);
}

TEST_CASE("synth_blobs: determinism, margins, labels") {
  const ConceptDataset a = synth_blobs(1000, 7);
  const ConceptDataset b = synth_blobs(1000, 7);
  REQUIRE(a.size() == 1000);
  CHECK(a.instances == b.instances);  // same seed → identical
  CHECK(a.labels == b.labels);

  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.instances[i][0], y = a.instances[i][1];
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
    CHECK(std::abs(x - 0.5) >= 0.02);  // boundary margin by construction
    CHECK(std::abs(y - 0.5) >= 0.02);
    CHECK(a.labels[i][0] == (x > 0.5 ? +1 : -1));
    CHECK(a.labels[i][1] == (y > 0.5 ? +1 : -1));
  }
  // the sign rule on a hand point
  CHECK(synth_blobs(4, 1).concept_names == std::vector<std::string>{"A", "B"});
  CHECK_THROWS_AS((void)synth_blobs(3, 1), ConfigError);
}

TEST_CASE("sample_eval_subset") {
  const ConceptDataset ds = synth_blobs(100, 5);
  SUBCASE("n = |ds| is a permutation (here: identity order preserved)") {
    const ConceptDataset all = sample_eval_subset(ds, 100, 9);
    CHECK(all.size() == 100);
    std::multiset<int> got(all.ids.begin(), all.ids.end());
    std::multiset<int> want(ds.ids.begin(), ds.ids.end());
    CHECK(got == want);
  }
  SUBCASE("n = 20 distinct ids, deterministic, order-stable") {
    const ConceptDataset s1 = sample_eval_subset(ds, 20, 9);
    const ConceptDataset s2 = sample_eval_subset(ds, 20, 9);
    CHECK(s1.ids == s2.ids);
    CHECK(std::set<int>(s1.ids.begin(), s1.ids.end()).size() == 20);
    CHECK(std::is_sorted(s1.ids.begin(), s1.ids.end()));
  }
  SUBCASE("two different seeds give different index sets (pinned pair)") {
    const ConceptDataset s1 = sample_eval_subset(ds, 20, 9);
    const ConceptDataset s3 = sample_eval_subset(ds, 20, 10);
    CHECK(s1.ids != s3.ids);
  }
  SUBCASE("oversized request rejected") {
    CHECK_THROWS_AS((void)sample_eval_subset(ds, 101, 1), ConfigError);
  }
}

TEST_CASE("split_dataset partitions deterministically") {
  const ConceptDataset ds = synth_blobs(50, 3);
  const auto [train, rest] = split_dataset(ds, 30, 11);
  CHECK(train.size() == 30);
  CHECK(rest.size() == 20);
  std::set<int> seen(train.ids.begin(), train.ids.end());
  seen.insert(rest.ids.begin(), rest.ids.end());
  CHECK(seen.size() == 50);  // disjoint cover
  const auto [train2, rest2] = split_dataset(ds, 30, 11);
  CHECK(train.ids == train2.ids);
}

TEST_CASE("dataset CSV header and layout") {
  ConceptDataset ds;
  ds.concept_names = {"A", "B"};
  ds.instances = {{0.5, 0.25}};
  ds.labels = {{+1, -1}};
  ds.ids = {0};
  CHECK(dataset_csv(ds) == "f0,f1,A,B\n0.5,0.25,1,-1\n");
}

TEST_CASE("unknown rule name rejected") {
  CHECK_THROWS_AS((void)rules_by_names({"EVEN", "NOPE"}), ConfigError);
  CHECK(rules_by_names({"ZERO", "EVEN"})[0].name == "ZERO");
}
