#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polyattack/linalg.hpp"

namespace polyattack {

// Pixels and digit labels exactly as stored on disk.
struct RawDataset {
  std::vector<std::vector<std::uint8_t>> images;  // n × (rows·cols)
  std::vector<std::uint8_t> labels;               // digits 0–9
  std::size_t rows = 0;
  std::size_t cols = 0;
};

// Big-endian IDX pair (magic 0x00000803 images / 0x00000801 labels).
// Throws BadMagic / TruncatedFile / CountMismatch.
RawDataset load_idx(const std::string& images_path, const std::string& labels_path);

// Inverse of load_idx, bit-exact IDX output (used by the prepare stage to
// materialize deterministic splits).
void write_idx(const std::string& images_path, const std::string& labels_path,
               const RawDataset& raw);

// Total mapping digit → {−1,+1} for one concept.
struct ConceptRule {
  std::string name;
  std::array<bool, 10> positive{};  // true → +1

  int label(int digit) const { return positive[static_cast<std::size_t>(digit)] ? +1 : -1; }
};

// The three MNIST concepts used throughout: EVEN, GE5 (digit ≥ 5), ZERO.
const std::vector<ConceptRule>& mnist_rules();

// Resolve rule names against mnist_rules(); throws ConfigError on unknown names.
std::vector<ConceptRule> rules_by_names(const std::vector<std::string>& names);

// One input, many binary labels.
struct ConceptDataset {
  std::vector<Vector> instances;  // features in [0,1]
  std::vector<std::string> concept_names;
  std::vector<std::vector<int>> labels;  // |instances| × |concepts|, entries ±1
  std::optional<std::pair<int, int>> feature_shape;  // (height, width) for images
  std::vector<int> ids;  // stable source indices, survive subsetting

  std::size_t size() const { return instances.size(); }
  std::size_t dim() const { return instances.empty() ? 0 : instances.front().size(); }
  int concept_index(const std::string& name) const;  // -1 if absent
};

// Scale pixels by 1/255 and derive per-concept ±1 labels.
ConceptDataset apply_concepts(const RawDataset& raw, const std::vector<ConceptRule>& rules);

// 2-D Gaussian blobs in [0,1]² with concepts A = sign(x1−0.5) and
// B = sign(x2−0.5); points within 0.02 of either boundary are resampled, so
// both concepts are separable with margin ≥ 0.02 by construction.
ConceptDataset synth_blobs(std::size_t n, std::uint64_t seed);

// Uniform sample without replacement, deterministic under seed; preserves the
// original relative order of the chosen instances.
ConceptDataset sample_eval_subset(const ConceptDataset& ds, std::size_t n, std::uint64_t seed);

// Deterministic shuffled split: first train_count instances of the seeded
// permutation, then the rest.
std::pair<ConceptDataset, ConceptDataset> split_dataset(const ConceptDataset& ds,
                                                        std::size_t train_count,
                                                        std::uint64_t seed);

// CSV with header f0..f{d-1} then one column per concept (labels as ±1).
std::string dataset_csv(const ConceptDataset& ds);

}  // namespace polyattack
