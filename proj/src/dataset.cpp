#include "polyattack/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "polyattack/errors.hpp"
#include "polyattack/io_util.hpp"
#include "polyattack/rng.hpp"

namespace polyattack {

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw TruncatedFile("unexpected end of header in " + path);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void append_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

}  // namespace

RawDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  RawDataset raw;

  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw DataError("cannot open " + images_path);
  const std::uint32_t img_magic = read_be32(img, images_path);
  if (img_magic != 0x00000803u) {
    throw BadMagic("expected image magic 0x00000803 in " + images_path);
  }
  const std::uint32_t n = read_be32(img, images_path);
  raw.rows = read_be32(img, images_path);
  raw.cols = read_be32(img, images_path);
  const std::size_t pixels = raw.rows * raw.cols;
  raw.images.resize(n, std::vector<std::uint8_t>(pixels));
  for (std::uint32_t i = 0; i < n; ++i) {
    img.read(reinterpret_cast<char*>(raw.images[i].data()),
             static_cast<std::streamsize>(pixels));
    if (img.gcount() != static_cast<std::streamsize>(pixels)) {
      throw TruncatedFile("image file " + images_path + " declares " + std::to_string(n) +
                          " images but ends at image " + std::to_string(i));
    }
  }

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw DataError("cannot open " + labels_path);
  const std::uint32_t lab_magic = read_be32(lab, labels_path);
  if (lab_magic != 0x00000801u) {
    throw BadMagic("expected label magic 0x00000801 in " + labels_path);
  }
  const std::uint32_t n_lab = read_be32(lab, labels_path);
  if (n_lab != n) {
    throw CountMismatch(std::to_string(n) + " images vs " + std::to_string(n_lab) +
                        " labels");
  }
  raw.labels.resize(n_lab);
  lab.read(reinterpret_cast<char*>(raw.labels.data()), static_cast<std::streamsize>(n_lab));
  if (lab.gcount() != static_cast<std::streamsize>(n_lab)) {
    throw TruncatedFile("label file " + labels_path + " shorter than declared count");
  }
  return raw;
}

void write_idx(const std::string& images_path, const std::string& labels_path,
               const RawDataset& raw) {
  if (raw.images.size() != raw.labels.size()) {
    throw CountMismatch("write_idx: image/label count differs");
  }
  std::string img;
  append_be32(img, 0x00000803u);
  append_be32(img, static_cast<std::uint32_t>(raw.images.size()));
  append_be32(img, static_cast<std::uint32_t>(raw.rows));
  append_be32(img, static_cast<std::uint32_t>(raw.cols));
  for (const auto& px : raw.images) {
    img.append(reinterpret_cast<const char*>(px.data()), px.size());
  }
  io::write_file(images_path, img);

  std::string lab;
  append_be32(lab, 0x00000801u);
  append_be32(lab, static_cast<std::uint32_t>(raw.labels.size()));
  lab.append(reinterpret_cast<const char*>(raw.labels.data()), raw.labels.size());
  io::write_file(labels_path, lab);
}

const std::vector<ConceptRule>& mnist_rules() {
  static const std::vector<ConceptRule> rules = [] {
    ConceptRule even{"EVEN", {}};
    ConceptRule ge5{"GE5", {}};
    ConceptRule zero{"ZERO", {}};
    for (int d = 0; d <= 9; ++d) {
      even.positive[d] = (d % 2 == 0);
      ge5.positive[d] = (d >= 5);
      zero.positive[d] = (d == 0);
    }
    return std::vector<ConceptRule>{even, ge5, zero};
  }();
  return rules;
}

std::vector<ConceptRule> rules_by_names(const std::vector<std::string>& names) {
  std::vector<ConceptRule> out;
  for (const auto& name : names) {
    bool found = false;
    for (const auto& rule : mnist_rules()) {
      if (rule.name == name) {
        out.push_back(rule);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown concept rule: " + name);
  }
  return out;
}

int ConceptDataset::concept_index(const std::string& name) const {
  for (std::size_t k = 0; k < concept_names.size(); ++k) {
    if (concept_names[k] == name) return static_cast<int>(k);
  }
  return -1;
}

ConceptDataset apply_concepts(const RawDataset& raw, const std::vector<ConceptRule>& rules) {
  if (rules.empty()) throw ConfigError("apply_concepts: no rules given");
  ConceptDataset ds;
  ds.feature_shape = {static_cast<int>(raw.rows), static_cast<int>(raw.cols)};
  for (const auto& rule : rules) ds.concept_names.push_back(rule.name);
  ds.instances.reserve(raw.images.size());
  ds.labels.reserve(raw.images.size());
  ds.ids.resize(raw.images.size());
  std::iota(ds.ids.begin(), ds.ids.end(), 0);
  for (std::size_t i = 0; i < raw.images.size(); ++i) {
    Vector x(raw.images[i].size());
    for (std::size_t p = 0; p < x.size(); ++p) x[p] = raw.images[i][p] / 255.0;
    ds.instances.push_back(std::move(x));
    std::vector<int> row;
    row.reserve(rules.size());
    for (const auto& rule : rules) row.push_back(rule.label(raw.labels[i]));
    ds.labels.push_back(std::move(row));
  }
  return ds;
}

ConceptDataset synth_blobs(std::size_t n, std::uint64_t seed) {
  if (n < 4) throw ConfigError("synth_blobs: n must be >= 4");
  constexpr double kMargin = 0.02;
  constexpr double kStd = 0.12;
  const double cx[4] = {0.25, 0.75, 0.25, 0.75};
  const double cy[4] = {0.25, 0.25, 0.75, 0.75};

  Rng rng(seed);
  ConceptDataset ds;
  ds.concept_names = {"A", "B"};
  ds.ids.resize(n);
  std::iota(ds.ids.begin(), ds.ids.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t q = i % 4;
    double x, y;
    do {
      x = rng.normal(cx[q], kStd);
      y = rng.normal(cy[q], kStd);
    } while (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0 ||
             std::fabs(x - 0.5) < kMargin || std::fabs(y - 0.5) < kMargin);
    ds.instances.push_back({x, y});
    ds.labels.push_back({x > 0.5 ? +1 : -1, y > 0.5 ? +1 : -1});
  }
  return ds;
}

ConceptDataset sample_eval_subset(const ConceptDataset& ds, std::size_t n, std::uint64_t seed) {
  if (n > ds.size()) throw ConfigError("sample_eval_subset: n exceeds dataset size");
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());

  ConceptDataset out;
  out.concept_names = ds.concept_names;
  out.feature_shape = ds.feature_shape;
  for (std::size_t i : idx) {
    out.instances.push_back(ds.instances[i]);
    out.labels.push_back(ds.labels[i]);
    out.ids.push_back(ds.ids[i]);
  }
  return out;
}

std::pair<ConceptDataset, ConceptDataset> split_dataset(const ConceptDataset& ds,
                                                        std::size_t train_count,
                                                        std::uint64_t seed) {
  if (train_count > ds.size()) throw ConfigError("split_dataset: train_count too large");
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);

  const auto take = [&](std::size_t begin, std::size_t end) {
    ConceptDataset out;
    out.concept_names = ds.concept_names;
    out.feature_shape = ds.feature_shape;
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t i = idx[k];
      out.instances.push_back(ds.instances[i]);
      out.labels.push_back(ds.labels[i]);
      out.ids.push_back(ds.ids[i]);
    }
    return out;
  };
  return {take(0, train_count), take(train_count, ds.size())};
}

std::string dataset_csv(const ConceptDataset& ds) {
  std::string out;
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    if (j > 0) out.push_back(',');
    out += "f" + std::to_string(j);
  }
  for (const auto& name : ds.concept_names) {
    out.push_back(',');
    out += name;
  }
  out.push_back('\n');
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      if (j > 0) out.push_back(',');
      out += io::format_double(ds.instances[i][j]);
    }
    for (int lab : ds.labels[i]) {
      out.push_back(',');
      out += std::to_string(lab);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace polyattack
