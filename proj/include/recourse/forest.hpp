/*
 * Copyright 2026 The forest-recourse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "feature_schema.hpp"
#include "hyperrectangle.hpp"

namespace recourse {

// Flat tree node. Internal nodes route value <= threshold to `left` and
// value > threshold to `right`; leaves carry a class label.
struct Node {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;

  bool is_leaf() const { return feature < 0; }
  static Node leaf(int label) { return Node{-1, 0.0, -1, -1, label}; }
  static Node split(int feature, double threshold, int left, int right) {
    return Node{feature, threshold, left, right, 0};
  }
};

struct LeafRegion {
  int node_id = 0;
  Hyperrectangle region;
  int label = 0;
};

// Node 0 is the root; node ids are indices into `nodes`.
struct Tree {
  int index = 0;
  std::vector<Node> nodes;

  int route(std::span<const double> v) const {
    int n = 0;
    while (!nodes[n].is_leaf()) {
      const Node& node = nodes[n];
      n = v[node.feature] <= node.threshold ? node.left : node.right;
    }
    return n;
  }
  int classify(std::span<const double> v) const {
    return nodes[route(v)].label;
  }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(
        nodes.begin(), nodes.end(), [](const Node& n) { return n.is_leaf(); }));
  }
  int depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].is_leaf()) continue;
      d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
      best = std::max(best, d[i] + 1);
    }
    return best;
  }
};

// One region per leaf, in node-id order: the conjunction of the path's
// threshold constraints.
inline std::vector<LeafRegion> leaf_regions(const Tree& tree,
                                            std::size_t dimension) {
  std::vector<LeafRegion> out;
  std::vector<std::pair<int, Hyperrectangle>> stack;
  stack.emplace_back(0, Hyperrectangle(dimension));
  while (!stack.empty()) {
    auto [id, box] = std::move(stack.back());
    stack.pop_back();
    const Node& node = tree.nodes[id];
    if (node.is_leaf()) {
      out.push_back({id, std::move(box), node.label});
      continue;
    }
    Hyperrectangle left = box;
    left[node.feature].hi = std::min(left[node.feature].hi, node.threshold);
    box[node.feature].lo = std::max(box[node.feature].lo, node.threshold);
    stack.emplace_back(node.right, std::move(box));
    stack.emplace_back(node.left, std::move(left));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.node_id < b.node_id; });
  return out;
}

struct ForestParams {
  int trees = 10;
  int max_depth = 12;
  int min_leaf_size = 5;
  int features_per_split = 0;  // 0: ceil(sqrt(dimension))
  std::uint64_t seed = 42;
  std::size_t threads = 1;
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  int max_depth = 0;
  int min_leaf_size = 0;
  int features_per_split = 0;
  std::size_t samples = 0;
  bool single_class = false;
};

struct Prediction {
  int label = 0;
  std::array<int, 2> votes{0, 0};
};

// Labeled, encoded rows sharing one schema.
struct Dataset {
  std::shared_ptr<const FeatureSchema> schema;
  std::vector<FeatureVector> rows;
  std::vector<int> labels;

  std::size_t size() const { return rows.size(); }
};

class Forest {
 public:
  Forest() = default;
  Forest(std::shared_ptr<const FeatureSchema> schema, std::vector<Tree> trees,
         TrainingMetadata meta = {})
      : schema_(std::move(schema)), trees_(std::move(trees)), meta_(meta) {
    if (trees_.empty()) throw InputError("forest needs at least one tree");
  }

  const FeatureSchema& schema() const { return *schema_; }
  const std::shared_ptr<const FeatureSchema>& schema_ptr() const {
    return schema_;
  }
  const std::vector<Tree>& trees() const { return trees_; }
  std::size_t size() const { return trees_.size(); }
  const TrainingMetadata& metadata() const { return meta_; }

  // Majority vote; ties go to class 0.
  Prediction predict(const FeatureVector& v) const {
    if (v.size() != schema_->dimension()) {
      throw InputError("vector dimension " + std::to_string(v.size()) +
                       " does not match forest dimension " +
                       std::to_string(schema_->dimension()));
    }
    Prediction p;
    for (const auto& tree : trees_) ++p.votes[tree.classify(v.span())];
    p.label = p.votes[1] > p.votes[0] ? 1 : 0;
    return p;
  }

 private:
  std::shared_ptr<const FeatureSchema> schema_;
  std::vector<Tree> trees_;
  TrainingMetadata meta_;
};

// --- training ---------------------------------------------------------------

namespace detail {

struct TreeBuilder {
  const Dataset& data;
  const ForestParams& params;
  int features_per_split;
  Rng rng;
  Tree tree;
  std::vector<std::size_t> feature_pool;

  static int majority(const std::array<std::size_t, 2>& counts) {
    return counts[1] > counts[0] ? 1 : 0;
  }

  static double gini(std::size_t n0, std::size_t n1) {
    const double n = static_cast<double>(n0 + n1);
    if (n == 0) return 0.0;
    const double p0 = n0 / n, p1 = n1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = kInf;
  };

  // Best Gini split on the sampled features. Thresholds are the lower of
  // two adjacent distinct values, so integer data gets integer thresholds.
  Split best_split(std::vector<std::size_t>& idx,
                   const std::array<std::size_t, 2>& counts) {
    const std::size_t n = idx.size();
    const std::size_t dim = feature_pool.size();
    const std::size_t draw =
        std::min<std::size_t>(features_per_split, dim);
    for (std::size_t i = 0; i < draw; ++i) {
      std::swap(feature_pool[i], feature_pool[i + uniform_index(rng, dim - i)]);
    }
    Split best;
    const double parent = gini(counts[0], counts[1]);
    std::vector<std::pair<double, int>> column(n);
    for (std::size_t f = 0; f < draw; ++f) {
      const std::size_t feature = feature_pool[f];
      for (std::size_t i = 0; i < n; ++i) {
        column[i] = {data.rows[idx[i]][feature], data.labels[idx[i]]};
      }
      std::sort(column.begin(), column.end());
      std::array<std::size_t, 2> left{0, 0};
      const std::size_t min_leaf = params.min_leaf_size;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        ++left[column[i].second];
        if (column[i].first == column[i + 1].first) continue;
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double imp =
            (nl * gini(left[0], left[1]) +
             nr * gini(counts[0] - left[0], counts[1] - left[1])) /
            static_cast<double>(n);
        if (imp < best.impurity) {
          best = {static_cast<int>(feature), column[i].first, imp};
        }
      }
    }
    if (!(best.impurity < parent)) best.feature = -1;
    return best;
  }

  int grow(std::vector<std::size_t> idx, int depth) {
    std::array<std::size_t, 2> counts{0, 0};
    for (std::size_t i : idx) ++counts[data.labels[i]];
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(Node::leaf(majority(counts)));
    const bool pure = counts[0] == 0 || counts[1] == 0;
    if (pure || depth >= params.max_depth ||
        idx.size() < 2 * static_cast<std::size_t>(params.min_leaf_size)) {
      return id;
    }
    const Split s = best_split(idx, counts);
    if (s.feature < 0) return id;
    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (data.rows[i][s.feature] <= s.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    tree.nodes[id] = Node::split(s.feature, s.threshold, l, r);
    return id;
  }
};

inline std::uint64_t tree_seed(std::uint64_t master, std::size_t j) {
  return splitmix64(master ^ splitmix64(j + 1));
}

}  // namespace detail

// Bagged Gini trees with per-split feature sampling; deterministic given
// params.seed, independent of params.threads.
inline Forest train(const Dataset& data, const ForestParams& params) {
  if (data.size() == 0) throw InputError("cannot train on an empty dataset");
  if (data.rows.size() != data.labels.size()) {
    throw InputError("rows and labels differ in length");
  }
  if (params.trees < 1 || params.max_depth < 0 || params.min_leaf_size < 1 ||
      params.features_per_split < 0) {
    throw InputError("forest parameters must be positive");
  }
  const std::size_t dim = data.schema->dimension();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.rows[i].size() != dim) {
      throw InputError("row " + std::to_string(i) + ": dimension mismatch");
    }
    if (data.labels[i] != 0 && data.labels[i] != 1) {
      throw InputError("row " + std::to_string(i) + ": label must be 0 or 1");
    }
  }
  const int fps = params.features_per_split > 0
                      ? params.features_per_split
                      : static_cast<int>(std::ceil(std::sqrt(double(dim))));
  const bool single_class =
      std::all_of(data.labels.begin(), data.labels.end(),
                  [&](int y) { return y == data.labels.front(); });

  std::vector<Tree> trees(params.trees);
  parallel_for(trees.size(), params.threads, [&](std::size_t j) {
    detail::TreeBuilder b{data, params, fps,
                          Rng(detail::tree_seed(params.seed, j)), {}, {}};
    b.feature_pool.resize(dim);
    std::iota(b.feature_pool.begin(), b.feature_pool.end(), 0);
    std::vector<std::size_t> sample(data.size());
    for (auto& s : sample) s = uniform_index(b.rng, data.size());
    b.grow(std::move(sample), 0);
    b.tree.index = static_cast<int>(j);
    trees[j] = std::move(b.tree);
  });
  TrainingMetadata meta{params.seed, params.max_depth, params.min_leaf_size,
                        fps, data.size(), single_class};
  return Forest(data.schema, std::move(trees), meta);
}

inline double accuracy(const Forest& forest, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    hits += forest.predict(data.rows[i]).label == data.labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

struct CrossValidation {
  std::vector<double> fold_accuracy;
  double mean() const {
    if (fold_accuracy.empty()) return 0.0;
    return std::accumulate(fold_accuracy.begin(), fold_accuracy.end(), 0.0) /
           static_cast<double>(fold_accuracy.size());
  }
};

// Shuffled (seeded) k-fold split; fold f trains with seed params.seed + f.
inline CrossValidation cross_validate(const Dataset& data,
                                      const ForestParams& params, int folds) {
  if (folds < 2 || static_cast<std::size_t>(folds) > data.size()) {
    throw InputError("fold count must be in [2, dataset size]");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(params.seed);
  shuffle_in_place(order, rng);
  CrossValidation cv;
  for (int f = 0; f < folds; ++f) {
    Dataset train_set{data.schema, {}, {}}, test_set{data.schema, {}, {}};
    for (std::size_t p = 0; p < order.size(); ++p) {
      Dataset& dst = static_cast<int>(p % folds) == f ? test_set : train_set;
      dst.rows.push_back(data.rows[order[p]]);
      dst.labels.push_back(data.labels[order[p]]);
    }
    ForestParams fp = params;
    fp.seed = params.seed + static_cast<std::uint64_t>(f);
    cv.fold_accuracy.push_back(accuracy(train(train_set, fp), test_set));
  }
  return cv;
}

// --- documents --------------------------------------------------------------

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline json to_json(const Forest& forest) {
  json trees = json::array();
  for (const auto& tree : forest.trees()) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      if (n.is_leaf()) {
        nodes.push_back({{"leaf", n.label}});
      } else {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right}});
      }
    }
    trees.push_back({{"index", tree.index}, {"nodes", std::move(nodes)}});
  }
  const auto& m = forest.metadata();
  return {{"schema_hash", hash_hex(forest.schema().hash())},
          {"k", forest.size()},
          {"metadata",
           {{"seed", m.seed},
            {"max_depth", m.max_depth},
            {"min_leaf_size", m.min_leaf_size},
            {"features_per_split", m.features_per_split},
            {"samples", m.samples},
            {"single_class", m.single_class}}},
          {"schema", to_json(forest.schema())},
          {"trees", std::move(trees)}};
}

// Parses a forest document. The schema comes from `schema` when given
// (its hash must match), otherwise from the embedded "schema" member.
inline Forest forest_from_json(
    const json& doc, std::shared_ptr<const FeatureSchema> schema = nullptr) {
  auto fail = [](const std::string& path, const std::string& what) {
    throw ParseError("forest: " + path + ": " + what);
  };
  if (!doc.is_object()) fail("$", "expected an object");
  for (const char* key : {"schema_hash", "k", "trees"}) {
    if (!doc.contains(key)) fail(key, "missing");
  }
  if (!schema) {
    if (!doc.contains("schema")) fail("schema", "missing");
    schema = std::make_shared<FeatureSchema>(schema_from_json(doc["schema"]));
  }
  if (!doc["schema_hash"].is_string() ||
      doc["schema_hash"].get<std::string>() != hash_hex(schema->hash())) {
    fail("schema_hash", "does not match the schema");
  }
  const json& list = doc["trees"];
  if (!list.is_array()) fail("trees", "expected an array");
  if (!doc["k"].is_number_unsigned() ||
      doc["k"].get<std::size_t>() != list.size()) {
    fail("k", "does not match the number of trees");
  }
  const int dim = static_cast<int>(schema->dimension());
  std::vector<Tree> trees;
  for (std::size_t t = 0; t < list.size(); ++t) {
    const std::string tp = "trees[" + std::to_string(t) + "]";
    const json& jt = list[t];
    if (!jt.is_object() || !jt.contains("nodes") || !jt["nodes"].is_array()) {
      fail(tp, "expected {index, nodes}");
    }
    if (!jt.contains("index") || !jt["index"].is_number_integer() ||
        jt["index"].get<std::size_t>() != t) {
      fail(tp + ".index", "must equal the tree's position");
    }
    Tree tree;
    tree.index = static_cast<int>(t);
    const json& jn = jt["nodes"];
    if (jn.empty()) fail(tp + ".nodes", "empty");
    const int count = static_cast<int>(jn.size());
    std::vector<int> parents(count, 0);
    for (int i = 0; i < count; ++i) {
      const std::string np = tp + ".nodes[" + std::to_string(i) + "]";
      const json& j = jn[i];
      if (!j.is_object()) fail(np, "expected an object");
      if (j.contains("leaf")) {
        if (!j["leaf"].is_number_integer()) fail(np + ".leaf", "not a class");
        const int label = j["leaf"].get<int>();
        if (label != 0 && label != 1) fail(np + ".leaf", "class must be 0 or 1");
        tree.nodes.push_back(Node::leaf(label));
        continue;
      }
      for (const char* key : {"feature", "threshold", "left", "right"}) {
        if (!j.contains(key) || !j[key].is_number()) {
          fail(np + "." + key, "missing or not a number");
        }
      }
      const int feature = j["feature"].get<int>();
      const double threshold = j["threshold"].get<double>();
      const int left = j["left"].get<int>();
      const int right = j["right"].get<int>();
      if (feature < 0 || feature >= dim) fail(np + ".feature", "out of range");
      if (!std::isfinite(threshold)) fail(np + ".threshold", "not finite");
      for (auto [key, child] : {std::pair{".left", left}, {".right", right}}) {
        if (child <= i || child >= count) {
          fail(np + key, "child index must point forward within the tree");
        }
        ++parents[child];
      }
      tree.nodes.push_back(Node::split(feature, threshold, left, right));
    }
    for (int i = 1; i < count; ++i) {
      if (parents[i] != 1) {
        fail(tp + ".nodes[" + std::to_string(i) + "]",
             "must have exactly one parent");
      }
    }
    trees.push_back(std::move(tree));
  }
  TrainingMetadata meta;
  if (doc.contains("metadata") && doc["metadata"].is_object()) {
    const json& m = doc["metadata"];
    meta.seed = m.value("seed", std::uint64_t{0});
    meta.max_depth = m.value("max_depth", 0);
    meta.min_leaf_size = m.value("min_leaf_size", 0);
    meta.features_per_split = m.value("features_per_split", 0);
    meta.samples = m.value("samples", std::size_t{0});
    meta.single_class = m.value("single_class", false);
  }
  if (trees.empty()) fail("trees", "empty");
  return Forest(std::move(schema), std::move(trees), meta);
}

inline std::string serialize(const Forest& forest) {
  return to_json(forest).dump(1);
}

inline Forest deserialize(const std::string& text,
                          std::shared_ptr<const FeatureSchema> schema = nullptr) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("forest: ") + e.what());
  }
  return forest_from_json(doc, std::move(schema));
}

inline Forest load_forest(const std::string& path) {
  return forest_from_json(read_json_file(path));
}

}  // namespace recourse
