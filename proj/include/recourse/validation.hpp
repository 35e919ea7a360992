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

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "common.hpp"
#include "cost_model.hpp"
#include "feature_schema.hpp"
#include "forest.hpp"
#include "oracle.hpp"
#include "recourse.hpp"

namespace recourse {

// Small random problem for the engine/oracle cross-check: k in {3, 5}
// random trees of depth <= 3 over <= 3 integer features, integer thresholds
// in [0, 10], granularity 1, asymmetric linear costs with dyadic weights.
struct SmallInstance {
  Forest forest;
  CostModel costs;
  FeatureVector v;
  int target = 1;
};

namespace detail {

inline int random_subtree(Tree& tree, Rng& rng, std::size_t dim, int depth) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(Node::leaf(static_cast<int>(uniform_index(rng, 2))));
  if (depth == 0 || uniform_index(rng, 4) == 0) return id;
  const int feature = static_cast<int>(uniform_index(rng, dim));
  const double threshold = static_cast<double>(uniform_index(rng, 11));
  const int l = random_subtree(tree, rng, dim, depth - 1);
  const int r = random_subtree(tree, rng, dim, depth - 1);
  tree.nodes[id] = Node::split(feature, threshold, l, r);
  return id;
}

}  // namespace detail

inline SmallInstance random_small_instance(Rng& rng) {
  const std::size_t dim = 1 + uniform_index(rng, 3);
  std::vector<Attribute> attrs;
  for (std::size_t i = 0; i < dim; ++i) {
    Attribute a;
    a.name = "x" + std::to_string(i);
    a.granularity = 1.0;
    a.integer = true;
    attrs.push_back(std::move(a));
  }
  auto schema = std::make_shared<const FeatureSchema>(std::move(attrs), "small");
  const int k = uniform_index(rng, 2) == 0 ? 3 : 5;
  std::vector<Tree> trees;
  for (int j = 0; j < k; ++j) {
    Tree tree;
    tree.index = j;
    detail::random_subtree(tree, rng, dim, 3);
    trees.push_back(std::move(tree));
  }
  Forest forest(schema, std::move(trees));
  static constexpr double kWeights[] = {0.5, 1.0, 1.5, 2.0, 3.0};
  std::vector<CostModel::AttributeCost> costs;
  for (std::size_t i = 0; i < dim; ++i) {
    costs.emplace_back(FeatureCost{LinearAsymmetric{
        kWeights[uniform_index(rng, 5)], kWeights[uniform_index(rng, 5)]}});
  }
  CostModel model(schema, std::move(costs));
  FeatureVector v{std::vector<double>(dim)};
  for (auto& x : v.values) x = static_cast<double>(uniform_index(rng, 13)) - 1.0;
  const int target = 1 - forest.predict(v).label;
  return {std::move(forest), std::move(model), std::move(v), target};
}

struct ValidationOutcome {
  bool engine_feasible = false;
  bool oracle_feasible = false;
  double engine_cost = kInf;
  double oracle_cost = kInf;
  bool match() const {
    return engine_feasible == oracle_feasible &&
           (!engine_feasible || engine_cost == oracle_cost);
  }
};

inline ValidationOutcome compare_with_oracle(const SmallInstance& inst,
                                             const OracleResult& oracle,
                                             const SearchOptions& options = {}) {
  ValidationOutcome out;
  RecourseQuery q{inst.v, inst.target, 1, EnumerationBudget::unlimited()};
  const RecourseResult r = find_recourse(q, inst.forest, inst.costs, options);
  if (!r.plans.empty()) {
    out.engine_feasible = true;
    out.engine_cost = r.plans.front().total_cost;
  }
  out.oracle_feasible = oracle.feasible;
  out.oracle_cost = oracle.min_cost;
  return out;
}

inline OracleResult oracle_for(const SmallInstance& inst) {
  return oracle_min_cost(inst.forest, inst.v, inst.costs, inst.target,
                         make_grid(inst.forest, inst.v));
}

// Runs `count` random instances drawn from `seed`. Instances the oracle finds
// infeasible are redrawn, so every comparison is between two finite minima.
inline std::vector<ValidationOutcome> run_validation(std::uint64_t seed,
                                                     std::size_t count,
                                                     const SearchOptions& options = {}) {
  Rng rng(seed);
  std::vector<ValidationOutcome> out;
  while (out.size() < count) {
    const SmallInstance inst = random_small_instance(rng);
    const OracleResult oracle = oracle_for(inst);
    if (!oracle.feasible) continue;
    out.push_back(compare_with_oracle(inst, oracle, options));
  }
  return out;
}

}  // namespace recourse
