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
#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "clique_engine.hpp"
#include "common.hpp"
#include "cost_model.hpp"
#include "feature_schema.hpp"
#include "forest.hpp"
#include "hyperrectangle.hpp"

namespace recourse {

// Smallest number of trees whose agreement forces a strict majority.
inline std::size_t qualifying_clique_size(std::size_t k) { return k / 2 + 1; }

// Optional per-leaf ordering key for build_graph; lower sorts first within a
// tree.
using LeafRank = std::function<double(const Hyperrectangle&)>;

// Nodes are the target-class leaves of every tree (regions clipped to the
// schema bounds), grouped by tree. Two leaves of different trees are adjacent
// iff their regions intersect and the intersection is consistent.
inline LeafGraph build_graph(const Forest& forest, int target,
                             const LeafRank& rank = {}) {
  const FeatureSchema& schema = forest.schema();
  const Hyperrectangle bounds = schema.bounding_box();
  std::vector<GraphNode> nodes;
  std::size_t trees_with_target = 0;
  for (const auto& tree : forest.trees()) {
    std::vector<std::pair<double, GraphNode>> leaves;
    for (auto& leaf : leaf_regions(tree, schema.dimension())) {
      if (leaf.label != target) continue;
      GraphNode n{tree.index, leaf.node_id, leaf.region.intersect(bounds)};
      const double key = rank ? rank(n.region) : 0.0;
      leaves.emplace_back(key, std::move(n));
    }
    if (!leaves.empty()) ++trees_with_target;
    std::stable_sort(leaves.begin(), leaves.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [key, n] : leaves) nodes.push_back(std::move(n));
  }
  LeafGraph g(std::move(nodes));
  for (std::size_t a = 0; a < g.size(); ++a) {
    for (std::size_t b = a + 1; b < g.size(); ++b) {
      const auto& na = g.node(a);
      const auto& nb = g.node(b);
      if (na.tree == nb.tree) continue;
      if (!na.region.overlaps(nb.region)) continue;
      if (!check_consistency(na.region.intersect(nb.region), schema)) continue;
      g.add_edge(a, b);
    }
  }
  g.trivially_infeasible =
      trees_with_target < qualifying_clique_size(forest.size());
  return g;
}

// Componentwise intersection of the members' regions.
inline Hyperrectangle clique_region(const LeafGraph& g,
                                    std::span<const std::size_t> clique) {
  Hyperrectangle h = g.node(clique.front()).region;
  for (std::size_t i = 1; i < clique.size(); ++i) {
    h.intersect_in_place(g.node(clique[i]).region);
  }
  return h;
}

// Cheapest point of a region for a user at `v`, built one attribute at a
// time (costs are separable). `feasible` is false when the region is empty,
// inconsistent, or has no representable point.
struct RegionOptimum {
  bool feasible = false;
  FeatureVector point;
  std::vector<double> attribute_costs;
  double cost = kInf;
};

inline RegionOptimum optimize_region(const Hyperrectangle& region,
                                     const FeatureVector& v,
                                     const CostModel& model) {
  const FeatureSchema& schema = model.schema();
  RegionOptimum out;
  out.point = v;
  out.attribute_costs.assign(schema.attributes().size(), 0.0);
  if (region.empty()) return out;
  const auto& attrs = schema.attributes();
  const auto& groups = schema.groups();
  std::size_t group = 0;
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    const Attribute& attr = attrs[a];
    if (attr.is_numeric()) {
      PointCost pc;
      try {
        pc = min_cost_in_interval(v[attr.offset], region[attr.offset],
                                  model.feature(a), attr.granularity);
      } catch (const InfeasibleIntervalError&) {
        return out;
      }
      out.point[attr.offset] = pc.value;
      out.attribute_costs[a] = pc.cost;
    } else {
      const auto admissible = admissible_categories(region, groups[group++]);
      if (admissible.empty()) return out;
      const std::size_t current = schema.category_of(v, attr);
      const CategoryCost cc = min_cost_in_group(current, admissible, model.group(a));
      for (std::size_t c = 0; c < attr.width(); ++c) {
        out.point[attr.offset + c] = c == cc.category ? 1.0 : 0.0;
      }
      out.attribute_costs[a] = cc.cost;
    }
  }
  out.feasible = true;
  out.cost = 0.0;
  for (double c : out.attribute_costs) out.cost += c;
  return out;
}

struct WitnessMember {
  int tree = 0;
  int leaf = 0;
};

struct RecourseRegion {
  std::vector<WitnessMember> clique;
  Hyperrectangle region;
  bool consistent = true;
};

struct Change {
  std::size_t attribute = 0;
  std::string name;
  RawValue from;
  RawValue to;
  double cost = 0.0;
};

struct RecoursePlan {
  FeatureVector target;
  std::vector<Change> changes;
  double total_cost = 0.0;
  RecourseRegion witness;
  bool verified = false;
};

struct RecourseQuery {
  FeatureVector v;
  int target_class = 1;
  std::size_t max_results = 5;
  EnumerationBudget budget;
};

enum class RecourseStatus {
  kOk,
  kTriviallyInfeasible,       // fewer than t trees have target leaves
  kBlockedByImmutable,        // every consistent region costs +inf
  kNoConsistentRegion,        // no clique survives consistency filtering
  kBudgetExhausted,           // budget tripped before any plan was found
};

inline const char* status_string(RecourseStatus s) {
  switch (s) {
    case RecourseStatus::kOk:
      return "ok";
    case RecourseStatus::kTriviallyInfeasible:
      return "trivially infeasible: too few trees have leaves of the target class";
    case RecourseStatus::kBlockedByImmutable:
      return "blocked by immutable constraints";
    case RecourseStatus::kNoConsistentRegion:
      return "no consistent region";
    case RecourseStatus::kBudgetExhausted:
      return "budget exhausted before any plan was found";
  }
  return "unknown";
}

struct RecourseStats {
  std::size_t graph_nodes = 0;
  std::size_t graph_edges = 0;
  std::size_t clique_size = 0;
  std::size_t cliques_emitted = 0;
  std::size_t search_steps = 0;
  std::size_t pruned_inconsistent = 0;
  std::size_t pruned_infinite = 0;
  std::size_t pruned_bound = 0;
};

struct RecourseResult {
  std::vector<RecoursePlan> plans;
  bool exhausted = true;
  bool hit_clique_cap = false;
  bool hit_wall_time = false;
  RecourseStatus status = RecourseStatus::kOk;
  RecourseStats stats;
};

namespace detail {

inline bool plan_less(const RecoursePlan& a, const RecoursePlan& b) {
  if (a.total_cost != b.total_cost) return a.total_cost < b.total_cost;
  if (a.changes.size() != b.changes.size()) {
    return a.changes.size() < b.changes.size();
  }
  return a.target < b.target;
}

inline RecoursePlan make_plan(const FeatureVector& v, const RegionOptimum& opt,
                              const CostModel& model) {
  const FeatureSchema& schema = model.schema();
  RecoursePlan plan;
  plan.target = opt.point;
  for (std::size_t a = 0; a < schema.attributes().size(); ++a) {
    const Attribute& attr = schema.attributes()[a];
    Change c{a, attr.name, {}, {}, opt.attribute_costs[a]};
    if (attr.is_numeric()) {
      if (v[attr.offset] == opt.point[attr.offset]) continue;
      c.from = v[attr.offset];
      c.to = opt.point[attr.offset];
    } else {
      const std::size_t from = schema.category_of(v, attr);
      const std::size_t to = schema.category_of(opt.point, attr);
      if (from == to) continue;
      c.from = attr.categories[from];
      c.to = attr.categories[to];
    }
    plan.changes.push_back(std::move(c));
  }
  plan.total_cost = 0.0;
  for (const auto& c : plan.changes) plan.total_cost += c.cost;
  return plan;
}

// Bounded list of the best distinct plans seen, ordered by plan_less. `seq`
// records the emission index that produced each plan.
class PlanPool {
 public:
  explicit PlanPool(std::size_t capacity) : capacity_(capacity) {}

  // Once the pool is full, plans costing more than this cannot enter it.
  double bound() const {
    return plans_.size() < capacity_ ? kInf : plans_.back().first.total_cost;
  }

  void offer(RecoursePlan plan, std::size_t seq) {
    for (const auto& [p, s] : plans_) {
      if (p.target == plan.target) return;
    }
    auto pos = std::upper_bound(
        plans_.begin(), plans_.end(), plan,
        [](const RecoursePlan& x, const auto& e) { return plan_less(x, e.first); });
    if (plans_.size() >= capacity_ && pos == plans_.end()) return;
    plans_.insert(pos, {std::move(plan), seq});
    if (plans_.size() > capacity_) plans_.pop_back();
  }

  std::vector<std::pair<RecoursePlan, std::size_t>>& entries() { return plans_; }

 private:
  std::size_t capacity_;
  std::vector<std::pair<RecoursePlan, std::size_t>> plans_;
};

struct SearchShared {
  const Forest& forest;
  const CostModel& model;
  const LeafGraph& graph;
  const FeatureVector& v;
  int target = 1;
  Hyperrectangle root;
};

// Branch state for the cost-bounded clique search: the running region
// intersection and its optimum per depth. Extensions whose optimum is
// inconsistent, infinite, or above the bound are pruned. Adding members only
// shrinks the region and never lowers its optimal cost, so pruning never
// discards a plan that would rank among the results.
class RecourseBranch {
 public:
  RecourseBranch(const SearchShared* shared, double bound, std::size_t capacity)
      : shared_(shared), bound_(bound), pool_(capacity) {}

  bool push(std::size_t node) {
    const Hyperrectangle& base = regions_.empty() ? shared_->root : regions_.back();
    Hyperrectangle region = base.intersect(shared_->graph.node(node).region);
    if (region.empty() ||
        !check_consistency(region, shared_->forest.schema())) {
      ++pruned_inconsistent;
      return false;
    }
    RegionOptimum opt = optimize_region(region, shared_->v, shared_->model);
    if (!opt.feasible) {
      ++pruned_inconsistent;
      return false;
    }
    if (opt.cost == kInf) {
      ++pruned_infinite;
      return false;
    }
    if (opt.cost > std::min(bound_, pool_.bound())) {
      ++pruned_bound;
      return false;
    }
    regions_.push_back(std::move(region));
    optima_.push_back(std::move(opt));
    members_.push_back(node);
    return true;
  }

  void pop() {
    regions_.pop_back();
    optima_.pop_back();
    members_.pop_back();
  }

  void emit(std::span<const std::size_t>) {
    const std::size_t seq = emitted_++;
    RecoursePlan plan = make_plan(shared_->v, optima_.back(), shared_->model);
    plan.witness.region = regions_.back();
    plan.witness.consistent = true;
    for (std::size_t id : members_) {
      const auto& n = shared_->graph.node(id);
      plan.witness.clique.push_back({n.tree, n.leaf});
    }
    std::sort(plan.witness.clique.begin(), plan.witness.clique.end(),
              [](const auto& a, const auto& b) { return a.tree < b.tree; });
    pool_.offer(std::move(plan), seq);
  }

  PlanPool& pool() { return pool_; }

  std::size_t pruned_inconsistent = 0;
  std::size_t pruned_infinite = 0;
  std::size_t pruned_bound = 0;

 private:
  const SearchShared* shared_;
  double bound_;
  PlanPool pool_;
  std::vector<Hyperrectangle> regions_;
  std::vector<RegionOptimum> optima_;
  std::vector<std::size_t> members_;
  std::size_t emitted_ = 0;
};

}  // namespace detail

// Minimum-cost feature changes that make the forest vote `target_class`.
//
// Enumerates cliques of floor(k/2)+1 target-class leaves from distinct trees,
// minimises the cost over each clique's region intersection, and returns the
// best distinct plans ranked by total cost, then number of changes, then
// lexicographic target vector. Every plan is re-verified against the forest.
// When the forest already votes target_class for v, the only plan is v itself.
inline RecourseResult find_recourse(const RecourseQuery& query,
                                    const Forest& forest,
                                    const CostModel& model,
                                    const SearchOptions& options = {}) {
  const FeatureSchema& schema = forest.schema();
  if (model.schema().hash() != schema.hash()) {
    throw InputError("cost model and forest use different schemas");
  }
  if (query.max_results < 1) throw InputError("max_results must be at least 1");
  if (query.target_class != 0 && query.target_class != 1) {
    throw InputError("target class must be 0 or 1");
  }
  schema.validate(query.v);
  query.budget.validate();

  RecourseResult result;
  const std::size_t t = qualifying_clique_size(forest.size());
  const LeafGraph graph =
      build_graph(forest, query.target_class, [&](const Hyperrectangle& r) {
        const RegionOptimum opt = optimize_region(r, query.v, model);
        return opt.feasible ? opt.cost : kInf;
      });
  result.stats.graph_nodes = graph.size();
  result.stats.graph_edges = graph.edge_count();
  result.stats.clique_size = t;
  if (graph.trivially_infeasible) {
    result.status = RecourseStatus::kTriviallyInfeasible;
    return result;
  }
  if (forest.predict(query.v).label == query.target_class) {
    RecoursePlan plan;
    plan.target = query.v;
    plan.witness.region = Hyperrectangle(schema.dimension());
    for (const auto& tree : forest.trees()) {
      if (plan.witness.clique.size() == t) break;
      const int leaf = tree.route(query.v.span());
      if (tree.nodes[leaf].label != query.target_class) continue;
      plan.witness.clique.push_back({tree.index, leaf});
      for (const auto& lr : leaf_regions(tree, schema.dimension())) {
        if (lr.node_id == leaf) plan.witness.region.intersect_in_place(lr.region);
      }
    }
    plan.verified = true;
    result.plans.push_back(std::move(plan));
    return result;
  }

  const detail::SearchShared shared{forest, model, graph, query.v,
                                    query.target_class, schema.bounding_box()};
  struct Factory {
    const detail::SearchShared* shared;
    std::size_t capacity;
    detail::PlanPool global;
    RecourseStats* stats;

    detail::RecourseBranch open(std::size_t) {
      return detail::RecourseBranch(shared, global.bound(), capacity);
    }
    void close(detail::RecourseBranch& b, std::size_t accepted) {
      stats->pruned_inconsistent += b.pruned_inconsistent;
      stats->pruned_infinite += b.pruned_infinite;
      stats->pruned_bound += b.pruned_bound;
      auto& entries = b.pool().entries();
      std::stable_sort(entries.begin(), entries.end(),
                       [](const auto& x, const auto& y) { return x.second < y.second; });
      for (auto& [plan, seq] : entries) {
        if (seq < accepted) global.offer(std::move(plan), seq);
      }
    }
  } factory{&shared, query.max_results, detail::PlanPool(query.max_results),
            &result.stats};

  const EnumerationResult er =
      search_cliques(graph, t, query.budget, options, factory);
  result.exhausted = er.exhausted;
  result.hit_clique_cap = er.hit_clique_cap;
  result.hit_wall_time = er.hit_wall_time;
  result.stats.cliques_emitted = er.emitted;
  result.stats.search_steps = er.steps;

  for (auto& [plan, seq] : factory.global.entries()) {
    const Prediction p = forest.predict(plan.target);
    if (p.label != query.target_class) {
      throw InvariantViolation("recourse plan does not flip the prediction");
    }
    const double check = total_cost(query.v, plan.target, model);
    if (check != plan.total_cost) {
      throw InvariantViolation("plan cost disagrees with total_cost");
    }
    plan.verified = true;
    result.plans.push_back(std::move(plan));
  }
  if (result.plans.empty()) {
    if (!result.exhausted) {
      result.status = RecourseStatus::kBudgetExhausted;
    } else if (result.stats.pruned_infinite > 0) {
      result.status = RecourseStatus::kBlockedByImmutable;
    } else {
      result.status = RecourseStatus::kNoConsistentRegion;
    }
  }
  return result;
}

// --- presentation -----------------------------------------------------------

inline std::string format_number(double x) {
  if (x == kInf) return "inf";
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

inline std::string display_value(const RawValue& value, const Attribute& attr) {
  if (const double* x = std::get_if<double>(&value)) return format_number(*x);
  const auto& code = std::get<std::string>(value);
  for (std::size_t c = 0; c < attr.categories.size(); ++c) {
    if (attr.categories[c] == code && c < attr.labels.size()) {
      return "'" + attr.labels[c] + "' (" + code + ")";
    }
  }
  return "'" + code + "'";
}

// One "change X from a to b (cost c)" line per change, costliest first.
inline std::vector<std::string> explain_plan(const RecoursePlan& plan,
                                             const FeatureSchema& schema) {
  if (plan.changes.empty()) return {"no changes needed"};
  std::vector<const Change*> order;
  for (const auto& c : plan.changes) order.push_back(&c);
  std::stable_sort(order.begin(), order.end(),
                   [](const Change* a, const Change* b) { return a->cost > b->cost; });
  std::vector<std::string> lines;
  for (const Change* c : order) {
    const Attribute& attr = schema.attributes()[c->attribute];
    lines.push_back("change " + c->name + " from " + display_value(c->from, attr) +
                    " to " + display_value(c->to, attr) + " (cost " +
                    format_number(c->cost) + ")");
  }
  return lines;
}

inline json to_json(const RecoursePlan& plan, const FeatureSchema& schema) {
  json changes = json::array();
  for (const auto& c : plan.changes) {
    changes.push_back({{"attribute", c.name},
                       {"from", to_json(c.from)},
                       {"to", to_json(c.to)},
                       {"cost", real_to_json(c.cost)}});
  }
  json clique = json::array();
  for (const auto& m : plan.witness.clique) {
    clique.push_back({{"tree", m.tree}, {"leaf", m.leaf}});
  }
  return {{"record", to_json(schema.decode(plan.target), schema)},
          {"changes", std::move(changes)},
          {"total_cost", real_to_json(plan.total_cost)},
          {"verified", plan.verified},
          {"witness", {{"clique", std::move(clique)},
                       {"region", to_json(plan.witness.region)}}}};
}

inline json to_json(const RecourseResult& r, const FeatureSchema& schema) {
  json plans = json::array();
  for (const auto& p : r.plans) plans.push_back(to_json(p, schema));
  return {{"plans", std::move(plans)},
          {"exhausted", r.exhausted},
          {"possibly_suboptimal", !r.exhausted},
          {"status", status_string(r.status)},
          {"stats",
           {{"graph_nodes", r.stats.graph_nodes},
            {"graph_edges", r.stats.graph_edges},
            {"clique_size", r.stats.clique_size},
            {"cliques_emitted", r.stats.cliques_emitted},
            {"search_steps", r.stats.search_steps}}}};
}

}  // namespace recourse
