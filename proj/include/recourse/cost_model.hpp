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
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "common.hpp"
#include "feature_schema.hpp"
#include "hyperrectangle.hpp"

namespace recourse {

// cost = weight_up * (to - from) when increasing, weight_down * (from - to)
// when decreasing. Either weight may be +inf.
struct LinearAsymmetric {
  double weight_up = 1.0;
  double weight_down = 1.0;
};

struct Quadratic {
  double weight = 1.0;
};

struct Immutable {};

// Cost as a function of displacement (to - from), linearly interpolated
// between breakpoints and anchored at (0, 0). Past the outermost breakpoint
// of a side, that side's last segment slope continues; a side with no
// breakpoints cannot be moved along (+inf).
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  explicit PiecewiseLinear(std::vector<std::pair<double, double>> points) {
    std::sort(points.begin(), points.end());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto [d, c] = points[i];
      if (!std::isfinite(d) || !std::isfinite(c)) {
        throw InputError("piecewise cost: breakpoints must be finite");
      }
      if (d == 0.0) {
        if (c != 0.0) throw InputError("piecewise cost: cost at 0 must be 0");
        continue;
      }
      if (c < 0.0) throw InputError("piecewise cost: negative cost");
      if (i > 0 && points[i - 1].first == d) {
        throw InputError("piecewise cost: duplicate displacement");
      }
      (d > 0 ? up_ : down_).emplace_back(std::fabs(d), c);
    }
    std::reverse(down_.begin(), down_.end());
    for (const auto* side : {&up_, &down_}) {
      double prev = 0.0;
      for (const auto& [dist, c] : *side) {
        if (c < prev) {
          throw InputError(
              "piecewise cost: must not decrease moving away from 0");
        }
        prev = c;
      }
    }
  }

  double operator()(double displacement) const {
    if (displacement == 0.0) return 0.0;
    const auto& side = displacement > 0 ? up_ : down_;
    return eval_side(side, std::fabs(displacement));
  }

  // Displacements of all breakpoints, ascending.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (auto it = down_.rbegin(); it != down_.rend(); ++it) {
      out.push_back(-it->first);
    }
    for (const auto& p : up_) out.push_back(p.first);
    return out;
  }

  std::vector<std::pair<double, double>> points() const {
    std::vector<std::pair<double, double>> out;
    for (auto it = down_.rbegin(); it != down_.rend(); ++it) {
      out.emplace_back(-it->first, it->second);
    }
    for (const auto& p : up_) out.push_back(p);
    return out;
  }

 private:
  static double eval_side(const std::vector<std::pair<double, double>>& side,
                          double dist) {
    if (side.empty()) return kInf;
    double x0 = 0.0, c0 = 0.0;
    for (const auto& [x1, c1] : side) {
      if (dist <= x1) return c0 + (c1 - c0) * (dist - x0) / (x1 - x0);
      x0 = x1;
      c0 = c1;
    }
    // Extrapolate the outermost segment.
    const double xp = side.size() > 1 ? side[side.size() - 2].first : 0.0;
    const double cp = side.size() > 1 ? side[side.size() - 2].second : 0.0;
    return c0 + (c0 - cp) * (dist - x0) / (x0 - xp);
  }

  // (distance from anchor, cost), ascending distance.
  std::vector<std::pair<double, double>> up_;
  std::vector<std::pair<double, double>> down_;
};

using FeatureCost =
    std::variant<LinearAsymmetric, Quadratic, Immutable, PiecewiseLinear>;

inline double evaluate(const FeatureCost& fc, double from, double to) {
  if (from == to) return 0.0;
  return std::visit(
      [&](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, LinearAsymmetric>) {
          return to > from ? c.weight_up * (to - from)
                           : c.weight_down * (from - to);
        } else if constexpr (std::is_same_v<T, Quadratic>) {
          return c.weight * (to - from) * (to - from);
        } else if constexpr (std::is_same_v<T, Immutable>) {
          return kInf;
        } else {
          return c(to - from);
        }
      },
      fc);
}

inline void validate_feature_cost(const FeatureCost& fc,
                                  const std::string& name) {
  auto bad = [&](const char* what) {
    throw InputError("cost for '" + name + "': " + what);
  };
  if (const auto* l = std::get_if<LinearAsymmetric>(&fc)) {
    if (!(l->weight_up >= 0.0) || !(l->weight_down >= 0.0)) {
      bad("weights must be non-negative");
    }
  } else if (const auto* q = std::get_if<Quadratic>(&fc)) {
    if (!(q->weight >= 0.0)) bad("weight must be non-negative");
  }
}

// Category transition costs for one categorical attribute.
class GroupCost {
 public:
  GroupCost() = default;
  explicit GroupCost(std::vector<std::vector<double>> transition)
      : transition_(std::move(transition)) {
    const std::size_t m = transition_.size();
    for (std::size_t i = 0; i < m; ++i) {
      if (transition_[i].size() != m) {
        throw InputError("transition matrix must be square");
      }
      for (std::size_t j = 0; j < m; ++j) {
        const double c = transition_[i][j];
        if (i == j && c != 0.0) {
          throw InputError("transition matrix diagonal must be zero");
        }
        if (!(c >= 0.0)) {
          throw InputError("transition costs must be non-negative");
        }
      }
    }
  }

  static GroupCost uniform(std::size_t m, double cost) {
    std::vector<std::vector<double>> t(m, std::vector<double>(m, cost));
    for (std::size_t i = 0; i < m; ++i) t[i][i] = 0.0;
    return GroupCost(std::move(t));
  }
  static GroupCost immutable(std::size_t m) { return uniform(m, kInf); }

  std::size_t size() const { return transition_.size(); }
  double operator()(std::size_t from, std::size_t to) const {
    return transition_[from][to];
  }
  const std::vector<std::vector<double>>& matrix() const { return transition_; }

 private:
  std::vector<std::vector<double>> transition_;
};

struct PointCost {
  double value = 0.0;
  double cost = 0.0;
};

// Cheapest point of (lo, hi] for a feature currently at `current`. Outside the
// interval the candidate is the nearest feasible point: hi from above, or
// lo + granularity from below (the step halves up to 50 times when it
// overshoots hi). Piecewise costs also try every breakpoint inside.
inline PointCost min_cost_in_interval(double current, const Interval& interval,
                                      const FeatureCost& fc,
                                      double granularity) {
  if (interval.empty()) throw InfeasibleIntervalError("empty interval");
  if (interval.contains(current)) return {current, 0.0};
  double x;
  if (current > interval.hi) {
    x = interval.hi;
  } else {
    double step = granularity;
    x = interval.lo + step;
    for (int halvings = 0; x > interval.hi && halvings < 50; ++halvings) {
      step *= 0.5;
      x = interval.lo + step;
    }
    if (!interval.contains(x)) {
      throw InfeasibleIntervalError("no representable point in interval");
    }
  }
  PointCost best{x, evaluate(fc, current, x)};
  if (const auto* pw = std::get_if<PiecewiseLinear>(&fc)) {
    for (double d : pw->breakpoints()) {
      const double y = current + d;
      if (!interval.contains(y)) continue;
      const double c = evaluate(fc, current, y);
      if (c < best.cost) best = {y, c};
    }
  }
  return best;
}

struct CategoryCost {
  std::size_t category = 0;
  double cost = 0.0;
};

// Cheapest admissible category; the current one when admissible, otherwise
// the first in declaration order among equal costs.
inline CategoryCost min_cost_in_group(std::size_t current,
                                      std::span<const std::size_t> admissible,
                                      const GroupCost& gc) {
  if (admissible.empty()) throw InfeasibleIntervalError("no admissible category");
  std::vector<std::size_t> sorted(admissible.begin(), admissible.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::binary_search(sorted.begin(), sorted.end(), current)) {
    return {current, 0.0};
  }
  CategoryCost best{sorted.front(), gc(current, sorted.front())};
  for (std::size_t c : sorted) {
    const double cost = gc(current, c);
    if (cost < best.cost) best = {c, cost};
  }
  return best;
}

// Per-attribute costs, parallel to FeatureSchema::attributes(): numeric
// attributes hold a FeatureCost, categorical ones a GroupCost.
class CostModel {
 public:
  using AttributeCost = std::variant<FeatureCost, GroupCost>;

  CostModel() = default;
  CostModel(std::shared_ptr<const FeatureSchema> schema,
            std::vector<AttributeCost> costs)
      : schema_(std::move(schema)), costs_(std::move(costs)) {
    const auto& attrs = schema_->attributes();
    if (costs_.size() != attrs.size()) {
      throw InputError("cost model must cover every attribute exactly once");
    }
    for (std::size_t a = 0; a < attrs.size(); ++a) {
      if (attrs[a].is_numeric()) {
        const auto* fc = std::get_if<FeatureCost>(&costs_[a]);
        if (!fc) {
          throw InputError("numeric attribute '" + attrs[a].name +
                           "' needs a feature cost");
        }
        validate_feature_cost(*fc, attrs[a].name);
      } else {
        const auto* gc = std::get_if<GroupCost>(&costs_[a]);
        if (!gc || gc->size() != attrs[a].width()) {
          throw InputError("categorical attribute '" + attrs[a].name +
                           "' needs a " + std::to_string(attrs[a].width()) +
                           "x" + std::to_string(attrs[a].width()) +
                           " transition matrix");
        }
      }
    }
  }

  // Linear weight 1 both ways on numerics, uniform transition cost 1.
  static CostModel unit(std::shared_ptr<const FeatureSchema> schema) {
    std::vector<AttributeCost> costs;
    for (const auto& a : schema->attributes()) {
      if (a.is_numeric()) {
        costs.emplace_back(FeatureCost{LinearAsymmetric{1.0, 1.0}});
      } else {
        costs.emplace_back(GroupCost::uniform(a.width(), 1.0));
      }
    }
    return CostModel(std::move(schema), std::move(costs));
  }

  const FeatureSchema& schema() const { return *schema_; }
  const std::shared_ptr<const FeatureSchema>& schema_ptr() const {
    return schema_;
  }
  std::size_t size() const { return costs_.size(); }

  const FeatureCost& feature(std::size_t attribute) const {
    return std::get<FeatureCost>(costs_[attribute]);
  }
  const GroupCost& group(std::size_t attribute) const {
    return std::get<GroupCost>(costs_[attribute]);
  }
  const AttributeCost& operator[](std::size_t attribute) const {
    return costs_[attribute];
  }

  CostModel with(std::size_t attribute, AttributeCost cost) const {
    auto costs = costs_;
    costs.at(attribute) = std::move(cost);
    return CostModel(schema_, std::move(costs));
  }

  // Cost of moving attribute `a` from its value in `from` to its value in `to`.
  double attribute_cost(std::size_t a, const FeatureVector& from,
                        const FeatureVector& to) const {
    const Attribute& attr = schema_->attributes()[a];
    if (attr.is_numeric()) {
      return evaluate(feature(a), from[attr.offset], to[attr.offset]);
    }
    return group(a)(schema_->category_of(from, attr),
                    schema_->category_of(to, attr));
  }

 private:
  std::shared_ptr<const FeatureSchema> schema_;
  std::vector<AttributeCost> costs_;
};

// Sum of per-attribute costs, in attribute order.
inline double total_cost(const FeatureVector& from, const FeatureVector& to,
                         const CostModel& model) {
  const FeatureSchema& schema = model.schema();
  schema.validate(from);
  schema.validate(to);
  double total = 0.0;
  for (std::size_t a = 0; a < model.size(); ++a) {
    total += model.attribute_cost(a, from, to);
  }
  return total;
}

// --- documents --------------------------------------------------------------

inline json to_json(const FeatureCost& fc) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, LinearAsymmetric>) {
          return {{"type", "linear"},
                  {"weight_up", real_to_json(c.weight_up)},
                  {"weight_down", real_to_json(c.weight_down)}};
        } else if constexpr (std::is_same_v<T, Quadratic>) {
          return {{"type", "quadratic"}, {"weight", real_to_json(c.weight)}};
        } else if constexpr (std::is_same_v<T, Immutable>) {
          return {{"type", "immutable"}};
        } else {
          json pts = json::array();
          for (const auto& [d, v] : c.points()) pts.push_back({d, v});
          return {{"type", "piecewise"}, {"points", pts}};
        }
      },
      fc);
}

inline json to_json(const GroupCost& gc) {
  json rows = json::array();
  for (const auto& row : gc.matrix()) {
    json r = json::array();
    for (double c : row) r.push_back(real_to_json(c));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json to_json(const CostModel& model) {
  json features = json::array();
  json groups = json::array();
  const auto& attrs = model.schema().attributes();
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    if (attrs[a].is_numeric()) {
      json j = to_json(model.feature(a));
      j["feature"] = attrs[a].name;
      features.push_back(std::move(j));
    } else {
      groups.push_back(
          {{"group", attrs[a].name}, {"transitions", to_json(model.group(a))}});
    }
  }
  return {{"features", features}, {"groups", groups}};
}

inline FeatureCost feature_cost_from_json(const json& j,
                                          const std::string& where) {
  const std::string type = j.value("type", "");
  auto weight = [&](const char* key, double fallback) {
    return j.contains(key) ? real_from_json(j[key], where + "." + key)
                           : fallback;
  };
  FeatureCost fc;
  if (type == "linear") {
    const double w = weight("weight", 1.0);
    fc = LinearAsymmetric{weight("weight_up", w), weight("weight_down", w)};
  } else if (type == "quadratic") {
    fc = Quadratic{weight("weight", 1.0)};
  } else if (type == "immutable") {
    fc = Immutable{};
  } else if (type == "piecewise") {
    if (!j.contains("points") || !j["points"].is_array()) {
      throw InputError(where + ": piecewise cost needs 'points'");
    }
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : j["points"]) {
      if (!p.is_array() || p.size() != 2) {
        throw InputError(where + ".points: expected [displacement, cost]");
      }
      pts.emplace_back(real_from_json(p[0], where), real_from_json(p[1], where));
    }
    fc = PiecewiseLinear(std::move(pts));
  } else {
    throw InputError(where + ": unknown cost type '" + type + "'");
  }
  return fc;
}

inline GroupCost group_cost_from_json(const json& j, std::size_t m,
                                      const std::string& where) {
  if (j.contains("uniform")) {
    const double c = real_from_json(j["uniform"], where + ".uniform");
    if (!(c >= 0.0)) throw InputError(where + ": negative transition cost");
    return GroupCost::uniform(m, c);
  }
  if (j.value("type", "") == "immutable") return GroupCost::immutable(m);
  if (!j.contains("transitions") || !j["transitions"].is_array()) {
    throw InputError(where + ": group cost needs 'transitions'");
  }
  std::vector<std::vector<double>> t;
  for (const auto& row : j["transitions"]) {
    if (!row.is_array()) throw InputError(where + ".transitions: rows");
    std::vector<double> r;
    for (const auto& c : row) r.push_back(real_from_json(c, where));
    t.push_back(std::move(r));
  }
  if (t.size() != m) {
    throw InputError(where + ": transition matrix must be " +
                     std::to_string(m) + "x" + std::to_string(m));
  }
  try {
    return GroupCost(std::move(t));
  } catch (const InputError& e) {
    throw InputError(where + ": " + e.what());
  }
}

// Applies the entries of a cost document over `base`. With require_complete,
// every attribute must be covered (a full cost file).
inline CostModel merge_costs(const CostModel& base, const json& doc,
                             bool require_complete) {
  const FeatureSchema& schema = base.schema();
  if (!doc.is_object()) throw InputError("cost document: expected an object");
  std::vector<CostModel::AttributeCost> costs;
  for (std::size_t a = 0; a < base.size(); ++a) costs.push_back(base[a]);
  std::vector<bool> seen(base.size(), false);

  auto lookup = [&](const std::string& name, bool numeric,
                    const std::string& where) {
    auto idx = schema.index_of(name);
    if (!idx) throw InputError(where + ": unknown attribute '" + name + "'");
    if (schema.attributes()[*idx].is_numeric() != numeric) {
      throw InputError(where + ": '" + name + "' is " +
                       (numeric ? "categorical" : "numeric"));
    }
    if (seen[*idx]) throw InputError(where + ": '" + name + "' listed twice");
    seen[*idx] = true;
    return *idx;
  };

  if (doc.contains("features")) {
    const auto& list = doc["features"];
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "features[" + std::to_string(i) + "]";
      const std::string name = list[i].value("feature", "");
      const std::size_t a = lookup(name, true, where);
      FeatureCost fc = feature_cost_from_json(list[i], where);
      validate_feature_cost(fc, name);
      costs[a] = std::move(fc);
    }
  }
  if (doc.contains("groups")) {
    const auto& list = doc["groups"];
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "groups[" + std::to_string(i) + "]";
      const std::string name = list[i].value("group", "");
      const std::size_t a = lookup(name, false, where);
      costs[a] =
          group_cost_from_json(list[i], schema.attributes()[a].width(), where);
    }
  }
  if (require_complete) {
    for (std::size_t a = 0; a < seen.size(); ++a) {
      if (!seen[a]) {
        throw InputError("cost document does not cover attribute '" +
                         schema.attributes()[a].name + "'");
      }
    }
  }
  return CostModel(base.schema_ptr(), std::move(costs));
}

inline CostModel cost_model_from_json(
    const json& doc, std::shared_ptr<const FeatureSchema> schema) {
  return merge_costs(CostModel::unit(std::move(schema)), doc, true);
}

inline CostModel load_cost_model(const std::string& path,
                                 std::shared_ptr<const FeatureSchema> schema) {
  return cost_model_from_json(read_json_file(path), std::move(schema));
}

}  // namespace recourse
