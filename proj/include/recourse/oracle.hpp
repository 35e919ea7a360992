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
#include <cstddef>
#include <optional>
#include <vector>

#include "common.hpp"
#include "cost_model.hpp"
#include "feature_schema.hpp"
#include "forest.hpp"

namespace recourse {

// Candidate values per numeric attribute (schema attribute order); every
// category of every categorical attribute is always on the grid.
struct GridSpec {
  std::vector<std::vector<double>> numeric_values;
  std::size_t max_points = 10'000'000;
};

// Grid that contains every region's clamp points: each forest threshold on a
// numeric feature, one granularity step either side of it, and v's value.
// Values outside declared bounds are dropped.
inline GridSpec make_grid(const Forest& forest, const FeatureVector& v) {
  const FeatureSchema& schema = forest.schema();
  GridSpec grid;
  std::vector<std::size_t> slot(schema.dimension(), 0);
  std::vector<const Attribute*> numeric;
  for (const auto& a : schema.attributes()) {
    if (!a.is_numeric()) continue;
    slot[a.offset] = numeric.size();
    numeric.push_back(&a);
    grid.numeric_values.push_back({v[a.offset]});
  }
  for (const auto& tree : forest.trees()) {
    for (const auto& n : tree.nodes) {
      if (n.is_leaf()) continue;
      const FeatureSpec& f = schema.features()[n.feature];
      if (f.kind != FeatureKind::kNumeric) continue;
      auto& values = grid.numeric_values[slot[n.feature]];
      values.push_back(n.threshold - f.granularity);
      values.push_back(n.threshold);
      values.push_back(n.threshold + f.granularity);
    }
  }
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    auto& values = grid.numeric_values[i];
    if (const auto& b = numeric[i]->bounds) {
      std::erase_if(values, [&](double x) { return x < b->min || x > b->max; });
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
  }
  return grid;
}

struct OracleResult {
  bool feasible = false;
  double min_cost = kInf;
  FeatureVector argmin;
  std::size_t points = 0;
};

// Exhaustive minimum of total_cost(v, .) over grid points the forest
// classifies as `target`; ties go to the lexicographically smallest point.
// Touches only predict and total_cost.
inline OracleResult oracle_min_cost(const Forest& forest, const FeatureVector& v,
                                    const CostModel& costs, int target,
                                    const GridSpec& grid,
                                    std::size_t threads = 1) {
  const FeatureSchema& schema = forest.schema();
  const auto& attrs = schema.attributes();
  if (schema.numeric_count() != grid.numeric_values.size()) {
    throw InputError("grid does not match the schema's numeric attributes");
  }
  std::vector<std::size_t> radix;
  std::size_t numeric = 0;
  for (const auto& a : attrs) {
    radix.push_back(a.is_numeric() ? grid.numeric_values[numeric++].size()
                                   : a.width());
  }
  std::size_t total = 1;
  for (std::size_t r : radix) {
    if (r == 0) return {};
    if (total > grid.max_points / r) throw InputError("grid cap exceeded");
    total *= r;
  }

  auto point_at = [&](std::size_t index) {
    FeatureVector p{std::vector<double>(schema.dimension(), 0.0)};
    std::size_t rest = index;
    std::vector<std::size_t> digit(attrs.size());
    for (std::size_t a = attrs.size(); a-- > 0;) {
      digit[a] = rest % radix[a];
      rest /= radix[a];
    }
    std::size_t ni = 0;
    for (std::size_t a = 0; a < attrs.size(); ++a) {
      if (attrs[a].is_numeric()) {
        p[attrs[a].offset] = grid.numeric_values[ni++][digit[a]];
      } else {
        p[attrs[a].offset + digit[a]] = 1.0;
      }
    }
    return p;
  };

  const std::size_t chunks = std::max<std::size_t>(1, std::min(threads * 4, total));
  std::vector<OracleResult> partial(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    OracleResult& best = partial[c];
    const std::size_t begin = total * c / chunks;
    const std::size_t end = total * (c + 1) / chunks;
    for (std::size_t i = begin; i < end; ++i) {
      FeatureVector p = point_at(i);
      ++best.points;
      if (forest.predict(p).label != target) continue;
      const double cost = total_cost(v, p, costs);
      if (!best.feasible || cost < best.min_cost ||
          (cost == best.min_cost && p < best.argmin)) {
        if (cost == kInf) continue;
        best.feasible = true;
        best.min_cost = cost;
        best.argmin = std::move(p);
      }
    }
  });
  OracleResult out;
  for (auto& r : partial) {
    out.points += r.points;
    if (!r.feasible) continue;
    if (!out.feasible || r.min_cost < out.min_cost ||
        (r.min_cost == out.min_cost && r.argmin < out.argmin)) {
      out.feasible = true;
      out.min_cost = r.min_cost;
      out.argmin = r.argmin;
    }
  }
  return out;
}

}  // namespace recourse
