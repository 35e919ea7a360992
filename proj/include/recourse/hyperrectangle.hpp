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
#include <span>
#include <vector>

#include "common.hpp"

namespace recourse {

// Half-open interval (lo, hi]: the set routed by "value <= threshold goes
// left". lo may be -inf, hi may be +inf.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool empty() const { return !(lo < hi); }
  bool contains(double x) const { return lo < x && x <= hi; }
  bool unbounded() const { return lo == -kInf && hi == kInf; }

  Interval intersect(const Interval& o) const {
    return {std::max(lo, o.lo), std::min(hi, o.hi)};
  }
  bool overlaps(const Interval& o) const { return !intersect(o).empty(); }
  // Componentwise containment of the represented sets (both non-empty).
  bool within(const Interval& o) const { return o.lo <= lo && hi <= o.hi; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

// Conjunction of one interval per encoded dimension.
class Hyperrectangle {
 public:
  Hyperrectangle() = default;
  explicit Hyperrectangle(std::size_t dimension) : intervals_(dimension) {}
  explicit Hyperrectangle(std::vector<Interval> intervals)
      : intervals_(std::move(intervals)) {}

  std::size_t dimension() const { return intervals_.size(); }
  const Interval& operator[](std::size_t i) const { return intervals_[i]; }
  Interval& operator[](std::size_t i) { return intervals_[i]; }
  std::span<const Interval> intervals() const { return intervals_; }

  bool empty() const {
    for (const auto& iv : intervals_) {
      if (iv.empty()) return true;
    }
    return false;
  }

  bool contains(std::span<const double> point) const {
    if (point.size() != intervals_.size()) return false;
    for (std::size_t i = 0; i < point.size(); ++i) {
      if (!intervals_[i].contains(point[i])) return false;
    }
    return true;
  }

  Hyperrectangle intersect(const Hyperrectangle& o) const {
    Hyperrectangle out(*this);
    out.intersect_in_place(o);
    return out;
  }

  void intersect_in_place(const Hyperrectangle& o) {
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
      intervals_[i] = intervals_[i].intersect(o.intervals_[i]);
    }
  }

  bool overlaps(const Hyperrectangle& o) const {
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
      if (!intervals_[i].overlaps(o.intervals_[i])) return false;
    }
    return true;
  }

  // Every set this box represents is a subset of `o`'s.
  bool within(const Hyperrectangle& o) const {
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
      if (!intervals_[i].within(o.intervals_[i])) return false;
    }
    return true;
  }

  friend bool operator==(const Hyperrectangle&,
                         const Hyperrectangle&) = default;

 private:
  std::vector<Interval> intervals_;
};

inline json to_json(const Hyperrectangle& h) {
  json out = json::array();
  for (const auto& iv : h.intervals()) {
    out.push_back({real_to_json(iv.lo), real_to_json(iv.hi)});
  }
  return out;
}

}  // namespace recourse
