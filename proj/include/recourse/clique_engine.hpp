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
#include <atomic>
#include <bit>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "common.hpp"
#include "hyperrectangle.hpp"

namespace recourse {

struct GraphNode {
  int tree = 0;  // partition
  int leaf = 0;  // leaf node id inside the tree
  Hyperrectangle region;
};

// Undirected k-partite graph over leaves; one partition per tree. Adjacency
// is a symmetric, irreflexive bit matrix.
class LeafGraph {
 public:
  LeafGraph() = default;
  explicit LeafGraph(std::vector<GraphNode> nodes) : nodes_(std::move(nodes)) {
    words_ = (nodes_.size() + 63) / 64;
    adjacency_.assign(nodes_.size() * words_, 0);
    std::map<int, std::size_t> ids;
    for (const auto& n : nodes_) ids.emplace(n.tree, 0);
    std::size_t next = 0;
    for (auto& [tree, id] : ids) id = next++;
    partition_of_.reserve(nodes_.size());
    for (const auto& n : nodes_) partition_of_.push_back(ids[n.tree]);
    partition_count_ = ids.size();
  }

  std::size_t size() const { return nodes_.size(); }
  const GraphNode& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  std::size_t partition_count() const { return partition_count_; }
  std::size_t partition(std::size_t i) const { return partition_of_[i]; }

  void add_edge(std::size_t a, std::size_t b) {
    if (a == b || partition_of_[a] == partition_of_[b]) {
      throw InvariantViolation("edge inside one partition");
    }
    row(a)[b / 64] |= std::uint64_t{1} << (b % 64);
    row(b)[a / 64] |= std::uint64_t{1} << (a % 64);
  }

  bool adjacent(std::size_t a, std::size_t b) const {
    return (row(a)[b / 64] >> (b % 64)) & 1U;
  }

  std::size_t edge_count() const {
    std::size_t bits = 0;
    for (std::uint64_t w : adjacency_) bits += std::popcount(w);
    return bits / 2;
  }

  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a = 0; a < size(); ++a) {
      for (std::size_t b = a + 1; b < size(); ++b) {
        if (adjacent(a, b)) out.emplace_back(a, b);
      }
    }
    return out;
  }

  std::span<const std::uint64_t> row(std::size_t a) const {
    return {adjacency_.data() + a * words_, words_};
  }

  // Known up front to contain no qualifying clique.
  bool trivially_infeasible = false;

 private:
  std::span<std::uint64_t> row(std::size_t a) {
    return {adjacency_.data() + a * words_, words_};
  }

  std::vector<GraphNode> nodes_;
  std::vector<std::size_t> partition_of_;
  std::size_t partition_count_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> adjacency_;
};

inline json to_json(const LeafGraph& g) {
  json nodes = json::array();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& n = g.node(i);
    nodes.push_back({{"id", i},
                     {"tree", n.tree},
                     {"leaf", n.leaf},
                     {"region", to_json(n.region)}});
  }
  json edges = json::array();
  for (auto [a, b] : g.edges()) edges.push_back({a, b});
  return {{"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"partitions", g.partition_count()},
          {"trivially_infeasible", g.trivially_infeasible}};
}

// Optional limits; an unset member is unlimited.
struct EnumerationBudget {
  std::optional<std::size_t> max_cliques;
  std::optional<std::chrono::milliseconds> wall_time;

  static EnumerationBudget unlimited() { return {}; }
  static EnumerationBudget cliques(std::size_t n) { return {n, std::nullopt}; }

  void validate() const {
    if (max_cliques && *max_cliques == 0) {
      throw InputError("clique budget must be positive");
    }
    if (wall_time && wall_time->count() <= 0) {
      throw InputError("wall-time budget must be positive");
    }
  }
};

struct EnumerationResult {
  std::size_t emitted = 0;
  bool exhausted = true;
  bool hit_clique_cap = false;
  bool hit_wall_time = false;
  std::size_t steps = 0;
  std::size_t branches = 0;
};

struct SearchOptions {
  std::size_t threads = 1;
  // Top-level branches per scheduling wave. Results depend on this, never on
  // `threads`.
  std::size_t wave_width = 16;
};

namespace detail {

inline constexpr std::size_t kTimeCheckInterval = 1024;

// Nodes relabelled so that partitions are contiguous, ordered by ascending
// size (ties by partition id), keeping the graph's node order inside each.
struct SearchLayout {
  std::size_t n = 0;
  std::size_t words = 0;
  std::vector<std::size_t> original;       // internal -> graph node
  std::vector<std::size_t> part_of;        // internal -> partition position
  std::vector<std::size_t> part_begin;     // partition position -> first node
  std::vector<std::uint64_t> adjacency;    // internal bit rows

  explicit SearchLayout(const LeafGraph& g) : n(g.size()) {
    words = (n + 63) / 64;
    const std::size_t parts = g.partition_count();
    std::vector<std::size_t> sizes(parts, 0);
    for (std::size_t i = 0; i < n; ++i) ++sizes[g.partition(i)];
    std::vector<std::size_t> order(parts);
    for (std::size_t p = 0; p < parts; ++p) order[p] = p;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return sizes[a] < sizes[b];
    });
    std::vector<std::size_t> position(parts);
    for (std::size_t p = 0; p < parts; ++p) position[order[p]] = p;
    part_begin.assign(parts + 1, 0);
    for (std::size_t p = 0; p < parts; ++p) {
      part_begin[p + 1] = part_begin[p] + sizes[order[p]];
    }
    std::vector<std::size_t> fill(part_begin.begin(), part_begin.end() - 1);
    original.resize(n);
    part_of.resize(n);
    std::vector<std::size_t> internal(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pos = position[g.partition(i)];
      const std::size_t id = fill[pos]++;
      original[id] = i;
      part_of[id] = pos;
      internal[i] = id;
    }
    adjacency.assign(n * words, 0);
    for (std::size_t a = 0; a < n; ++a) {
      auto src = g.row(a);
      std::uint64_t* dst = adjacency.data() + internal[a] * words;
      for (std::size_t w = 0; w < src.size(); ++w) {
        for (std::uint64_t bits = src[w]; bits; bits &= bits - 1) {
          const std::size_t b = w * 64 + std::countr_zero(bits);
          dst[internal[b] / 64] |= std::uint64_t{1} << (internal[b] % 64);
        }
      }
    }
  }

  std::size_t partitions() const { return part_begin.size() - 1; }
  const std::uint64_t* row(std::size_t a) const {
    return adjacency.data() + a * words;
  }
};

inline bool any_in_range(const std::uint64_t* bits, std::size_t begin,
                         std::size_t end) {
  while (begin < end) {
    const std::size_t w = begin / 64;
    const std::size_t off = begin % 64;
    const std::size_t span = std::min<std::size_t>(64 - off, end - begin);
    const std::uint64_t mask =
        (span == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << span) - 1))
        << off;
    if (bits[w] & mask) return true;
    begin += span;
  }
  return false;
}

template <typename Branch>
class BranchSearch {
 public:
  BranchSearch(const SearchLayout& layout, std::size_t t, std::size_t cap,
               Branch& branch, std::atomic<bool>& stop,
               std::optional<std::chrono::steady_clock::time_point> deadline)
      : layout_(layout),
        t_(t),
        cap_(cap),
        branch_(branch),
        stop_(stop),
        deadline_(deadline),
        cand_((t + 1) * layout.words, 0),
        clique_(t, 0) {}

  // Cliques whose first (lowest internal id) member is `root`.
  void run(std::size_t root) {
    const std::size_t p = layout_.part_of[root];
    if (!branch_.push(layout_.original[root])) return;
    clique_[0] = layout_.original[root];
    if (t_ == 1) {
      emit();
    } else {
      std::uint64_t* next = cand_.data() + layout_.words;
      const std::uint64_t* adj = layout_.row(root);
      const std::size_t from = layout_.part_begin[p + 1];
      for (std::size_t w = 0; w < layout_.words; ++w) {
        std::uint64_t keep = 0;
        if (w * 64 + 64 <= from) {
          keep = 0;
        } else if (w * 64 >= from) {
          keep = ~std::uint64_t{0};
        } else {
          keep = ~std::uint64_t{0} << (from % 64);
        }
        next[w] = adj[w] & keep;
      }
      recurse(1);
    }
    branch_.pop();
  }

  std::size_t emitted() const { return emitted_; }
  std::size_t steps() const { return steps_; }
  bool capped() const { return capped_; }
  bool timed_out() const { return timed_out_; }

 private:
  bool should_stop() {
    if (capped_ || timed_out_) return true;
    if (++steps_ % kTimeCheckInterval == 0) {
      if (stop_.load(std::memory_order_relaxed)) {
        timed_out_ = true;
      } else if (deadline_ && std::chrono::steady_clock::now() >= *deadline_) {
        timed_out_ = true;
        stop_.store(true, std::memory_order_relaxed);
      }
    }
    return timed_out_;
  }

  void emit() {
    if (emitted_ >= cap_) {
      capped_ = true;
      return;
    }
    ++emitted_;
    branch_.emit(std::span<const std::size_t>(clique_));
  }

  void recurse(std::size_t depth) {
    if (should_stop()) return;
    const std::uint64_t* cand = cand_.data() + depth * layout_.words;
    const std::size_t need = t_ - depth;
    const std::size_t parts = layout_.partitions();
    std::size_t available = 0;
    for (std::size_t q = 0; q < parts; ++q) {
      if (any_in_range(cand, layout_.part_begin[q], layout_.part_begin[q + 1])) {
        ++available;
      }
    }
    for (std::size_t q = 0; q < parts && available >= need; ++q) {
      const std::size_t begin = layout_.part_begin[q];
      const std::size_t end = layout_.part_begin[q + 1];
      if (!any_in_range(cand, begin, end)) continue;
      for (std::size_t u = begin; u < end; ++u) {
        if (!((cand[u / 64] >> (u % 64)) & 1U)) continue;
        const std::size_t graph_id = layout_.original[u];
        if (!branch_.push(graph_id)) continue;
        clique_[depth] = graph_id;
        if (need == 1) {
          emit();
        } else {
          std::uint64_t* next = cand_.data() + (depth + 1) * layout_.words;
          const std::uint64_t* adj = layout_.row(u);
          const std::size_t from = end;
          for (std::size_t w = 0; w < layout_.words; ++w) {
            std::uint64_t keep;
            if (w * 64 + 64 <= from) {
              keep = 0;
            } else if (w * 64 >= from) {
              keep = ~std::uint64_t{0};
            } else {
              keep = ~std::uint64_t{0} << (from % 64);
            }
            next[w] = cand[w] & adj[w] & keep;
          }
          recurse(depth + 1);
        }
        branch_.pop();
        if (capped_ || timed_out_) return;
      }
      --available;
    }
  }

  const SearchLayout& layout_;
  std::size_t t_;
  std::size_t cap_;
  Branch& branch_;
  std::atomic<bool>& stop_;
  std::optional<std::chrono::steady_clock::time_point> deadline_;
  std::vector<std::uint64_t> cand_;  // candidate bitset per depth
  std::vector<std::size_t> clique_;
  std::size_t emitted_ = 0;
  std::size_t steps_ = 0;
  bool capped_ = false;
  bool timed_out_ = false;
};

}  // namespace detail

// Generic size-t clique search with per-branch state.
//
// The factory supplies `open(branch_index) -> Branch` and
// `close(Branch&, accepted)`. A Branch implements `bool push(node)` (false
// prunes the extension), `void pop()` and `void emit(span clique)`; clique
// members are graph node ids, in search order. Top-level branches (one per
// possible first member) are scheduled in waves of options.wave_width: all
// branches of a wave are opened in order, searched concurrently, then closed
// in order, where `accepted` is how many of the branch's emissions fit under
// the clique cap. Output is therefore independent of the thread count.
template <typename Factory>
EnumerationResult search_cliques(const LeafGraph& g, std::size_t t,
                                 const EnumerationBudget& budget,
                                 const SearchOptions& options,
                                 Factory& factory) {
  budget.validate();
  if (t < 1) throw InputError("clique size must be at least 1");
  EnumerationResult result;
  if (t > g.partition_count() || g.size() == 0) return result;

  const detail::SearchLayout layout(g);
  std::vector<std::size_t> roots;
  const std::size_t last_part = layout.partitions() - t;
  for (std::size_t u = 0; u < layout.n; ++u) {
    if (layout.part_of[u] <= last_part) roots.push_back(u);
  }
  result.branches = roots.size();

  std::optional<std::chrono::steady_clock::time_point> deadline;
  if (budget.wall_time) {
    deadline = std::chrono::steady_clock::now() + *budget.wall_time;
  }
  std::atomic<bool> stop{false};
  std::size_t remaining =
      budget.max_cliques.value_or(std::numeric_limits<std::size_t>::max());
  const std::size_t width = std::max<std::size_t>(1, options.wave_width);

  using Branch = decltype(factory.open(std::size_t{0}));
  for (std::size_t start = 0; start < roots.size(); start += width) {
    const std::size_t count = std::min(width, roots.size() - start);
    std::vector<Branch> branches;
    branches.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      branches.push_back(factory.open(start + i));
    }
    std::vector<std::size_t> emitted(count, 0), steps(count, 0);
    std::vector<char> capped(count, 0), timed(count, 0);
    parallel_for(count, options.threads, [&](std::size_t i) {
      detail::BranchSearch<Branch> search(layout, t, remaining, branches[i],
                                          stop, deadline);
      search.run(roots[start + i]);
      emitted[i] = search.emitted();
      steps[i] = search.steps();
      capped[i] = search.capped();
      timed[i] = search.timed_out();
    });
    bool over = false;
    for (std::size_t i = 0; i < count; ++i) {
      result.steps += steps[i];
      result.hit_wall_time = result.hit_wall_time || timed[i];
      std::size_t accepted = 0;
      if (!over) {
        accepted = std::min(emitted[i], remaining);
        if (capped[i] || emitted[i] > accepted) over = true;
        remaining -= accepted;
        result.emitted += accepted;
      }
      factory.close(branches[i], accepted);
    }
    if (over) result.hit_clique_cap = true;
    if (over || result.hit_wall_time) break;
  }
  result.exhausted = !result.hit_clique_cap && !result.hit_wall_time;
  return result;
}

namespace detail {

struct CollectingBranch {
  std::size_t t = 0;
  std::vector<std::size_t> flat;
  bool push(std::size_t) { return true; }
  void pop() {}
  void emit(std::span<const std::size_t> c) {
    flat.insert(flat.end(), c.begin(), c.end());
  }
};

struct StreamingBranch {
  const std::function<void(std::span<const std::size_t>)>* sink = nullptr;
  bool push(std::size_t) { return true; }
  void pop() {}
  void emit(std::span<const std::size_t> c) { (*sink)(c); }
};

struct CountingBranch {
  std::size_t count = 0;
  bool push(std::size_t) { return true; }
  void pop() {}
  void emit(std::span<const std::size_t>) { ++count; }
};

}  // namespace detail

using CliqueSink = std::function<void(std::span<const std::size_t>)>;

// Streams every clique of exactly t nodes (one node per partition at most)
// to `sink`, in a deterministic order, until the budget trips.
inline EnumerationResult enumerate_cliques(const LeafGraph& g, std::size_t t,
                                           const EnumerationBudget& budget,
                                           const CliqueSink& sink,
                                           const SearchOptions& options = {}) {
  if (options.threads <= 1) {
    struct Factory {
      const CliqueSink* sink;
      detail::StreamingBranch open(std::size_t) { return {sink}; }
      void close(detail::StreamingBranch&, std::size_t) {}
    } factory{&sink};
    SearchOptions sequential = options;
    sequential.wave_width = 1;
    return search_cliques(g, t, budget, sequential, factory);
  }
  struct Factory {
    const CliqueSink* sink;
    std::size_t t;
    detail::CollectingBranch open(std::size_t) { return {t, {}}; }
    void close(detail::CollectingBranch& b, std::size_t accepted) {
      for (std::size_t i = 0; i < accepted; ++i) {
        (*sink)(std::span<const std::size_t>(b.flat.data() + i * t, t));
      }
    }
  } factory{&sink, t};
  return search_cliques(g, t, budget, options, factory);
}

struct CliqueCount {
  std::size_t count = 0;
  bool exhausted = true;
};

inline CliqueCount count_cliques(const LeafGraph& g, std::size_t t,
                                 const EnumerationBudget& budget,
                                 const SearchOptions& options = {}) {
  struct Factory {
    std::size_t total = 0;
    detail::CountingBranch open(std::size_t) { return {}; }
    void close(detail::CountingBranch&, std::size_t accepted) {
      total += accepted;
    }
  } factory;
  const auto r = search_cliques(g, t, budget, options, factory);
  return {factory.total, r.exhausted};
}

}  // namespace recourse
