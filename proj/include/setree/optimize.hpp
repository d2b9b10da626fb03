#pragma once

// Greedy structural-entropy minimization over encoding trees via two sibling
// operators: merge (fuse two internal siblings into one node inheriting both
// child lists, height non-increasing) and combine (insert a new parent above
// two siblings, height +1 locally). A memoized exhaustive search over all
// encoding trees of bounded height serves as the small-instance oracle.

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "setree/entropy.hpp"
#include "setree/graph.hpp"

namespace setree {

enum class OpKind { merge, combine };

inline const char* op_kind_name(OpKind k) {
  return k == OpKind::merge ? "merge" : "combine";
}

struct OpLogEntry {
  int step = 0;
  OpKind kind = OpKind::merge;
  int beta1 = -1;
  int beta2 = -1;
  double delta = 0.0;  // entropy before - entropy after; positive = improvement
};

struct OptimizeConfig {
  int k_cap = 3;                 // maximal encoding-tree height
  long long max_iterations = 0;  // 0 -> 10 * vertex_count^2
};

// Operators are applied only when they improve the entropy by more than this,
// so floating-point noise in the incremental deltas cannot masquerade as an
// improvement and every logged step is a genuine strict decrease.
inline constexpr double kMinDeltaSE = 1e-12;

struct OptimizeResult {
  EncodingTree tree;
  std::vector<OpLogEntry> log;
  double initial_entropy = 0.0;
  double final_entropy = 0.0;
};

namespace detail {
// Root height if a new parent of height `1 + max(h1, h2)` were inserted as a
// child of `parent`; sibling removal can only let other branches dominate.
inline int prospective_root_height(const EncodingTree& t, int parent,
                                   int new_node_height) {
  int h = new_node_height;
  for (int id = parent; id != -1; id = t.node(id).parent)
    h = std::max(t.node(id).height, h + 1);
  return h;
}

inline std::vector<int> sorted_union(const std::vector<int>& a,
                                     const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline void check_siblings(const EncodingTree& t, int b1, int b2) {
  if (b1 == b2) throw std::domain_error("operator needs two distinct nodes");
  const TreeNode& n1 = t.node(b1);
  const TreeNode& n2 = t.node(b2);
  if (n1.parent == -1 || n2.parent == -1 || n1.parent != n2.parent)
    throw std::domain_error("operands must be siblings");
}
}  // namespace detail

// Replace siblings b1, b2 by a single node covering both, whose child list is
// children(b1) followed by children(b2). Leaf operands are rejected: a leaf
// has no children to donate and its vertex would vanish from the leaf level.
inline int merge_siblings(EncodingTree& t, int b1, int b2) {
  detail::check_siblings(t, b1, b2);
  if (t.is_leaf(b1) || t.is_leaf(b2))
    throw std::domain_error("merge operands must be internal nodes");
  const int parent = t.node(b1).parent;
  TreeNode merged;
  merged.parent = parent;
  merged.children = t.node(b1).children;
  const auto& c2 = t.node(b2).children;
  merged.children.insert(merged.children.end(), c2.begin(), c2.end());
  merged.vertices = detail::sorted_union(t.node(b1).vertices, t.node(b2).vertices);
  const int id = t.add_node(std::move(merged));
  for (int c : t.node(id).children) t.node_mut(c).parent = id;

  auto& pc = t.node_mut(parent).children;
  auto p1 = std::find(pc.begin(), pc.end(), b1) - pc.begin();
  auto p2 = std::find(pc.begin(), pc.end(), b2) - pc.begin();
  pc[std::min(p1, p2)] = id;
  pc.erase(pc.begin() + std::max(p1, p2));

  t.retire(b1);
  t.retire(b2);
  t.recompute_heights();
  return id;
}

// Insert a new parent with exactly b1 and b2 as children. Grows the local
// height by one; rejected when the root would exceed k_cap.
inline int combine_siblings(EncodingTree& t, int b1, int b2, int k_cap) {
  detail::check_siblings(t, b1, b2);
  const int parent = t.node(b1).parent;
  const int new_height = 1 + std::max(t.node(b1).height, t.node(b2).height);
  if (detail::prospective_root_height(t, parent, new_height) > k_cap)
    throw height_cap_error("combine would exceed the height cap");
  TreeNode inserted;
  inserted.parent = parent;
  inserted.children = {b1, b2};
  inserted.vertices =
      detail::sorted_union(t.node(b1).vertices, t.node(b2).vertices);
  const int id = t.add_node(std::move(inserted));
  t.node_mut(b1).parent = id;
  t.node_mut(b2).parent = id;

  auto& pc = t.node_mut(parent).children;
  auto p1 = std::find(pc.begin(), pc.end(), b1) - pc.begin();
  auto p2 = std::find(pc.begin(), pc.end(), b2) - pc.begin();
  pc[std::min(p1, p2)] = id;
  pc.erase(pc.begin() + std::max(p1, p2));

  t.recompute_heights();
  return id;
}

namespace detail {

// One greedy run over a connected graph. Keeps per-node subtree volume and
// boundary cut so candidate deltas are O(local degree); deltas are exact
// entropy differences and must exceed kMinDeltaSE for the loop to continue.
class GreedyOptimizer {
 public:
  GreedyOptimizer(const Graph& g, int k_cap, long long max_iterations)
      : g_(g),
        k_cap_(k_cap),
        max_iterations_(max_iterations),
        tree_(EncodingTree::flat(g.vertex_count())),
        stamp_(g.vertex_count(), -1) {
    const int n = g.vertex_count();
    vol_.assign(n + 1, 0.0);
    cut_.assign(n + 1, 0.0);
    for (int v = 0; v < n; ++v) {
      vol_[v] = g.degree(v);
      cut_[v] = g.degree(v);
    }
    vol_[n] = subset_volume(g, tree_.node(n).vertices);
    cut_[n] = 0.0;
  }

  OptimizeResult run() {
    OptimizeResult result;
    result.initial_entropy = tree_entropy(g_, tree_);
    long long iterations = 0;
    int step = 0;
    while (true) {
      if (++iterations > max_iterations_)
        throw iteration_limit_error("optimizer exceeded its iteration bound");
      Candidate m = best_candidate(OpKind::merge);
      if (m.delta > kMinDeltaSE) {
        apply(OpKind::merge, m);
        result.log.push_back({++step, OpKind::merge, m.b1, m.b2, m.delta});
        continue;
      }
      Candidate c = best_candidate(OpKind::combine);
      if (c.delta > kMinDeltaSE) {
        apply(OpKind::combine, c);
        result.log.push_back({++step, OpKind::combine, c.b1, c.b2, c.delta});
        continue;
      }
      break;
    }
    result.final_entropy = tree_entropy(g_, tree_);
    result.tree = std::move(tree_);
    return result;
  }

 private:
  struct Candidate {
    double delta = 0.0;
    int b1 = -1;
    int b2 = -1;
  };

  double cut_between(int b1, int b2) {
    ++generation_;
    for (int v : tree_.node(b2).vertices) stamp_[v] = generation_;
    double x = 0.0;
    for (int v : tree_.node(b1).vertices)
      for (const auto& [u, w] : g_.neighbors(v))
        if (stamp_[u] == generation_) x += w;
    return x;
  }

  double child_cut_sum(int id) {
    double s = 0.0;
    for (int c : tree_.node(id).children) s += cut_[c];
    return s;
  }

  double delta_merge(int b1, int b2) {
    const int parent = tree_.node(b1).parent;
    const double vol = g_.volume();
    const double x = cut_between(b1, b2);
    const double g1 = cut_[b1], g2 = cut_[b2];
    const double v1 = vol_[b1], v2 = vol_[b2];
    const double gm = g1 + g2 - 2.0 * x;
    const double vm = v1 + v2;
    const double vp = vol_[parent];
    if (!(vm > 0.0)) return 0.0;
    double delta = entropy_term(g1, v1, vp, vol) + entropy_term(g2, v2, vp, vol) -
                   entropy_term(gm, vm, vp, vol);
    const double s1 = child_cut_sum(b1);
    const double s2 = child_cut_sum(b2);
    if (s1 > 0.0 && v1 > 0.0) delta += (s1 / vol) * std::log2(v1 / vm);
    if (s2 > 0.0 && v2 > 0.0) delta += (s2 / vol) * std::log2(v2 / vm);
    return delta;
  }

  double delta_combine(int b1, int b2) {
    const int parent = tree_.node(b1).parent;
    const double x = cut_between(b1, b2);
    if (!(x > 0.0)) return 0.0;
    const double vm = vol_[b1] + vol_[b2];
    const double vp = vol_[parent];
    if (!(vm > 0.0) || !(vp > vm)) return 0.0;
    return (2.0 * x / g_.volume()) * std::log2(vp / vm);
  }

  bool combine_allowed(int b1, int b2) {
    const int parent = tree_.node(b1).parent;
    const int new_height =
        1 + std::max(tree_.node(b1).height, tree_.node(b2).height);
    return prospective_root_height(tree_, parent, new_height) <= k_cap_;
  }

  Candidate best_candidate(OpKind kind) {
    Candidate best;
    for (int parent : tree_.alive_ids()) {
      if (tree_.is_leaf(parent)) continue;
      std::vector<int> children = tree_.node(parent).children;
      std::sort(children.begin(), children.end());
      for (std::size_t i = 0; i < children.size(); ++i)
        for (std::size_t j = i + 1; j < children.size(); ++j) {
          const int b1 = children[i], b2 = children[j];
          double d = 0.0;
          if (kind == OpKind::merge) {
            if (tree_.is_leaf(b1) || tree_.is_leaf(b2)) continue;
            d = delta_merge(b1, b2);
          } else {
            if (!combine_allowed(b1, b2)) continue;
            d = delta_combine(b1, b2);
          }
          if (d > best.delta ||
              (d == best.delta && d > 0.0 &&
               std::make_pair(b1, b2) < std::make_pair(best.b1, best.b2)))
            best = {d, b1, b2};
        }
    }
    return best;
  }

  void apply(OpKind kind, const Candidate& c) {
    const double x = cut_between(c.b1, c.b2);
    const double v = vol_[c.b1] + vol_[c.b2];
    const double g = cut_[c.b1] + cut_[c.b2] - 2.0 * x;
    const int id = kind == OpKind::merge
                       ? merge_siblings(tree_, c.b1, c.b2)
                       : combine_siblings(tree_, c.b1, c.b2, k_cap_);
    vol_.resize(tree_.node_capacity(), 0.0);
    cut_.resize(tree_.node_capacity(), 0.0);
    vol_[id] = v;
    cut_[id] = g;
  }

  const Graph& g_;
  int k_cap_;
  long long max_iterations_;
  EncodingTree tree_;
  std::vector<double> vol_, cut_;
  std::vector<int> stamp_;
  int generation_ = 0;
};

}  // namespace detail

// Alternating merge/combine scans until no operator strictly reduces the tree
// entropy: merges are searched first, the best positive candidate is applied,
// and the scan restarts. A disconnected graph is optimized per connected
// component (cap reduced by one) and reassembled with the component trees as
// root children, so the final root still respects k_cap.
inline OptimizeResult optimize(const Graph& g, OptimizeConfig cfg = {}) {
  if (cfg.k_cap < 2) throw std::domain_error("height cap must be at least 2");
  const int n = g.vertex_count();
  const long long max_iterations =
      cfg.max_iterations > 0 ? cfg.max_iterations
                             : 10LL * std::max(n, 2) * std::max(n, 2);
  if (n == 1) {
    OptimizeResult result;
    result.tree = EncodingTree::flat(1);
    return result;
  }
  if (!(g.min_degree() > 0.0))
    throw std::invalid_argument("optimize requires all degrees > 0");

  const auto components = connected_components(g);
  if (components.size() == 1)
    return detail::GreedyOptimizer(g, cfg.k_cap, max_iterations).run();

  OptimizeResult result;
  result.initial_entropy = tree_entropy(g, EncodingTree::flat(n));
  EncodingTree tree = EncodingTree::flat(n);
  std::vector<int> root_children;
  int step = 0;
  for (const auto& members : components) {
    Graph sub = induced_subgraph(g, members);
    OptimizeResult part =
        detail::GreedyOptimizer(sub, cfg.k_cap - 1, max_iterations).run();
    const double scale = sub.volume() / g.volume();
    std::vector<int> remap(part.tree.node_capacity(), -1);
    const auto ids = part.tree.alive_ids();
    const int local_n = sub.vertex_count();
    for (int id : ids) {
      if (id < local_n) {
        remap[id] = members[id];
      } else {
        TreeNode placeholder;
        placeholder.parent = tree.root();
        remap[id] = tree.add_node(std::move(placeholder));
      }
    }
    for (int id : ids) {
      const TreeNode& src = part.tree.node(id);
      TreeNode& dst = tree.node_mut(remap[id]);
      dst.parent = src.parent == -1 ? tree.root() : remap[src.parent];
      dst.children.clear();
      for (int c : src.children) dst.children.push_back(remap[c]);
      dst.vertices.clear();
      for (int v : src.vertices) dst.vertices.push_back(members[v]);
      std::sort(dst.vertices.begin(), dst.vertices.end());
    }
    root_children.push_back(remap[part.tree.root()]);
    for (const OpLogEntry& e : part.log)
      result.log.push_back(
          {++step, e.kind, remap[e.beta1], remap[e.beta2], e.delta * scale});
  }
  tree.node_mut(tree.root()).children = root_children;
  tree.recompute_heights();
  result.final_entropy = tree_entropy(g, tree);
  result.tree = std::move(tree);
  return result;
}

namespace detail {

// Exhaustive minimum over encoding trees of height <= k_cap, memoized on
// (vertex bitmask, remaining depth). Chains (single-child nodes) contribute
// zero entropy and are skipped; every internal split has >= 2 blocks.
class BruteForce {
 public:
  BruteForce(const Graph& g, int k_cap) : g_(g), k_cap_(k_cap) {
    const int n = g.vertex_count();
    const unsigned full = (1u << n) - 1u;
    vol_.assign(full + 1, 0.0);
    cut_.assign(full + 1, 0.0);
    for (unsigned mask = 1; mask <= full; ++mask) {
      for (int v = 0; v < n; ++v)
        if (mask & (1u << v)) vol_[mask] += g.degree(v);
      for (const Edge& e : g.edges()) {
        const bool iu = mask & (1u << e.u);
        const bool iv = mask & (1u << e.v);
        if (iu != iv) cut_[mask] += e.w;
      }
    }
    value_.assign(k_cap + 1, std::vector<double>(full + 1, -1.0));
    blocks_.assign(k_cap + 1, std::vector<std::vector<unsigned>>(full + 1));
  }

  std::pair<EncodingTree, double> solve() {
    const int n = g_.vertex_count();
    const unsigned full = (1u << n) - 1u;
    const double best = inner(full, k_cap_);
    EncodingTree tree = EncodingTree::flat(n);
    std::vector<int> children = expand(tree, full, k_cap_);
    tree.node_mut(tree.root()).children = children;
    for (int c : children) tree.node_mut(c).parent = tree.root();
    tree.recompute_heights();
    tree.validate();
    return {std::move(tree), best};
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  double inner(unsigned mask, int depth) {
    if (std::has_single_bit(mask)) return 0.0;
    if (depth <= 0) return kInf;
    if (value_[depth][mask] >= 0.0) return value_[depth][mask];
    double best = kInf;
    std::vector<unsigned> best_blocks;
    std::vector<unsigned> current;
    partition_dfs(mask, mask, depth, 0.0, current, best, best_blocks);
    value_[depth][mask] = best;
    blocks_[depth][mask] = std::move(best_blocks);
    return best;
  }

  void partition_dfs(unsigned node_mask, unsigned remaining, int depth,
                     double acc, std::vector<unsigned>& current, double& best,
                     std::vector<unsigned>& best_blocks) {
    if (acc > best) return;
    if (remaining == 0) {
      if (current.size() >= 2 && acc < best) {
        best = acc;
        best_blocks = current;
      }
      return;
    }
    const unsigned low = remaining & (~remaining + 1u);
    const unsigned rest = remaining ^ low;
    unsigned sub = rest;
    while (true) {
      const unsigned block = sub | low;
      double cost = entropy_term(cut_[block], vol_[block], vol_[node_mask],
                                 g_.volume()) +
                    inner(block, depth - 1);
      if (cost < kInf) {
        current.push_back(block);
        partition_dfs(node_mask, remaining ^ block, depth, acc + cost, current,
                      best, best_blocks);
        current.pop_back();
      }
      if (sub == 0) break;
      sub = (sub - 1) & rest;
    }
  }

  // Materialize the chosen partition of `mask` as tree nodes; returns ids.
  std::vector<int> expand(EncodingTree& tree, unsigned mask, int depth) {
    std::vector<int> ids;
    for (unsigned block : blocks_[depth][mask]) {
      if (std::has_single_bit(block)) {
        ids.push_back(std::countr_zero(block));
        continue;
      }
      TreeNode node;
      for (int v = 0; v < g_.vertex_count(); ++v)
        if (block & (1u << v)) node.vertices.push_back(v);
      const int id = tree.add_node(std::move(node));
      std::vector<int> children = expand(tree, block, depth - 1);
      tree.node_mut(id).children = children;
      for (int c : children) tree.node_mut(c).parent = id;
      ids.push_back(id);
    }
    return ids;
  }

  const Graph& g_;
  int k_cap_;
  std::vector<double> vol_, cut_;
  std::vector<std::vector<double>> value_;
  std::vector<std::vector<std::vector<unsigned>>> blocks_;
};

}  // namespace detail

inline std::pair<EncodingTree, double> brute_force_optimum(const Graph& g,
                                                           int k_cap) {
  if (g.vertex_count() > 8)
    throw std::domain_error("exhaustive search is limited to 8 vertices");
  if (k_cap < 1) throw std::domain_error("height cap must be at least 1");
  if (g.vertex_count() == 1) return {EncodingTree::flat(1), 0.0};
  return detail::BruteForce(g, k_cap).solve();
}

}  // namespace setree
