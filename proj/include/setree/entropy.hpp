#pragma once

// Encoding trees (rooted hierarchical partitions of graph vertices) and the
// structural-entropy formulas defined on them:
//   one_dim_entropy    H1(G)          = -sum_v d_v/vol * log2(d_v/vol)
//   assigned_entropy   H(G; a)        = -g_a/vol * log2(V_a / V_parent)
//   tree_entropy       sum over non-root nodes of assigned_entropy
//   structural_probability  normalized exp(-path sum) inside one cluster
//   conditional_entropy      path sum from the LCA down to a target leaf

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "setree/graph.hpp"

namespace setree {

struct TreeNode {
  int id = -1;
  int parent = -1;  // -1 for the root
  std::vector<int> children;  // order-significant
  std::vector<int> vertices;  // ascending vertex indices
  int height = 0;             // 0 for leaves, 1 + max child height otherwise
  bool alive = true;
};

// Invariants: the root covers every vertex, children partition their parent's
// vertex set, and every leaf is a singleton. Node ids are stable; operators
// retire nodes instead of renumbering.
class EncodingTree {
 public:
  EncodingTree() = default;

  // Root plus one singleton leaf per vertex. Leaf ids equal vertex indices and
  // the root id is vertex_count; fresh nodes continue from there.
  static EncodingTree flat(int vertex_count) {
    if (vertex_count < 1)
      throw std::invalid_argument("tree needs at least one vertex");
    EncodingTree t;
    t.nodes_.reserve(static_cast<std::size_t>(vertex_count) * 2 + 1);
    for (int v = 0; v < vertex_count; ++v)
      t.nodes_.push_back({v, vertex_count, {}, {v}, 0, true});
    TreeNode root;
    root.id = vertex_count;
    root.parent = -1;
    root.height = 1;
    for (int v = 0; v < vertex_count; ++v) {
      root.children.push_back(v);
      root.vertices.push_back(v);
    }
    t.nodes_.push_back(std::move(root));
    t.root_ = vertex_count;
    return t;
  }

  int root() const { return root_; }
  void set_root(int id) { root_ = id; }

  int node_capacity() const { return static_cast<int>(nodes_.size()); }

  const TreeNode& node(int id) const {
    check(id);
    return nodes_[id];
  }

  TreeNode& node_mut(int id) {
    check(id);
    return nodes_[id];
  }

  int add_node(TreeNode n) {
    n.id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(n));
    return nodes_.back().id;
  }

  void retire(int id) {
    check(id);
    nodes_[id].alive = false;
  }

  bool is_leaf(int id) const {
    const TreeNode& n = node(id);
    return n.children.empty();
  }

  std::vector<int> alive_ids() const {
    std::vector<int> ids;
    for (const TreeNode& n : nodes_)
      if (n.alive) ids.push_back(n.id);
    return ids;
  }

  int vertex_count() const {
    return static_cast<int>(node(root_).vertices.size());
  }

  int height() const { return node(root_).height; }

  int leaf_of(int vertex) const {
    for (const TreeNode& n : nodes_)
      if (n.alive && n.children.empty() && n.vertices.size() == 1 &&
          n.vertices[0] == vertex)
        return n.id;
    throw std::invalid_argument("vertex has no leaf in this tree");
  }

  void recompute_heights() {
    recompute_heights_from(root_);
  }

  // Throws if any structural invariant is broken.
  void validate() const {
    if (root_ < 0 || root_ >= node_capacity() || !nodes_[root_].alive)
      throw std::invalid_argument("encoding tree has no root");
    if (nodes_[root_].parent != -1)
      throw std::invalid_argument("root must have no parent");
    const int n = vertex_count();
    {
      std::vector<int> want(n);
      for (int i = 0; i < n; ++i) want[i] = i;
      if (nodes_[root_].vertices != want)
        throw std::invalid_argument("root must cover vertices 0..n-1");
    }
    for (const TreeNode& node : nodes_) {
      if (!node.alive) continue;
      if (node.id != root_) {
        if (node.parent < 0 || node.parent >= node_capacity() ||
            !nodes_[node.parent].alive)
          throw std::invalid_argument("dangling parent link");
        const auto& pc = nodes_[node.parent].children;
        if (std::count(pc.begin(), pc.end(), node.id) != 1)
          throw std::invalid_argument("parent does not list child exactly once");
      }
      if (!std::is_sorted(node.vertices.begin(), node.vertices.end()))
        throw std::invalid_argument("vertex sets must be sorted");
      if (node.children.empty()) {
        if (node.vertices.size() != 1)
          throw std::invalid_argument("leaves must be singletons");
        if (node.height != 0)
          throw std::invalid_argument("leaf height must be 0");
      } else {
        std::vector<int> merged;
        int max_child_height = -1;
        for (int c : node.children) {
          if (c < 0 || c >= node_capacity() || !nodes_[c].alive)
            throw std::invalid_argument("dead child link");
          if (nodes_[c].parent != node.id)
            throw std::invalid_argument("child parent mismatch");
          merged.insert(merged.end(), nodes_[c].vertices.begin(),
                        nodes_[c].vertices.end());
          max_child_height = std::max(max_child_height, nodes_[c].height);
        }
        std::sort(merged.begin(), merged.end());
        if (std::adjacent_find(merged.begin(), merged.end()) != merged.end())
          throw std::invalid_argument("child vertex sets overlap");
        if (merged != node.vertices)
          throw std::invalid_argument("children do not cover their parent");
        if (node.height != max_child_height + 1)
          throw std::invalid_argument("inconsistent node height");
      }
    }
  }

 private:
  void check(int id) const {
    if (id < 0 || id >= node_capacity())
      throw std::out_of_range("tree node id out of range");
    if (!nodes_[id].alive) throw std::invalid_argument("retired tree node");
  }

  int recompute_heights_from(int id) {
    TreeNode& n = nodes_[id];
    if (n.children.empty()) {
      n.height = 0;
    } else {
      int h = -1;
      for (int c : n.children) h = std::max(h, recompute_heights_from(c));
      n.height = h + 1;
    }
    return n.height;
  }

  std::vector<TreeNode> nodes_;
  int root_ = -1;
};

// --- formulas -------------------------------------------------------------

inline double one_dim_entropy(const Graph& g) {
  const double vol = g.volume();
  if (!(vol > 0.0))
    throw std::invalid_argument("one-dimensional entropy needs volume > 0");
  double h = 0.0;
  for (int v = 0; v < g.vertex_count(); ++v) {
    double d = g.degree(v);
    if (!(d > 0.0))
      throw std::invalid_argument(
          "one-dimensional entropy is undefined with isolated vertices");
    double p = d / vol;
    h -= p * std::log2(p);
  }
  return h;
}

// Total weight of edges with exactly one endpoint inside `vertices`.
inline double cut_weight(const Graph& g, const std::vector<int>& vertices) {
  std::vector<char> in(g.vertex_count(), 0);
  for (int v : vertices) in[v] = 1;
  double cut = 0.0;
  for (const Edge& e : g.edges())
    if (in[e.u] != in[e.v]) cut += e.w;
  return cut;
}

inline double subset_volume(const Graph& g, const std::vector<int>& vertices) {
  double vol = 0.0;
  for (int v : vertices) vol += g.degree(v);
  return vol;
}

namespace detail {
// -(g/vol) * log2(va / vp) with the degenerate cases pinned: zero-volume
// subtrees and zero cuts contribute nothing, and the ratio is clamped to 1 so
// floating-point noise cannot produce a negative term.
inline double entropy_term(double cut, double va, double vp, double vol) {
  if (!(va > 0.0) || !(cut > 0.0)) return 0.0;
  double ratio = std::min(va / vp, 1.0);
  return -(cut / vol) * std::log2(ratio);
}
}  // namespace detail

inline double assigned_entropy(const Graph& g, const EncodingTree& t, int id) {
  if (id == t.root())
    throw std::domain_error("assigned entropy is undefined for the root");
  const TreeNode& n = t.node(id);
  const TreeNode& parent = t.node(n.parent);
  double va = subset_volume(g, n.vertices);
  if (!(va > 0.0)) return 0.0;
  double vp = subset_volume(g, parent.vertices);
  double cut = cut_weight(g, n.vertices);
  return detail::entropy_term(cut, va, vp, g.volume());
}

inline double tree_entropy(const Graph& g, const EncodingTree& t) {
  t.validate();
  if (t.vertex_count() != g.vertex_count())
    throw std::invalid_argument("tree and graph vertex sets differ");
  if (!(g.volume() > 0.0)) return 0.0;
  double total = 0.0;
  for (int id : t.alive_ids())
    if (id != t.root()) total += assigned_entropy(g, t, id);
  return total;
}

// Distribution over the vertices of one root child: raw mass is
// exp(-sum of assigned entropies on the leaf-to-cluster path, cluster
// excluded), normalized to sum to 1 within the cluster.
inline std::map<int, double> structural_probability(const Graph& g,
                                                    const EncodingTree& t,
                                                    int center) {
  const TreeNode& c = t.node(center);
  if (c.parent != t.root())
    throw std::domain_error("cluster center must be a child of the root");
  std::map<int, double> raw;
  double total = 0.0;
  for (int v : c.vertices) {
    double path = 0.0;
    for (int id = t.leaf_of(v); id != center; id = t.node(id).parent)
      path += assigned_entropy(g, t, id);
    double mass = std::exp(-path);
    raw[v] = mass;
    total += mass;
  }
  for (auto& [v, p] : raw) p /= total;
  return raw;
}

// Sum of assigned entropies on the path from leaf j up to (excluding) the
// lowest common ancestor of leaves i and j.
inline double conditional_entropy(const Graph& g, const EncodingTree& t,
                                  int leaf_i, int leaf_j) {
  if (leaf_i == leaf_j)
    throw std::domain_error("conditional entropy needs two distinct leaves");
  if (!t.is_leaf(leaf_i) || !t.is_leaf(leaf_j))
    throw std::invalid_argument("conditional entropy operands must be leaves");
  auto depth = [&](int id) {
    int d = 0;
    for (; t.node(id).parent != -1; id = t.node(id).parent) ++d;
    return d;
  };
  int a = leaf_i, b = leaf_j;
  int da = depth(a), db = depth(b);
  while (da > db) {
    a = t.node(a).parent;
    --da;
  }
  while (db > da) {
    b = t.node(b).parent;
    --db;
  }
  while (a != b) {
    a = t.node(a).parent;
    b = t.node(b).parent;
  }
  const int lca = a;
  double sum = 0.0;
  for (int id = leaf_j; id != lca; id = t.node(id).parent)
    sum += assigned_entropy(g, t, id);
  return sum;
}

}  // namespace setree
