#pragma once

// Everything downstream of an optimized encoding tree: cluster centers and the
// KL clustering loss, entropy-weighted hierarchical aggregation of state
// representations, relation graphs extracted from trajectories, and the
// conditional-entropy reconstruction loss over those relations.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "setree/entropy.hpp"
#include "setree/graph.hpp"
#include "setree/optimize.hpp"
#include "setree/sparsify.hpp"

namespace setree {

// --- cluster model ----------------------------------------------------------

// Embedding of each root child: the structural-probability mixture of its
// member states' embeddings.
inline std::vector<std::vector<double>> cluster_centers(const Graph& g,
                                                        const EncodingTree& t,
                                                        const EmbeddingSet& e) {
  if (e.count != g.vertex_count() || t.vertex_count() != g.vertex_count())
    throw std::invalid_argument("embeddings, graph, and tree must align");
  std::vector<std::vector<double>> centers;
  for (int child : t.node(t.root()).children) {
    std::vector<double> c(e.dimension, 0.0);
    for (const auto& [v, p] : structural_probability(g, t, child)) {
      auto row = e.row(v);
      for (int d = 0; d < e.dimension; ++d) c[d] += p * row[d];
    }
    centers.push_back(std::move(c));
  }
  return centers;
}

// Student-t kernel soft assignment: Q_ij = (1 + ||z_i - C_j||^2)^-1,
// normalized over centers.
inline std::vector<std::vector<double>> soft_assignment(
    const EmbeddingSet& e, const std::vector<std::vector<double>>& centers) {
  if (centers.empty()) throw std::invalid_argument("need at least one center");
  std::vector<std::vector<double>> q(e.count,
                                     std::vector<double>(centers.size(), 0.0));
  for (int i = 0; i < e.count; ++i) {
    auto row = e.row(i);
    double sum = 0.0;
    for (std::size_t j = 0; j < centers.size(); ++j) {
      double dist2 = 0.0;
      for (int d = 0; d < e.dimension; ++d) {
        double diff = row[d] - centers[j][d];
        dist2 += diff * diff;
      }
      q[i][j] = 1.0 / (1.0 + dist2);
      sum += q[i][j];
    }
    for (double& x : q[i]) x /= sum;
  }
  return q;
}

// Sharpened self-training target: P_ij = (Q_ij^2 / f_j) normalized over j,
// where f_j is the soft cluster frequency.
inline std::vector<std::vector<double>> target_distribution(
    const std::vector<std::vector<double>>& q) {
  if (q.empty()) throw std::invalid_argument("empty assignment matrix");
  const std::size_t cols = q[0].size();
  std::vector<double> freq(cols, 0.0);
  for (const auto& row : q)
    for (std::size_t j = 0; j < cols; ++j) freq[j] += row[j];
  for (double f : freq)
    if (!(f > 0.0)) throw std::domain_error("degenerate cluster: zero column");
  std::vector<std::vector<double>> p(q.size(), std::vector<double>(cols, 0.0));
  for (std::size_t i = 0; i < q.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      p[i][j] = q[i][j] * q[i][j] / freq[j];
      sum += p[i][j];
    }
    for (double& x : p[i]) x /= sum;
  }
  return p;
}

// KL(P || Q) in nats, with 0 * log(0/q) = 0.
inline double clustering_loss(const std::vector<std::vector<double>>& p,
                              const std::vector<std::vector<double>>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("shape mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].size() != q[i].size()) throw std::invalid_argument("shape mismatch");
    for (std::size_t j = 0; j < p[i].size(); ++j) {
      if (p[i][j] == 0.0) continue;
      if (!(q[i][j] > 0.0))
        throw std::domain_error("KL divergence: P > 0 where Q = 0");
      kl += p[i][j] * std::log(p[i][j] / q[i][j]);
    }
  }
  return kl;
}

// --- hierarchical aggregation ------------------------------------------------

// Bottom-up representations: leaves carry their input embeddings; every
// internal node gets the convex combination of its children weighted by their
// assigned structural entropies (uniform when all child entropies vanish).
inline std::map<int, std::vector<double>> aggregate_representations(
    const Graph& g, const EncodingTree& t, const EmbeddingSet& e) {
  if (e.count != g.vertex_count() || t.vertex_count() != g.vertex_count())
    throw std::invalid_argument("embeddings, graph, and tree must align");
  std::vector<int> ids = t.alive_ids();
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    return t.node(a).height != t.node(b).height
               ? t.node(a).height < t.node(b).height
               : a < b;
  });
  std::map<int, std::vector<double>> reps;
  for (int id : ids) {
    const TreeNode& n = t.node(id);
    if (n.children.empty()) {
      auto row = e.row(n.vertices[0]);
      reps[id] = std::vector<double>(row.begin(), row.end());
      continue;
    }
    std::vector<double> weights;
    double total = 0.0;
    for (int c : n.children) {
      double w = assigned_entropy(g, t, c);
      weights.push_back(w);
      total += w;
    }
    if (!(total > 0.0)) {
      weights.assign(n.children.size(), 1.0);
      total = static_cast<double>(n.children.size());
    }
    std::vector<double> rep(e.dimension, 0.0);
    for (std::size_t k = 0; k < n.children.size(); ++k) {
      const auto& child_rep = reps.at(n.children[k]);
      const double w = weights[k] / total;
      for (int d = 0; d < e.dimension; ++d) rep[d] += w * child_rep[d];
    }
    reps[id] = std::move(rep);
  }
  return reps;
}

// --- discrete abstraction ----------------------------------------------------

// Unique ancestor of `leaf` at the height-`level` cut: the highest node of
// height <= level on the root path (the root itself when the whole tree sits
// at or below the cut).
inline int ancestor_at_level(const EncodingTree& t, int leaf, int level) {
  int id = leaf;
  while (t.node(id).parent != -1 && t.node(t.node(id).parent).height <= level)
    id = t.node(id).parent;
  return id;
}

// Cluster ids (dense, by first appearance over ascending vertex index) at the
// height-`level` cut.
inline std::vector<int> discrete_abstraction(const EncodingTree& t, int level) {
  if (level < 1 || level > t.height() - 1)
    throw std::domain_error("abstraction level must be in [1, height - 1]");
  const int n = t.vertex_count();
  std::vector<int> leaf(n, -1);
  for (int id : t.alive_ids())
    if (t.is_leaf(id)) leaf[t.node(id).vertices[0]] = id;
  std::map<int, int> dense;
  std::vector<int> out(n, -1);
  for (int v = 0; v < n; ++v) {
    int a = ancestor_at_level(t, leaf[v], level);
    auto [it, fresh] = dense.try_emplace(a, static_cast<int>(dense.size()));
    (void)fresh;
    out[v] = it->second;
  }
  return out;
}

// Partition induced by the root's children, numbered in child order.
inline std::vector<int> root_children_partition(const EncodingTree& t) {
  std::vector<int> out(t.vertex_count(), -1);
  const auto& children = t.node(t.root()).children;
  for (std::size_t idx = 0; idx < children.size(); ++idx)
    for (int v : t.node(children[idx]).vertices) out[v] = static_cast<int>(idx);
  return out;
}

// --- trajectories and relation graphs ----------------------------------------

struct TrajectoryStep {
  std::string state;
  int action = 0;
  double reward = 0.0;
  std::string next_state;
};

struct TrajectoryLog {
  std::vector<TrajectoryStep> steps;
  int action_count = 0;
};

struct LevelRelations {
  std::optional<Graph> transition;
  std::optional<Graph> action;
  std::optional<Graph> reward;
};

struct RelationGraphs {
  std::vector<LevelRelations> levels;  // index = cut height h
};

namespace detail {
inline Graph relation_graph_from_pairs(
    const EncodingTree& t, const std::vector<std::string>& state_labels,
    const std::map<std::pair<int, int>, double>& pair_weights) {
  std::vector<int> nodes;
  for (const auto& [pair, w] : pair_weights) {
    (void)w;
    nodes.push_back(pair.first);
    nodes.push_back(pair.second);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::map<int, int> index;
  std::vector<std::string> labels;
  for (int id : nodes) {
    index[id] = static_cast<int>(labels.size());
    const TreeNode& n = t.node(id);
    labels.push_back(n.children.empty() ? state_labels[n.vertices[0]]
                                        : "c" + std::to_string(id));
  }
  std::vector<Edge> edges;
  for (const auto& [pair, w] : pair_weights)
    edges.push_back({index.at(pair.first), index.at(pair.second), w});
  return Graph(std::move(labels), std::move(edges));
}
}  // namespace detail

// Per cut height h in [0, levels): map every logged step onto the height-h
// clusters and build three weighted graphs over them.
//   transition: directional empirical P(v|u), averaged over both directions
//   action:     max over actions of empirical P(v|u,a), averaged likewise
//   reward:     min-max normalized mean reward per pair (0.5 when degenerate)
// Pairs with no observed mass get no edge; self-transitions count toward the
// source totals but never become edges.
inline RelationGraphs build_relation_graphs(
    const EncodingTree& t, const TrajectoryLog& log,
    const std::vector<std::string>& state_labels, int levels) {
  if (log.steps.empty()) throw std::invalid_argument("empty trajectory log");
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < state_labels.size(); ++i)
    index[state_labels[i]] = static_cast<int>(i);
  const int n = static_cast<int>(state_labels.size());
  std::vector<int> leaf(n, -1);
  for (int id : t.alive_ids())
    if (t.is_leaf(id)) leaf[t.node(id).vertices[0]] = id;
  auto resolve = [&](const std::string& label) {
    auto it = index.find(label);
    if (it == index.end())
      throw std::invalid_argument("trajectory state not in embedding set: " +
                                  label);
    return it->second;
  };

  RelationGraphs out;
  for (int h = 0; h < levels; ++h) {
    std::vector<int> anc(n);
    for (int v = 0; v < n; ++v) anc[v] = ancestor_at_level(t, leaf[v], h);

    std::map<std::pair<int, int>, long> dir_count;
    std::map<int, long> out_count;
    std::map<std::tuple<int, int, int>, long> act_dir;  // (u, a, v)
    std::map<std::pair<int, int>, long> act_total;      // (u, a)
    std::map<std::pair<int, int>, std::pair<double, long>> reward_stats;
    for (const TrajectoryStep& s : log.steps) {
      if (!std::isfinite(s.reward))
        throw std::invalid_argument("non-finite reward in trajectory");
      const int u = anc[resolve(s.state)];
      const int v = anc[resolve(s.next_state)];
      ++dir_count[{u, v}];
      ++out_count[u];
      ++act_dir[{u, s.action, v}];
      ++act_total[{u, s.action}];
      if (u != v) {
        auto& stat = reward_stats[{std::min(u, v), std::max(u, v)}];
        stat.first += s.reward;
        ++stat.second;
      }
    }

    auto dir_prob = [&](int u, int v) {
      auto it = dir_count.find({u, v});
      if (it == dir_count.end()) return 0.0;
      return static_cast<double>(it->second) / out_count.at(u);
    };
    auto best_action_prob = [&](int u, int v) {
      double best = 0.0;
      for (const auto& [key, total] : act_total) {
        if (key.first != u) continue;
        auto it = act_dir.find({u, key.second, v});
        if (it != act_dir.end())
          best = std::max(best, static_cast<double>(it->second) / total);
      }
      return best;
    };

    std::map<std::pair<int, int>, double> transition_w, action_w, reward_w;
    double reward_min = 0.0, reward_max = 0.0;
    bool first_reward = true;
    std::map<std::pair<int, int>, double> reward_mean;
    for (const auto& [pair, stat] : reward_stats) {
      double mean = stat.first / static_cast<double>(stat.second);
      reward_mean[pair] = mean;
      if (first_reward) {
        reward_min = reward_max = mean;
        first_reward = false;
      } else {
        reward_min = std::min(reward_min, mean);
        reward_max = std::max(reward_max, mean);
      }
    }
    for (const auto& [pair, mean] : reward_mean) {
      const auto [u, v] = pair;
      transition_w[pair] = 0.5 * (dir_prob(u, v) + dir_prob(v, u));
      action_w[pair] = 0.5 * (best_action_prob(u, v) + best_action_prob(v, u));
      if (reward_max > reward_min) {
        double nv = (mean - reward_min) / (reward_max - reward_min);
        reward_w[pair] = 1e-6 + (1.0 - 1e-6) * nv;
      } else {
        reward_w[pair] = 0.5;
      }
    }

    LevelRelations level;
    if (!transition_w.empty()) {
      level.transition =
          detail::relation_graph_from_pairs(t, state_labels, transition_w);
      level.action = detail::relation_graph_from_pairs(t, state_labels, action_w);
      level.reward = detail::relation_graph_from_pairs(t, state_labels, reward_w);
    }
    out.levels.push_back(std::move(level));
  }
  return out;
}

// --- relation reconstruction loss ---------------------------------------------

// Row i: the graph's weights from i to every other vertex (ascending, self
// excluded), normalized to sum to 1.
inline std::vector<std::vector<double>> normalized_weight_rows(const Graph& g) {
  const int n = g.vertex_count();
  std::vector<std::vector<double>> rows(n, std::vector<double>(n - 1, 0.0));
  for (int i = 0; i < n; ++i) {
    std::vector<double> w(n, 0.0);
    for (const auto& [j, weight] : g.neighbors(i)) w[j] = weight;
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += w[j];
    int k = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      rows[i][k++] = sum > 0.0 ? w[j] / sum : 0.0;
    }
  }
  return rows;
}

// Row i: conditional structural entropies from i to every other vertex,
// normalized per source into a probability vector.
inline std::vector<std::vector<double>> reconstructed_probability_rows(
    const Graph& g, const EncodingTree& t) {
  const int n = g.vertex_count();
  std::vector<int> leaf(n, -1);
  for (int id : t.alive_ids())
    if (t.is_leaf(id)) leaf[t.node(id).vertices[0]] = id;
  std::vector<std::vector<double>> rows(n, std::vector<double>(n - 1, 0.0));
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    int k = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      rows[i][k] = conditional_entropy(g, t, leaf[i], leaf[j]);
      sum += rows[i][k];
      ++k;
    }
    if (sum > 0.0)
      for (double& x : rows[i]) x /= sum;
    else
      for (double& x : rows[i]) x = 1.0 / (n - 1);
  }
  return rows;
}

// Mean over rows of the per-row mean squared difference.
inline double mean_row_mse(const std::vector<std::vector<double>>& a,
                           const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("row shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size() || a[i].empty())
      throw std::invalid_argument("row shape mismatch");
    double row = 0.0;
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      double d = a[i][j] - b[i][j];
      row += d * d;
    }
    total += row / static_cast<double>(a[i].size());
  }
  return total / static_cast<double>(a.size());
}

struct RelationLevelLoss {
  double transition = 0.0;
  double action = 0.0;
  double reward = 0.0;
};

struct RelationLoss {
  std::vector<RelationLevelLoss> levels;
  double total = 0.0;
};

// For every level and relation, optimize an encoding tree on the relation
// graph, reconstruct pairwise probabilities through conditional entropies,
// and score them against the empirical normalized weights. Graphs with fewer
// than two vertices contribute zero.
inline RelationLoss relation_loss(const RelationGraphs& rel,
                                  OptimizeConfig cfg = {}) {
  RelationLoss out;
  auto one = [&](const std::optional<Graph>& g) {
    if (!g || g->vertex_count() < 2) return 0.0;
    OptimizeResult res = optimize(*g, cfg);
    return mean_row_mse(reconstructed_probability_rows(*g, res.tree),
                        normalized_weight_rows(*g));
  };
  for (const LevelRelations& level : rel.levels) {
    RelationLevelLoss l;
    l.transition = one(level.transition);
    l.action = one(level.action);
    l.reward = one(level.reward);
    out.total += l.transition + l.action + l.reward;
    out.levels.push_back(l);
  }
  return out;
}

// --- end-to-end report ---------------------------------------------------------

struct AbstractionConfig {
  int k_cap = 3;
};

struct AbstractionReport {
  SparsifyResult sparsified;
  OptimizeResult optimized;
  std::vector<int> assignments;   // per state, root-children cut
  std::vector<int> center_nodes;  // root-child ids, aligned with centers
  std::vector<std::vector<double>> centers;
  std::vector<std::vector<double>> soft;    // Q
  std::vector<std::vector<double>> target;  // P
  double clustering_loss_value = 0.0;
  std::map<int, std::vector<double>> representations;
  std::optional<RelationLoss> relation;
};

// Similarity graph -> entropy-minimizing sparsification -> tree optimization
// -> cluster metrics (+ relation losses when a trajectory log is supplied).
inline AbstractionReport compute_abstraction(const EmbeddingSet& e,
                                             const TrajectoryLog* log,
                                             AbstractionConfig cfg = {}) {
  AbstractionReport report;
  if (e.count == 1) {
    // Single state: nothing to sparsify or cluster.
    report.sparsified.k_star = 0;
    report.sparsified.graph = Graph(e.labels, {});
    report.optimized.tree = EncodingTree::flat(1);
    report.assignments = {0};
    report.center_nodes = {0};
    auto row = e.row(0);
    report.centers = {std::vector<double>(row.begin(), row.end())};
    report.soft = {{1.0}};
    report.target = {{1.0}};
    report.representations = aggregate_representations(
        report.sparsified.graph, report.optimized.tree, e);
    if (log) {
      RelationGraphs rel = build_relation_graphs(report.optimized.tree, *log,
                                                 e.labels, cfg.k_cap);
      report.relation = relation_loss(rel, {cfg.k_cap});
    }
    return report;
  }
  Graph similarity = similarity_graph(e);
  report.sparsified = sparsify(similarity);
  report.optimized = optimize(report.sparsified.graph, {cfg.k_cap});
  const EncodingTree& tree = report.optimized.tree;
  report.assignments = root_children_partition(tree);
  report.center_nodes = tree.node(tree.root()).children;
  report.centers = cluster_centers(report.sparsified.graph, tree, e);
  report.soft = soft_assignment(e, report.centers);
  report.target = target_distribution(report.soft);
  report.clustering_loss_value = clustering_loss(report.target, report.soft);
  report.representations =
      aggregate_representations(report.sparsified.graph, tree, e);
  if (log) {
    RelationGraphs rel = build_relation_graphs(tree, *log, e.labels, cfg.k_cap);
    report.relation = relation_loss(rel, {cfg.k_cap});
  }
  return report;
}

}  // namespace setree
