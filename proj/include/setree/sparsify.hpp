#pragma once

// k-NN sparsification of a similarity graph, with k selected by minimizing
// one-dimensional structural entropy over a bounded sweep.

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

#include "setree/entropy.hpp"
#include "setree/graph.hpp"

namespace setree {

// Sweep bound: candidate k runs over 1..min(n-1, kMaxNeighbors).
inline constexpr int kMaxNeighbors = 32;

struct SparsifyResult {
  int k_star = 0;
  Graph graph;
  std::vector<std::pair<int, double>> entropy_curve;  // (k, H1)
};

// Keep an edge iff it ranks among the top-k weights of either endpoint
// (union symmetrization). Ranking is by weight descending, ties broken by the
// smaller neighbor index. Weights are unchanged.
inline Graph knn_graph(const Graph& g, int k) {
  const int n = g.vertex_count();
  if (k < 1 || k > n - 1)
    throw std::domain_error("k must be in [1, vertex_count - 1]");
  std::vector<char> keep(g.edges().size(), 0);
  // edge id lookup per vertex: adjacency order matches nothing stable, so
  // collect (weight, neighbor, edge id) per vertex from the edge list.
  std::vector<std::vector<std::pair<double, std::pair<int, int>>>> inc(n);
  for (std::size_t i = 0; i < g.edges().size(); ++i) {
    const Edge& e = g.edges()[i];
    inc[e.u].push_back({e.w, {e.v, static_cast<int>(i)}});
    inc[e.v].push_back({e.w, {e.u, static_cast<int>(i)}});
  }
  for (int v = 0; v < n; ++v) {
    auto& list = inc[v];
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first
                                : a.second.first < b.second.first;
    });
    const int take = std::min<int>(k, static_cast<int>(list.size()));
    for (int i = 0; i < take; ++i) keep[list[i].second.second] = 1;
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < g.edges().size(); ++i)
    if (keep[i]) edges.push_back(g.edges()[i]);
  return Graph(g.labels(), std::move(edges));
}

// Evaluate H1(knn_graph(g, k)) for k = 1..k_max, skip candidates that isolate
// a vertex, and return the argmin (smallest k on ties) with the full curve.
inline SparsifyResult sparsify(const Graph& g) {
  const int n = g.vertex_count();
  if (n < 2) throw std::invalid_argument("sparsify needs at least two vertices");
  const int k_max = std::min(n - 1, kMaxNeighbors);
  SparsifyResult result;
  bool found = false;
  double best = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    Graph candidate = knn_graph(g, k);
    if (!(candidate.min_degree() > 0.0)) continue;
    double h = one_dim_entropy(candidate);
    result.entropy_curve.push_back({k, h});
    if (!found || h < best) {
      found = true;
      best = h;
      result.k_star = k;
      result.graph = std::move(candidate);
    }
  }
  if (!found)
    throw std::invalid_argument(
        "every k-NN candidate leaves an isolated vertex");
  return result;
}

}  // namespace setree
