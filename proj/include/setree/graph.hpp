#pragma once

// Weighted undirected graphs over labeled vertices, embedding sets, and the
// cosine-similarity graph construction. Graphs are immutable once built and
// safe to read from many threads.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "setree/core.hpp"

namespace setree {

struct Edge {
  int u = 0;
  int v = 0;
  double w = 0.0;  // strictly positive
};

class Graph {
 public:
  Graph() = default;

  Graph(int vertex_count, std::vector<Edge> edges)
      : Graph(default_labels(vertex_count), std::move(edges)) {}

  Graph(std::vector<std::string> labels, std::vector<Edge> edges)
      : labels_(std::move(labels)), edges_(std::move(edges)) {
    if (labels_.empty())
      throw std::invalid_argument("graph needs at least one vertex");
    const int n = static_cast<int>(labels_.size());
    for (Edge& e : edges_) {
      if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
        throw std::invalid_argument("edge endpoint out of range");
      if (e.u == e.v) throw std::invalid_argument("self-loops are not allowed");
      if (!(e.w > 0.0) || !std::isfinite(e.w))
        throw std::invalid_argument("edge weights must be positive and finite");
      if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
      return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    for (std::size_t i = 1; i < edges_.size(); ++i)
      if (edges_[i - 1].u == edges_[i].u && edges_[i - 1].v == edges_[i].v)
        throw std::invalid_argument("duplicate edge");

    degree_.assign(n, 0.0);
    adjacency_.assign(n, {});
    double edge_sum = 0.0;
    for (const Edge& e : edges_) {
      degree_[e.u] += e.w;
      degree_[e.v] += e.w;
      adjacency_[e.u].emplace_back(e.v, e.w);
      adjacency_[e.v].emplace_back(e.u, e.w);
      edge_sum += e.w;
    }
    volume_ = 2.0 * edge_sum;
  }

  int vertex_count() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Neighbors of v as (vertex, weight), ascending by vertex index.
  const std::vector<std::pair<int, double>>& neighbors(int v) const {
    check_vertex(v);
    return adjacency_[v];
  }

  double degree(int v) const {
    check_vertex(v);
    return degree_[v];
  }

  // Sum of all degrees; exactly twice the stored edge weight sum.
  double volume() const { return volume_; }

  double min_degree() const {
    double m = degree_.empty() ? 0.0 : degree_[0];
    for (double d : degree_) m = std::min(m, d);
    return m;
  }

  int label_index(const std::string& label) const {
    for (int i = 0; i < vertex_count(); ++i)
      if (labels_[i] == label) return i;
    throw std::invalid_argument("unknown vertex label: " + label);
  }

 private:
  static std::vector<std::string> default_labels(int n) {
    std::vector<std::string> labels;
    labels.reserve(std::max(n, 0));
    for (int i = 0; i < n; ++i) labels.push_back(std::to_string(i));
    return labels;
  }

  void check_vertex(int v) const {
    if (v < 0 || v >= vertex_count())
      throw std::out_of_range("vertex index out of range");
  }

  std::vector<std::string> labels_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
  std::vector<double> degree_;
  double volume_ = 0.0;
};

// Connected components, ordered by smallest contained vertex; vertices inside
// each component are ascending.
inline std::vector<std::vector<int>> connected_components(const Graph& g) {
  const int n = g.vertex_count();
  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n; ++s) {
    if (comp[s] != -1) continue;
    std::vector<int> stack{s};
    std::vector<int> members;
    comp[s] = static_cast<int>(out.size());
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      members.push_back(v);
      for (const auto& [u, w] : g.neighbors(v)) {
        (void)w;
        if (comp[u] == -1) {
          comp[u] = comp[s];
          stack.push_back(u);
        }
      }
    }
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  return out;
}

// Subgraph induced by `vertices` (ascending); labels are preserved and
// indices are remapped densely in the given order.
inline Graph induced_subgraph(const Graph& g, const std::vector<int>& vertices) {
  std::vector<int> remap(g.vertex_count(), -1);
  std::vector<std::string> labels;
  labels.reserve(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    remap[vertices[i]] = static_cast<int>(i);
    labels.push_back(g.labels()[vertices[i]]);
  }
  std::vector<Edge> edges;
  for (const Edge& e : g.edges())
    if (remap[e.u] != -1 && remap[e.v] != -1)
      edges.push_back({remap[e.u], remap[e.v], e.w});
  return Graph(std::move(labels), std::move(edges));
}

// Per-state real vectors, row-major. Rows must be finite and nonzero so that
// cosine similarity is always defined.
struct EmbeddingSet {
  int count = 0;
  int dimension = 0;
  std::vector<double> data;  // count * dimension
  std::vector<std::string> labels;

  EmbeddingSet() = default;
  EmbeddingSet(std::vector<std::string> row_labels, std::vector<double> values,
               int dim)
      : count(static_cast<int>(row_labels.size())),
        dimension(dim),
        data(std::move(values)),
        labels(std::move(row_labels)) {
    if (count < 1 || dimension < 1)
      throw std::invalid_argument("embedding set must be non-empty");
    if (static_cast<int>(data.size()) != count * dimension)
      throw std::invalid_argument("embedding data size mismatch");
    for (int i = 0; i < count; ++i) {
      double norm2 = 0.0;
      for (int d = 0; d < dimension; ++d) {
        double x = data[static_cast<std::size_t>(i) * dimension + d];
        if (!std::isfinite(x))
          throw std::invalid_argument("non-finite embedding entry in row " +
                                      labels[i]);
        norm2 += x * x;
      }
      if (norm2 == 0.0)
        throw std::invalid_argument("zero-norm embedding row " + labels[i]);
    }
  }

  std::span<const double> row(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * dimension,
            static_cast<std::size_t>(dimension)};
  }
};

inline double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("cosine of zero-norm vector");
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

// Complete graph over the embedding rows weighted by |cosine|; edges whose
// magnitude is at or below the weight floor are omitted.
inline Graph similarity_graph(const EmbeddingSet& e) {
  if (e.count < 2)
    throw std::invalid_argument("similarity graph needs at least two rows");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(e.count) * (e.count - 1) / 2);
  for (int i = 0; i < e.count; ++i)
    for (int j = i + 1; j < e.count; ++j) {
      double w = std::abs(cosine(e.row(i), e.row(j)));
      if (w > kEdgeWeightFloor) edges.push_back({i, j, w});
    }
  return Graph(e.labels, std::move(edges));
}

}  // namespace setree
