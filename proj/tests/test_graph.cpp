#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "setree/graph.hpp"
#include "test_util.hpp"

using namespace setree;
using Catch::Matchers::WithinAbs;

TEST_CASE("degree sums incident weights") {
  Graph tri = testutil::triangle();
  CHECK(tri.degree(0) == 2.0);
  CHECK(tri.degree(1) == 2.0);

  Graph with_isolated(3, {{0, 1, 1.0}});
  CHECK(with_isolated.degree(2) == 0.0);

  Graph star(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
  CHECK(star.degree(0) == 3.0);

  CHECK_THROWS_AS(tri.degree(3), std::out_of_range);
  CHECK_THROWS_AS(tri.degree(-1), std::out_of_range);
}

TEST_CASE("volume is twice the edge weight sum") {
  CHECK(testutil::triangle().volume() == 6.0);
  CHECK(Graph(2, {{0, 1, 0.5}}).volume() == 1.0);
  CHECK(Graph(3, {}).volume() == 0.0);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Graph g = testutil::random_connected_graph(rng, 3 + trial % 10);
    double edge_sum = 0.0;
    for (const Edge& e : g.edges()) edge_sum += e.w;
    CHECK(g.volume() == 2.0 * edge_sum);
  }
}

TEST_CASE("graph construction validates its input") {
  CHECK_THROWS_AS(Graph(2, {{0, 0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph(2, {{0, 1, 1.0}, {1, 0, 2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph(2, {{0, 1, -1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph(2, {{0, 1, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph(2, {{0, 2, 1.0}}), std::invalid_argument);
  // endpoint order is normalized
  Graph g(3, {{2, 0, 0.5}});
  CHECK(g.edges()[0].u == 0);
  CHECK(g.edges()[0].v == 2);
}

TEST_CASE("similarity graph from embeddings") {
  SECTION("identical vectors") {
    EmbeddingSet e({"a", "b"}, {1.0, 0.0, 1.0, 0.0}, 2);
    Graph g = similarity_graph(e);
    REQUIRE(g.edges().size() == 1);
    CHECK_THAT(g.edges()[0].w, WithinAbs(1.0, 1e-15));
  }
  SECTION("orthogonal vectors produce no edge") {
    EmbeddingSet e({"a", "b"}, {1.0, 0.0, 0.0, 1.0}, 2);
    Graph g = similarity_graph(e);
    CHECK(g.edges().empty());
  }
  SECTION("opposite vectors keep |cos| = 1") {
    EmbeddingSet e({"a", "b"}, {1.0, 0.0, -1.0, 0.0}, 2);
    Graph g = similarity_graph(e);
    REQUIRE(g.edges().size() == 1);
    CHECK_THAT(g.edges()[0].w, WithinAbs(1.0, 1e-15));
  }
  SECTION("zero-norm rows are rejected") {
    CHECK_THROWS_AS(EmbeddingSet({"a", "b"}, {1.0, 0.0, 0.0, 0.0}, 2),
                    std::invalid_argument);
  }
  SECTION("non-finite rows are rejected") {
    CHECK_THROWS_AS(
        EmbeddingSet({"a"}, {std::numeric_limits<double>::infinity()}, 1),
        std::invalid_argument);
  }
}

TEST_CASE("similarity weights lie in (floor, 1]") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 12, dim = 5;
  std::vector<double> data(n * dim);
  for (double& x : data) x = gauss(rng);
  EmbeddingSet e(std::vector<std::string>(n, ""), data, dim);
  for (int i = 0; i < n; ++i) e.labels[i] = "s" + std::to_string(i);
  Graph g = similarity_graph(e);
  for (const Edge& edge : g.edges()) {
    CHECK(edge.w > kEdgeWeightFloor);
    CHECK(edge.w <= 1.0);
  }
}

TEST_CASE("similarity graph is permutation invariant") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 9, dim = 4;
  std::vector<std::string> labels;
  std::vector<double> data(n * dim);
  for (int i = 0; i < n; ++i) labels.push_back("s" + std::to_string(i));
  for (double& x : data) x = gauss(rng);
  EmbeddingSet e(labels, data, dim);

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::string> plabels(n);
  std::vector<double> pdata(n * dim);
  for (int i = 0; i < n; ++i) {
    plabels[i] = labels[perm[i]];
    for (int d = 0; d < dim; ++d) pdata[i * dim + d] = data[perm[i] * dim + d];
  }
  EmbeddingSet pe(plabels, pdata, dim);

  auto weights = [](const Graph& g) {
    std::vector<double> w;
    for (const Edge& e : g.edges()) w.push_back(e.w);
    std::sort(w.begin(), w.end());
    return w;
  };
  CHECK(weights(similarity_graph(e)) == weights(similarity_graph(pe)));
}

TEST_CASE("connected components and induced subgraphs") {
  Graph g(5, {{0, 1, 1.0}, {1, 2, 0.5}, {3, 4, 2.0}});
  auto comps = connected_components(g);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0] == std::vector<int>{0, 1, 2});
  CHECK(comps[1] == std::vector<int>{3, 4});

  Graph sub = induced_subgraph(g, comps[1]);
  CHECK(sub.vertex_count() == 2);
  REQUIRE(sub.edges().size() == 1);
  CHECK(sub.edges()[0].w == 2.0);
  CHECK(sub.labels()[0] == "3");
}
