#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "setree/gridworld.hpp"

using namespace setree;
using Catch::Matchers::WithinAbs;

TEST_CASE("observation generation") {
  GridworldSpec spec;
  SECTION("sigma zero duplicates each cell's feature") {
    Observations obs = generate_observations(spec, 5, 7);
    CHECK(obs.embeddings.count == 180);
    for (int c = 0; c < spec.cells(); ++c) {
      auto first = obs.embeddings.row(c * 5);
      for (int s = 1; s < 5; ++s) {
        auto other = obs.embeddings.row(c * 5 + s);
        for (int d = 0; d < spec.observation_dim; ++d)
          CHECK(first[d] == other[d]);
      }
    }
  }
  SECTION("distinct cells get distinct features") {
    Observations obs = generate_observations(spec, 1, 7);
    for (int a = 0; a < 6; ++a)
      for (int b = a + 1; b < 6; ++b) {
        double diff = 0.0;
        for (int d = 0; d < spec.observation_dim; ++d)
          diff += std::abs(obs.embeddings.row(a)[d] - obs.embeddings.row(b)[d]);
        CHECK(diff > 1e-6);
      }
  }
  SECTION("deterministic under the seed") {
    Observations a = generate_observations(spec, 3, 11);
    Observations b = generate_observations(spec, 3, 11);
    CHECK(a.embeddings.data == b.embeddings.data);
    CHECK(a.embeddings.labels == b.embeddings.labels);
  }
}

TEST_CASE("shortest-path oracle") {
  GridworldSpec spec;
  // mean Manhattan distance to the corner over the 35 non-goal cells
  CHECK_THAT(optimal_mean_return(spec), WithinAbs(-180.0 / 35.0, 1e-12));
}

TEST_CASE("tabular Q-learning") {
  GridworldSpec spec;
  SECTION("identity abstraction converges near the oracle") {
    std::vector<int> identity(spec.cells());
    for (int c = 0; c < spec.cells(); ++c) identity[c] = c;
    QTrainResult r = train_q(spec, identity, {}, 5);
    CHECK(r.goal_reached);
    CHECK_THAT(r.eval_mean_reward, WithinAbs(optimal_mean_return(spec), 0.5));
  }
  SECTION("constant abstraction cannot beat a blind policy") {
    std::vector<int> constant(spec.cells(), 0);
    QTrainResult r = train_q(spec, constant, {}, 5);
    CHECK(r.eval_mean_reward <= -40.0);
  }
  SECTION("reward curve is bounded by the episode cap") {
    std::vector<int> identity(spec.cells());
    for (int c = 0; c < spec.cells(); ++c) identity[c] = c;
    QTrainResult r = train_q(spec, identity, {}, 9);
    for (double reward : r.reward_curve) {
      CHECK(reward <= 0.0);
      CHECK(reward >= -static_cast<double>(spec.episode_cap));
    }
  }
  SECTION("bitwise deterministic under the seed") {
    std::vector<int> identity(spec.cells());
    for (int c = 0; c < spec.cells(); ++c) identity[c] = c;
    QTrainResult a = train_q(spec, identity, {}, 3);
    QTrainResult b = train_q(spec, identity, {}, 3);
    CHECK(a.reward_curve == b.reward_curve);
    CHECK(a.table.values == b.table.values);
    CHECK(a.eval_mean_reward == b.eval_mean_reward);
  }
}

TEST_CASE("noise-free pipeline recovers the cells exactly") {
  GridworldSpec spec;
  Observations obs = generate_observations(spec, 5, 1);
  PipelineResult r = run_pipeline(obs, nullptr, {3});
  CHECK(r.ari == 1.0);
  SECTION("the induced abstract MDP is bisimilar to the grid") {
    std::set<int> clusters(r.cell_clusters.begin(), r.cell_clusters.end());
    CHECK(clusters.size() == static_cast<std::size_t>(spec.cells()));
    // cluster-level transitions are single-valued and mirror the grid moves
    std::map<std::pair<int, int>, int> abstract_step;
    for (int c = 0; c < spec.cells(); ++c)
      for (int a = 0; a < kGridActions; ++a) {
        int z = r.cell_clusters[c];
        int z2 = r.cell_clusters[spec.step_cell(c, a)];
        auto [it, fresh] = abstract_step.try_emplace({z, a}, z2);
        if (!fresh) CHECK(it->second == z2);
      }
  }
}

TEST_CASE("moderate noise keeps the clustering close to the cells") {
  GridworldSpec spec;
  spec.sigma = 0.1;
  Observations obs = generate_observations(spec, 5, 2);
  PipelineResult r = run_pipeline(obs, nullptr, {3});
  CHECK(r.ari >= 0.8);
}

TEST_CASE("degenerate single-cell world") {
  GridworldSpec spec;
  spec.width = 1;
  spec.height = 1;
  Observations obs = generate_observations(spec, 1, 4);
  PipelineResult r = run_pipeline(obs, nullptr, {3});
  CHECK(r.report.assignments == std::vector<int>{0});
  CHECK(r.ari == 1.0);
  QTrainResult q = train_q(spec, r.cell_clusters, {}, 4);
  CHECK(q.reward_curve.empty());
  CHECK(q.eval_mean_reward == 0.0);
}

TEST_CASE("adjusted Rand index") {
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == 1.0);
  CHECK(adjusted_rand_index({0, 1, 2, 3}, {3, 2, 1, 0}) == 1.0);
  CHECK(adjusted_rand_index({0, 0, 0, 0}, {2, 2, 2, 2}) == 1.0);
  CHECK_THAT(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}),
             WithinAbs(-0.5, 1e-12));
  // refining a partition loses agreement
  double refined = adjusted_rand_index({0, 0, 1, 1, 2, 2}, {0, 1, 2, 2, 3, 3});
  CHECK(refined < 1.0);
  CHECK(refined > 0.0);
  CHECK_THROWS_AS(adjusted_rand_index({0}, {0, 1}), std::invalid_argument);
}

TEST_CASE("random walk log covers the grid deterministically") {
  GridworldSpec spec;
  spec.width = 3;
  spec.height = 3;
  Observations obs = generate_observations(spec, 2, 6);
  TrajectoryLog a = random_walk_log(spec, obs, 10, 6);
  TrajectoryLog b = random_walk_log(spec, obs, 10, 6);
  REQUIRE(a.steps.size() == b.steps.size());
  CHECK(a.action_count == kGridActions);
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].state == b.steps[i].state);
    CHECK(a.steps[i].action == b.steps[i].action);
    CHECK(a.steps[i].next_state == b.steps[i].next_state);
  }
}
