#pragma once

// Offline gridworld benchmark: synthetic noisy observations per cell, the full
// abstraction pipeline, tabular Q-learning over the abstract states, and a
// shortest-path oracle plus adjusted Rand index for evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "setree/abstraction.hpp"
#include "setree/graph.hpp"

namespace setree {

struct GridworldSpec {
  int width = 6;
  int height = 6;
  int goal_x = 0;
  int goal_y = 0;
  double step_reward = -1.0;  // every action, including the one entering the goal
  int episode_cap = 100;
  double sigma = 0.0;       // expected observation-noise norm
  int observation_dim = 32;

  int cells() const { return width * height; }
  int goal_cell() const { return goal_y * width + goal_x; }

  void check() const {
    if (width < 1 || height < 1) throw std::invalid_argument("empty grid");
    if (goal_x < 0 || goal_x >= width || goal_y < 0 || goal_y >= height)
      throw std::invalid_argument("goal outside the grid");
    if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
    if (observation_dim < 1)
      throw std::invalid_argument("observation dimension must be positive");
  }

  // Actions 0..3: up, down, left, right; moves are clipped at the walls.
  int step_cell(int cell, int action) const {
    int x = cell % width, y = cell / width;
    switch (action) {
      case 0: y = std::max(0, y - 1); break;
      case 1: y = std::min(height - 1, y + 1); break;
      case 2: x = std::max(0, x - 1); break;
      case 3: x = std::min(width - 1, x + 1); break;
      default: throw std::domain_error("action out of range");
    }
    return y * width + x;
  }
};

inline constexpr int kGridActions = 4;

struct Observations {
  EmbeddingSet embeddings;
  std::vector<int> cell;  // ground-truth cell per row
};

// Each observation is a fixed random unit-norm feature of its cell plus
// Gaussian noise with expected norm sigma. Deterministic under the seed.
inline Observations generate_observations(const GridworldSpec& spec,
                                          int samples_per_cell,
                                          std::uint64_t seed) {
  spec.check();
  if (samples_per_cell < 1)
    throw std::invalid_argument("need at least one sample per cell");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int cells = spec.cells();
  const int dim = spec.observation_dim;
  std::vector<double> lift(static_cast<std::size_t>(cells) * dim);
  for (int c = 0; c < cells; ++c) {
    double norm2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      double x = gauss(rng);
      lift[static_cast<std::size_t>(c) * dim + d] = x;
      norm2 += x * x;
    }
    double norm = std::sqrt(norm2);
    for (int d = 0; d < dim; ++d)
      lift[static_cast<std::size_t>(c) * dim + d] /= norm;
  }
  const double noise_scale = spec.sigma / std::sqrt(static_cast<double>(dim));
  std::vector<std::string> labels;
  std::vector<double> data;
  std::vector<int> truth;
  labels.reserve(static_cast<std::size_t>(cells) * samples_per_cell);
  data.reserve(labels.capacity() * dim);
  for (int c = 0; c < cells; ++c) {
    const int x = c % spec.width, y = c / spec.width;
    for (int s = 0; s < samples_per_cell; ++s) {
      labels.push_back("c" + std::to_string(x) + "_" + std::to_string(y) + "s" +
                       std::to_string(s));
      truth.push_back(c);
      for (int d = 0; d < dim; ++d) {
        double noise = noise_scale > 0.0 ? noise_scale * gauss(rng) : 0.0;
        data.push_back(lift[static_cast<std::size_t>(c) * dim + d] + noise);
      }
    }
  }
  return {EmbeddingSet(std::move(labels), std::move(data), dim),
          std::move(truth)};
}

// Uniform-random-policy rollouts recorded as observation-labeled steps; each
// visit draws one of the cell's observation rows.
inline TrajectoryLog random_walk_log(const GridworldSpec& spec,
                                     const Observations& obs, int episodes,
                                     std::uint64_t seed) {
  spec.check();
  if (episodes < 1) throw std::invalid_argument("need at least one episode");
  const int cells = spec.cells();
  const int samples = obs.embeddings.count / cells;
  std::vector<int> non_goal;
  for (int c = 0; c < cells; ++c)
    if (c != spec.goal_cell()) non_goal.push_back(c);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_action(0, kGridActions - 1);
  std::uniform_int_distribution<int> pick_sample(0, samples - 1);
  auto label_of = [&](int cell) {
    return obs.embeddings.labels[static_cast<std::size_t>(cell) * samples +
                                 pick_sample(rng)];
  };
  TrajectoryLog log;
  log.action_count = kGridActions;
  for (int e = 0; e < episodes; ++e) {
    int cell = non_goal.empty()
                   ? spec.goal_cell()
                   : non_goal[std::uniform_int_distribution<int>(
                         0, static_cast<int>(non_goal.size()) - 1)(rng)];
    for (int t = 0; t < spec.episode_cap; ++t) {
      int a = pick_action(rng);
      int next = spec.step_cell(cell, a);
      log.steps.push_back({label_of(cell), a, spec.step_reward, label_of(next)});
      cell = next;
      if (cell == spec.goal_cell()) break;
    }
  }
  return log;
}

struct QConfig {
  double learning_rate = 0.1;
  double discount = 0.99;
  double epsilon_start = 1.0;
  double epsilon_final = 0.05;
  int episodes = 2000;
  int eval_episodes = 100;
};

struct QTable {
  int state_count = 0;
  int action_count = kGridActions;
  std::vector<double> values;  // state * action_count + action
  double learning_rate = 0.0;
  double discount = 0.0;
  double epsilon_final = 0.0;

  double at(int state, int action) const {
    return values[static_cast<std::size_t>(state) * action_count + action];
  }
  double& at(int state, int action) {
    return values[static_cast<std::size_t>(state) * action_count + action];
  }
  int greedy_action(int state) const {
    int best = 0;
    for (int a = 1; a < action_count; ++a)
      if (at(state, a) > at(state, best)) best = a;
    return best;
  }
};

struct QTrainResult {
  QTable table;
  std::vector<double> reward_curve;  // per-training-episode total reward
  double eval_mean_reward = 0.0;
  bool goal_reached = false;  // any evaluation episode reached the goal
};

// Epsilon-greedy tabular Q-learning over abstract states (cell -> abstract id),
// evaluated with the greedy policy over fresh random starts. A degenerate
// abstraction that never reaches the goal is reported, not thrown.
inline QTrainResult train_q(const GridworldSpec& spec,
                            const std::vector<int>& cell_abstraction,
                            QConfig cfg, std::uint64_t seed) {
  spec.check();
  if (static_cast<int>(cell_abstraction.size()) != spec.cells())
    throw std::invalid_argument("abstraction must cover every cell");
  int states = 0;
  for (int z : cell_abstraction) {
    if (z < 0) throw std::invalid_argument("negative abstract state");
    states = std::max(states, z + 1);
  }
  QTrainResult result;
  result.table.state_count = states;
  result.table.values.assign(static_cast<std::size_t>(states) * kGridActions,
                             0.0);
  result.table.learning_rate = cfg.learning_rate;
  result.table.discount = cfg.discount;
  result.table.epsilon_final = cfg.epsilon_final;
  std::vector<int> non_goal;
  for (int c = 0; c < spec.cells(); ++c)
    if (c != spec.goal_cell()) non_goal.push_back(c);
  if (non_goal.empty()) return result;  // 1x1 grid: nothing to learn

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_start(
      0, static_cast<int>(non_goal.size()) - 1);
  std::uniform_int_distribution<int> pick_action(0, kGridActions - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  QTable& q = result.table;
  for (int e = 0; e < cfg.episodes; ++e) {
    const double frac =
        cfg.episodes > 1 ? static_cast<double>(e) / (cfg.episodes - 1) : 1.0;
    const double eps =
        cfg.epsilon_start + (cfg.epsilon_final - cfg.epsilon_start) * frac;
    int cell = non_goal[pick_start(rng)];
    double total = 0.0;
    for (int t = 0; t < spec.episode_cap; ++t) {
      const int z = cell_abstraction[cell];
      const int a = unit(rng) < eps ? pick_action(rng) : q.greedy_action(z);
      const int next = spec.step_cell(cell, a);
      const double r = spec.step_reward;
      total += r;
      const bool terminal = next == spec.goal_cell();
      const int z2 = cell_abstraction[next];
      double best_next = 0.0;
      if (!terminal) {
        best_next = q.at(z2, q.greedy_action(z2));
      }
      q.at(z, a) += cfg.learning_rate *
                    (r + cfg.discount * best_next - q.at(z, a));
      cell = next;
      if (terminal) break;
    }
    result.reward_curve.push_back(total);
  }

  std::mt19937_64 eval_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<int> pick_eval(
      0, static_cast<int>(non_goal.size()) - 1);
  double sum = 0.0;
  for (int e = 0; e < cfg.eval_episodes; ++e) {
    int cell = non_goal[pick_eval(eval_rng)];
    double total = 0.0;
    for (int t = 0; t < spec.episode_cap; ++t) {
      const int a = q.greedy_action(cell_abstraction[cell]);
      cell = spec.step_cell(cell, a);
      total += spec.step_reward;
      if (cell == spec.goal_cell()) {
        result.goal_reached = true;
        break;
      }
    }
    sum += total;
  }
  result.eval_mean_reward = cfg.eval_episodes > 0 ? sum / cfg.eval_episodes : 0.0;
  return result;
}

// Expected optimal return over uniform random non-goal starts: -(mean BFS
// distance to the goal), the value-iteration fixed point for -1-per-step
// rewards with an absorbing goal.
inline double optimal_mean_return(const GridworldSpec& spec) {
  spec.check();
  const int cells = spec.cells();
  std::vector<int> dist(cells, -1);
  dist[spec.goal_cell()] = 0;
  std::deque<int> q{spec.goal_cell()};
  while (!q.empty()) {
    int c = q.front();
    q.pop_front();
    int x = c % spec.width, y = c / spec.width;
    const int nx[] = {x, x, x - 1, x + 1};
    const int ny[] = {y - 1, y + 1, y, y};
    for (int i = 0; i < 4; ++i) {
      if (nx[i] < 0 || nx[i] >= spec.width || ny[i] < 0 || ny[i] >= spec.height)
        continue;
      int n = ny[i] * spec.width + nx[i];
      if (dist[n] == -1) {
        dist[n] = dist[c] + 1;
        q.push_back(n);
      }
    }
  }
  long total = 0;
  int count = 0;
  for (int c = 0; c < cells; ++c) {
    if (c == spec.goal_cell()) continue;
    total += dist[c];
    ++count;
  }
  return count > 0 ? spec.step_reward * static_cast<double>(total) / count : 0.0;
}

// Chance-corrected agreement between two labelings of the same items.
inline double adjusted_rand_index(const std::vector<int>& a,
                                  const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("partitions must label the same items");
  std::map<std::pair<int, int>, long> contingency;
  std::map<int, long> row, col;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++contingency[{a[i], b[i]}];
    ++row[a[i]];
    ++col[b[i]];
  }
  auto choose2 = [](long n) { return 0.5 * n * (n - 1); };
  double index = 0.0, row_sum = 0.0, col_sum = 0.0;
  for (const auto& [k, v] : contingency) {
    (void)k;
    index += choose2(v);
  }
  for (const auto& [k, v] : row) {
    (void)k;
    row_sum += choose2(v);
  }
  for (const auto& [k, v] : col) {
    (void)k;
    col_sum += choose2(v);
  }
  const double pairs = choose2(static_cast<long>(a.size()));
  const double expected = pairs > 0.0 ? row_sum * col_sum / pairs : 0.0;
  const double maximum = 0.5 * (row_sum + col_sum);
  if (maximum == expected) {
    // Both partitions trivial in the same way (all-singletons or one block).
    return contingency.size() == row.size() && contingency.size() == col.size()
               ? 1.0
               : 0.0;
  }
  return (index - expected) / (maximum - expected);
}

struct PipelineResult {
  AbstractionReport report;
  double ari = 0.0;
  std::vector<int> cell_clusters;  // majority cluster per cell
};

// Majority cluster per cell over its observations, ties to the smaller id.
inline std::vector<int> majority_cell_clusters(const Observations& obs,
                                               const std::vector<int>& assignments,
                                               int cells) {
  std::vector<std::map<int, int>> votes(cells);
  for (std::size_t i = 0; i < obs.cell.size(); ++i)
    ++votes[obs.cell[i]][assignments[i]];
  std::vector<int> out(cells, 0);
  for (int c = 0; c < cells; ++c) {
    int best = 0, best_count = -1;
    for (const auto& [cluster, count] : votes[c])
      if (count > best_count) {
        best = cluster;
        best_count = count;
      }
    out[c] = best;
  }
  return out;
}

// Full offline abstraction over generated observations, scored against the
// generative cell labels.
inline PipelineResult run_pipeline(const Observations& obs,
                                   const TrajectoryLog* log,
                                   AbstractionConfig cfg = {}) {
  PipelineResult result;
  result.report = compute_abstraction(obs.embeddings, log, cfg);
  result.ari = adjusted_rand_index(result.report.assignments, obs.cell);
  const int cells = 1 + *std::max_element(obs.cell.begin(), obs.cell.end());
  result.cell_clusters =
      majority_cell_clusters(obs, result.report.assignments, cells);
  return result;
}

}  // namespace setree
