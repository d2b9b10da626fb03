// Command-line front end: deterministic, file-based wiring of the graph,
// sparsifier, tree-optimizer, abstraction, and gridworld stages.
//
// Exit codes: 0 success, 2 input error, 3 internal error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "setree/abstraction.hpp"
#include "setree/core.hpp"
#include "setree/entropy.hpp"
#include "setree/graph.hpp"
#include "setree/gridworld.hpp"
#include "setree/io.hpp"
#include "setree/optimize.hpp"
#include "setree/sparsify.hpp"

namespace fs = std::filesystem;
using namespace setree;

namespace {

void cmd_entropy(const std::string& path) {
  Graph g = read_edge_list(path);
  std::printf("%s\n", format6(one_dim_entropy(g)).c_str());
}

void cmd_sparsify(const std::string& path, const std::string& out_dir) {
  EmbeddingSet e = read_embeddings_csv(path);
  Graph similarity = similarity_graph(e);
  SparsifyResult result = sparsify(similarity);
  fs::create_directories(out_dir);
  write_edge_list((fs::path(out_dir) / "sparse.tsv").string(), result.graph);
  std::ofstream curve =
      detail::open_output((fs::path(out_dir) / "curve.csv").string());
  curve << "k,entropy\n";
  for (const auto& [k, h] : result.entropy_curve)
    curve << k << ',' << format6(h) << '\n';
  std::printf("%d\n", result.k_star);
}

void print_operator_log(const OptimizeResult& result) {
  std::printf("initial_entropy,final_entropy\n%s,%s\n",
              format6(result.initial_entropy).c_str(),
              format6(result.final_entropy).c_str());
  std::printf("step,kind,beta1,beta2,delta\n");
  for (const OpLogEntry& e : result.log)
    std::printf("%d,%s,%d,%d,%s\n", e.step, op_kind_name(e.kind), e.beta1,
                e.beta2, format6(e.delta).c_str());
}

void write_tree_file(const std::string& path, const EncodingTree& tree,
                     const std::vector<std::string>& labels, std::uint64_t seed) {
  json j = tree_to_json(tree, labels);
  j["header"] = {{"seed", seed}, {"version", kVersion}};
  std::ofstream out = detail::open_output(path);
  out << j.dump(2) << '\n';
}

void cmd_optimize(const std::string& path, int k_cap, std::uint64_t seed,
                  const std::string& out_path) {
  Graph g = read_edge_list(path);
  OptimizeResult result = optimize(g, {k_cap, 0});
  write_tree_file(out_path, result.tree, g.labels(), seed);
  print_operator_log(result);
}

void cmd_abstract(const std::string& embeddings_path,
                  const std::string& trajectory_path, int k_cap,
                  std::uint64_t seed, const std::string& out_dir) {
  EmbeddingSet e = read_embeddings_csv(embeddings_path);
  TrajectoryLog log = read_trajectory_jsonl(trajectory_path);
  AbstractionReport report = compute_abstraction(e, &log, {k_cap});
  fs::create_directories(out_dir);
  std::ofstream out =
      detail::open_output((fs::path(out_dir) / "report.json").string());
  out << report_to_json(report, e.labels, seed).dump(2) << '\n';
  write_tree_file((fs::path(out_dir) / "tree.json").string(),
                  report.optimized.tree, e.labels, seed);
}

struct DemoOptions {
  int width = 6;
  int height = 6;
  double sigma = 0.0;
  int samples = 5;
  int k_cap = 3;
  int episodes = 2000;
  int walk_episodes = 20;
  std::uint64_t seed = 0;
  std::string out_dir;
};

void cmd_demo(const DemoOptions& opt) {
  GridworldSpec spec;
  spec.width = opt.width;
  spec.height = opt.height;
  spec.sigma = opt.sigma;
  spec.check();
  Observations obs = generate_observations(spec, opt.samples, opt.seed);
  TrajectoryLog log = random_walk_log(spec, obs, opt.walk_episodes, opt.seed + 1);
  PipelineResult pipeline = run_pipeline(obs, &log, {opt.k_cap});
  QConfig qcfg;
  qcfg.episodes = opt.episodes;
  QTrainResult q = train_q(spec, pipeline.cell_clusters, qcfg, opt.seed + 2);

  fs::create_directories(opt.out_dir);
  json j = report_to_json(pipeline.report, obs.embeddings.labels, opt.seed);
  j["ari"] = round6(pipeline.ari);
  j["goal_reached"] = q.goal_reached;
  j["mean_eval_reward"] = round6(q.eval_mean_reward);
  std::ofstream report =
      detail::open_output((fs::path(opt.out_dir) / "report.json").string());
  report << j.dump(2) << '\n';
  write_tree_file((fs::path(opt.out_dir) / "tree.json").string(),
                  pipeline.report.optimized.tree, obs.embeddings.labels,
                  opt.seed);
  std::ofstream curve = detail::open_output(
      (fs::path(opt.out_dir) / "reward_curve.csv").string());
  curve << "episode,reward\n";
  for (std::size_t i = 0; i < q.reward_curve.size(); ++i)
    curve << i << ',' << format6(q.reward_curve[i]) << '\n';
  std::printf("ari=%s\n", format6(pipeline.ari).c_str());
  std::printf("mean_eval_reward=%s\n", format6(q.eval_mean_reward).c_str());
  std::printf("goal_reached=%d\n", q.goal_reached ? 1 : 0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structural-entropy toolkit: graph entropy, encoding-tree "
               "optimization, state abstraction, and a gridworld benchmark"};
  app.require_subcommand(1);

  std::string edge_path, embeddings_path, trajectory_path, out_path, out_dir;
  int k_cap = 3;
  std::uint64_t seed = 0;
  DemoOptions demo;

  CLI::App* entropy = app.add_subcommand(
      "entropy", "one-dimensional structural entropy of an edge list");
  entropy->add_option("edges", edge_path, "edge-list TSV")->required();

  CLI::App* sparse = app.add_subcommand(
      "sparsify", "entropy-minimizing k-NN sparsification of embeddings");
  sparse->add_option("embeddings", embeddings_path, "embedding CSV")->required();
  sparse->add_option("--out", out_dir, "output directory")->required();

  CLI::App* opt_tree = app.add_subcommand(
      "optimize-tree", "greedy encoding-tree optimization of an edge list");
  opt_tree->add_option("edges", edge_path, "edge-list TSV")->required();
  opt_tree->add_option("--k-cap", k_cap, "maximal tree height");
  opt_tree->add_option("--seed", seed, "seed recorded in the output header");
  opt_tree->add_option("--out", out_path, "encoding-tree JSON path")->required();

  CLI::App* abstract = app.add_subcommand(
      "abstract", "full abstraction report from embeddings and trajectories");
  abstract->add_option("--embeddings", embeddings_path, "embedding CSV")
      ->required();
  abstract->add_option("--trajectories", trajectory_path, "trajectory JSONL")
      ->required();
  abstract->add_option("--k-cap", k_cap, "maximal tree height");
  abstract->add_option("--seed", seed, "seed recorded in the output header");
  abstract->add_option("--out", out_dir, "output directory")->required();

  CLI::App* gridworld = app.add_subcommand(
      "demo-gridworld", "offline gridworld abstraction + tabular Q-learning");
  gridworld->add_option("--width", demo.width, "grid width");
  gridworld->add_option("--height", demo.height, "grid height");
  gridworld->add_option("--sigma", demo.sigma, "observation noise scale");
  gridworld->add_option("--samples", demo.samples, "observations per cell");
  gridworld->add_option("--k-cap", demo.k_cap, "maximal tree height");
  gridworld->add_option("--episodes", demo.episodes, "Q-learning episodes");
  gridworld->add_option("--walk-episodes", demo.walk_episodes,
                        "random-walk episodes for the trajectory log");
  gridworld->add_option("--seed", demo.seed, "run seed")->required();
  gridworld->add_option("--out", demo.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
    if (entropy->parsed()) cmd_entropy(edge_path);
    if (sparse->parsed()) cmd_sparsify(embeddings_path, out_dir);
    if (opt_tree->parsed()) cmd_optimize(edge_path, k_cap, seed, out_path);
    if (abstract->parsed())
      cmd_abstract(embeddings_path, trajectory_path, k_cap, seed, out_dir);
    if (gridworld->parsed()) cmd_demo(demo);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
  return 0;
}
