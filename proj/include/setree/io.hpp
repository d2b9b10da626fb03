#pragma once

// File formats:
//   edge list     UTF-8 TSV, "<label_u>\t<label_v>\t<weight>", '#' comments
//   embeddings    UTF-8 CSV with header "label,x0,...,x{d-1}"
//   encoding tree JSON {"root": id, "nodes": [{id, parent, children, vertices,
//                 height}]}; vertex references use graph labels, children
//                 arrays are order-significant
//   trajectories  JSON Lines, one {"s", "a", "r", "s2"} record per step
// CLI-facing writers add a {"header": {"seed", "version"}} block and emit all
// numerics rounded to six decimals with sorted keys.

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "setree/abstraction.hpp"
#include "setree/core.hpp"
#include "setree/entropy.hpp"
#include "setree/graph.hpp"

namespace setree {

using json = nlohmann::json;

namespace detail {
inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  return out;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

inline double parse_number(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    double value = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(value))
      throw std::invalid_argument("bad number");
    return value;
  } catch (const std::exception&) {
    throw std::invalid_argument(where + ": malformed number '" + text + "'");
  }
}
}  // namespace detail

inline Graph read_edge_list(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  std::vector<std::string> labels;
  std::map<std::string, int> index;
  auto vertex = [&](const std::string& label) {
    auto [it, fresh] = index.try_emplace(label, static_cast<int>(labels.size()));
    if (fresh) labels.push_back(label);
    return it->second;
  };
  std::vector<Edge> edges;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no);
    auto fields = detail::split(line, '\t');
    if (fields.size() != 3)
      throw std::invalid_argument(where + ": expected 3 tab-separated fields");
    double w = detail::parse_number(fields[2], where);
    if (!(w > 0.0))
      throw std::invalid_argument(where + ": edge weight must be positive");
    int u = vertex(fields[0]);
    int v = vertex(fields[1]);
    if (u == v) throw std::invalid_argument(where + ": self-loop");
    edges.push_back({u, v, w});
  }
  if (labels.empty()) throw std::invalid_argument(path + ": no edges");
  try {
    return Graph(std::move(labels), std::move(edges));
  } catch (const std::invalid_argument& err) {
    throw std::invalid_argument(path + ": " + err.what());
  }
}

inline void write_edge_list(const std::string& path, const Graph& g) {
  std::ofstream out = detail::open_output(path);
  for (const Edge& e : g.edges())
    out << g.labels()[e.u] << '\t' << g.labels()[e.v] << '\t' << format6(e.w)
        << '\n';
}

inline EmbeddingSet read_embeddings_csv(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw std::invalid_argument(path + ": missing header");
  auto header = detail::split(line, ',');
  if (header.size() < 2 || header[0] != "label")
    throw std::invalid_argument(path + ": header must be label,x0,...");
  const int dim = static_cast<int>(header.size()) - 1;
  std::vector<std::string> labels;
  std::vector<double> data;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    auto fields = detail::split(line, ',');
    if (static_cast<int>(fields.size()) != dim + 1)
      throw std::invalid_argument(where + ": expected " +
                                  std::to_string(dim + 1) + " fields");
    labels.push_back(fields[0]);
    for (int d = 0; d < dim; ++d)
      data.push_back(detail::parse_number(fields[d + 1], where));
  }
  if (labels.empty()) throw std::invalid_argument(path + ": no rows");
  try {
    return EmbeddingSet(std::move(labels), std::move(data), dim);
  } catch (const std::invalid_argument& err) {
    throw std::invalid_argument(path + ": " + err.what());
  }
}

inline void write_embeddings_csv(const std::string& path, const EmbeddingSet& e) {
  std::ofstream out = detail::open_output(path);
  out << "label";
  for (int d = 0; d < e.dimension; ++d) out << ",x" << d;
  out << '\n';
  out.precision(17);
  for (int i = 0; i < e.count; ++i) {
    out << e.labels[i];
    for (double x : e.row(i)) out << ',' << x;
    out << '\n';
  }
}

inline json tree_to_json(const EncodingTree& t,
                         const std::vector<std::string>& labels) {
  json nodes = json::array();
  for (int id : t.alive_ids()) {
    const TreeNode& n = t.node(id);
    json entry;
    entry["id"] = n.id;
    entry["parent"] = n.parent == -1 ? json(nullptr) : json(n.parent);
    entry["children"] = n.children;
    json vertices = json::array();
    for (int v : n.vertices) vertices.push_back(labels[v]);
    entry["vertices"] = vertices;
    entry["height"] = n.height;
    nodes.push_back(std::move(entry));
  }
  return json{{"nodes", std::move(nodes)}, {"root", t.root()}};
}

inline EncodingTree tree_from_json(const json& j,
                                   const std::vector<std::string>& labels) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < labels.size(); ++i)
    index[labels[i]] = static_cast<int>(i);
  if (!j.contains("nodes") || !j.contains("root"))
    throw std::invalid_argument("tree JSON needs 'nodes' and 'root'");
  EncodingTree t = EncodingTree::flat(static_cast<int>(labels.size()));
  // Ids in the file may be sparse; remap them densely while keeping leaf ids
  // equal to vertex indices, matching the in-memory convention.
  std::map<int, int> remap;
  std::vector<json> internal;
  for (const json& entry : j.at("nodes")) {
    const auto& verts = entry.at("vertices");
    if (verts.size() == 1 &&
        (!entry.contains("children") || entry.at("children").empty())) {
      auto it = index.find(verts[0].get<std::string>());
      if (it == index.end())
        throw std::invalid_argument("tree references unknown label " +
                                    verts[0].get<std::string>());
      remap[entry.at("id").get<int>()] = it->second;
    } else {
      internal.push_back(entry);
    }
  }
  const int root_file_id = j.at("root").get<int>();
  for (const json& entry : internal) {
    const int file_id = entry.at("id").get<int>();
    if (file_id == root_file_id) {
      remap[file_id] = t.root();
    } else {
      TreeNode placeholder;
      remap[file_id] = t.add_node(std::move(placeholder));
    }
  }
  auto lookup = [&](int file_id) {
    auto it = remap.find(file_id);
    if (it == remap.end())
      throw std::invalid_argument("tree JSON references unknown node id " +
                                  std::to_string(file_id));
    return it->second;
  };
  auto vertex_of = [&](const std::string& label) {
    auto it = index.find(label);
    if (it == index.end())
      throw std::invalid_argument("tree references unknown label " + label);
    return it->second;
  };
  for (const json& entry : internal) {
    const int id = lookup(entry.at("id").get<int>());
    TreeNode& dst = t.node_mut(id);
    dst.parent = entry.at("parent").is_null()
                     ? -1
                     : lookup(entry.at("parent").get<int>());
    dst.children.clear();
    for (const json& c : entry.at("children"))
      dst.children.push_back(lookup(c.get<int>()));
    dst.vertices.clear();
    for (const json& v : entry.at("vertices"))
      dst.vertices.push_back(vertex_of(v.get<std::string>()));
    std::sort(dst.vertices.begin(), dst.vertices.end());
    dst.height = entry.value("height", 0);
  }
  // Leaf parents come from their internal parents' child lists.
  for (int id : t.alive_ids())
    for (int c : t.node(id).children) t.node_mut(c).parent = id;
  t.node_mut(t.root()).parent = -1;
  t.recompute_heights();
  t.validate();
  return t;
}

inline TrajectoryLog read_trajectory_jsonl(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  TrajectoryLog log;
  std::string line;
  int line_no = 0;
  int max_action = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("s") || !j.contains("a") ||
        !j.contains("r") || !j.contains("s2"))
      throw std::invalid_argument(where + ": malformed trajectory record");
    TrajectoryStep step;
    step.state = j.at("s").get<std::string>();
    step.action = j.at("a").get<int>();
    step.reward = j.at("r").get<double>();
    step.next_state = j.at("s2").get<std::string>();
    if (step.action < 0)
      throw std::invalid_argument(where + ": negative action id");
    if (!std::isfinite(step.reward))
      throw std::invalid_argument(where + ": non-finite reward");
    max_action = std::max(max_action, step.action);
    log.steps.push_back(std::move(step));
  }
  if (log.steps.empty()) throw std::invalid_argument(path + ": empty trajectory");
  log.action_count = max_action + 1;
  return log;
}

inline void write_trajectory_jsonl(const std::string& path,
                                   const TrajectoryLog& log) {
  std::ofstream out = detail::open_output(path);
  for (const TrajectoryStep& s : log.steps) {
    json j{{"a", s.action}, {"r", round6(s.reward)}, {"s", s.state},
           {"s2", s.next_state}};
    out << j.dump() << '\n';
  }
}

inline json report_to_json(const AbstractionReport& report,
                           const std::vector<std::string>& labels,
                           std::uint64_t seed) {
  json j;
  j["header"] = {{"seed", seed}, {"version", kVersion}};
  json assignments;
  for (std::size_t i = 0; i < report.assignments.size(); ++i)
    assignments[labels[i]] = report.assignments[i];
  j["assignments"] = std::move(assignments);
  json centers = json::array();
  for (const auto& c : report.centers) {
    json row = json::array();
    for (double x : c) row.push_back(round6(x));
    centers.push_back(std::move(row));
  }
  j["centers"] = std::move(centers);
  j["center_nodes"] = report.center_nodes;
  j["clustering_loss"] = round6(report.clustering_loss_value);
  j["entropy"] = {{"final", round6(report.optimized.final_entropy)},
                  {"initial", round6(report.optimized.initial_entropy)}};
  j["k_star"] = report.sparsified.k_star;
  json reps;
  for (const auto& [id, vec] : report.representations) {
    json row = json::array();
    for (double x : vec) row.push_back(round6(x));
    reps[std::to_string(id)] = {
        {"height", report.optimized.tree.node(id).height},
        {"vector", std::move(row)}};
  }
  j["representations"] = std::move(reps);
  if (report.relation) {
    json levels = json::array();
    for (std::size_t h = 0; h < report.relation->levels.size(); ++h) {
      const RelationLevelLoss& l = report.relation->levels[h];
      levels.push_back({{"action", round6(l.action)},
                        {"level", h},
                        {"reward", round6(l.reward)},
                        {"transition", round6(l.transition)}});
    }
    j["relation_loss"] = {{"levels", std::move(levels)},
                          {"total", round6(report.relation->total)}};
  }
  return j;
}

}  // namespace setree
