#include "dppn/genome.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dppn/error.hpp"

namespace dppn {

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Input: return "input";
    case NodeKind::Hidden: return "hidden";
    case NodeKind::Output: return "output";
  }
  return "?";
}

NodeKind node_kind_from_name(std::string_view name) {
  if (name == "input") return NodeKind::Input;
  if (name == "hidden") return NodeKind::Hidden;
  if (name == "output") return NodeKind::Output;
  throw ValidationError("unknown node kind: " + std::string(name));
}

const Node* Genome::find_node(int id) const {
  for (const Node& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

int Genome::input_node_id() const {
  for (const Node& n : nodes) {
    if (n.kind == NodeKind::Input) return n.id;
  }
  throw ValidationError("genome has no input node");
}

int Genome::output_node_id() const {
  for (const Node& n : nodes) {
    if (n.kind == NodeKind::Output) return n.id;
  }
  throw ValidationError("genome has no output node");
}

int Genome::hidden_count() const {
  int count = 0;
  for (const Node& n : nodes) {
    if (n.kind == NodeKind::Hidden) ++count;
  }
  return count;
}

int Genome::fresh_node_id() const {
  int max_id = -1;
  for (const Node& n : nodes) max_id = std::max(max_id, n.id);
  return max_id + 1;
}

bool Genome::has_edge(int from, int to) const {
  for (const Edge& e : edges) {
    if (e.from == from && e.to == to) return true;
  }
  return false;
}

std::vector<int> topo_sort(const Genome& g) {
  std::unordered_map<int, int> in_degree;
  std::unordered_map<int, std::vector<int>> out_edges;
  for (const Node& n : g.nodes) in_degree[n.id];
  for (const Edge& e : g.edges) {
    if (!in_degree.count(e.from) || !in_degree.count(e.to)) {
      throw ValidationError("edge references unknown node: " +
                            std::to_string(e.from) + "->" +
                            std::to_string(e.to));
    }
    ++in_degree[e.to];
    out_edges[e.from].push_back(e.to);
  }

  std::set<int> ready;  // ordered set: ties broken by ascending id
  for (const auto& [id, deg] : in_degree) {
    if (deg == 0) ready.insert(id);
  }

  std::vector<int> order;
  order.reserve(g.nodes.size());
  while (!ready.empty()) {
    int id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (int to : out_edges[id]) {
      if (--in_degree[to] == 0) ready.insert(to);
    }
  }

  if (order.size() != g.nodes.size()) {
    std::unordered_set<int> placed(order.begin(), order.end());
    std::ostringstream msg;
    msg << "cycle detected; offending edges:";
    for (const Edge& e : g.edges) {
      if (!placed.count(e.from) && !placed.count(e.to)) {
        msg << ' ' << e.from << "->" << e.to;
      }
    }
    throw CycleError(msg.str());
  }
  return order;
}

Genome validated(const Genome& g) {
  if (g.input_dim < 1 || g.output_dim < 1) {
    throw ValidationError("input_dim and output_dim must be >= 1");
  }
  if (g.n_mod < 1) throw ValidationError("n_mod must be positive");

  int input_id = -1;
  int output_id = -1;
  std::unordered_set<int> ids;
  for (const Node& n : g.nodes) {
    if (!ids.insert(n.id).second) {
      throw ValidationError("duplicate node id " + std::to_string(n.id));
    }
    switch (n.kind) {
      case NodeKind::Input:
        if (input_id >= 0) throw ValidationError("multiple input nodes");
        input_id = n.id;
        if (n.linear && (n.linear->weights.rows() != g.input_dim ||
                         n.linear->weights.cols() != g.input_dim ||
                         n.linear->bias.size() != g.input_dim)) {
          throw ValidationError("linear layer shape must be square of input_dim");
        }
        break;
      case NodeKind::Output:
        if (output_id >= 0) throw ValidationError("multiple output nodes");
        output_id = n.id;
        [[fallthrough]];
      case NodeKind::Hidden:
        if (n.linear) {
          throw ValidationError("only the input node may carry a linear layer");
        }
        break;
    }
  }
  if (input_id < 0) throw ValidationError("genome has no input node");
  if (output_id < 0) throw ValidationError("genome has no output node");

  std::set<std::pair<int, int>> seen;
  for (const Edge& e : g.edges) {
    if (e.from == e.to) {
      throw ValidationError("self edge on node " + std::to_string(e.from));
    }
    if (!ids.count(e.from) || !ids.count(e.to)) {
      throw ValidationError("edge references unknown node: " +
                            std::to_string(e.from) + "->" +
                            std::to_string(e.to));
    }
    if (e.to == input_id) throw ValidationError("edge into the input node");
    if (e.from == output_id) throw ValidationError("edge out of the output node");
    if (!seen.insert({e.from, e.to}).second) {
      throw ValidationError("duplicate edge " + std::to_string(e.from) + "->" +
                            std::to_string(e.to));
    }
    if (e.from == input_id) {
      if (e.tap < 0 || e.tap >= g.input_dim) {
        throw ValidationError("edge tap out of range");
      }
    }
    if (e.to == output_id) {
      if (e.slot < 0 || e.slot >= g.output_dim) {
        throw ValidationError("edge slot out of range");
      }
    }
  }

  std::vector<int> order = topo_sort(g);  // throws on cycles

  // Orphan pruning: keep hidden nodes on some input->output path.  A single
  // reachability pass suffices — every node on a surviving path is itself on
  // an input->output path, so the witness paths survive the pruning.
  std::unordered_map<int, std::vector<int>> fwd, bwd;
  for (const Edge& e : g.edges) {
    fwd[e.from].push_back(e.to);
    bwd[e.to].push_back(e.from);
  }
  auto reach = [](int start, const std::unordered_map<int, std::vector<int>>& adj) {
    std::unordered_set<int> seen{start};
    std::vector<int> stack{start};
    while (!stack.empty()) {
      int id = stack.back();
      stack.pop_back();
      auto it = adj.find(id);
      if (it == adj.end()) continue;
      for (int next : it->second) {
        if (seen.insert(next).second) stack.push_back(next);
      }
    }
    return seen;
  };
  std::unordered_set<int> from_input = reach(input_id, fwd);
  std::unordered_set<int> to_output = reach(output_id, bwd);

  std::unordered_set<int> kept{input_id, output_id};
  for (const Node& n : g.nodes) {
    if (n.kind == NodeKind::Hidden && from_input.count(n.id) &&
        to_output.count(n.id)) {
      kept.insert(n.id);
    }
  }

  Genome out;
  out.input_dim = g.input_dim;
  out.output_dim = g.output_dim;
  out.n_mod = g.n_mod;
  out.rng_seed = g.rng_seed;
  std::unordered_map<int, int> pos;
  for (size_t i = 0; i < order.size(); ++i) pos[order[i]] = static_cast<int>(i);
  std::vector<const Node*> sorted;
  for (const Node& n : g.nodes) {
    if (kept.count(n.id)) sorted.push_back(&n);
  }
  std::sort(sorted.begin(), sorted.end(),
            [&](const Node* a, const Node* b) { return pos[a->id] < pos[b->id]; });
  for (const Node* n : sorted) out.nodes.push_back(*n);
  for (const Edge& e : g.edges) {
    if (kept.count(e.from) && kept.count(e.to)) out.edges.push_back(e);
  }
  return out;
}

Eigen::MatrixXd adjacency_matrix(const Genome& g) {
  const int n = static_cast<int>(g.nodes.size());
  std::unordered_map<int, int> pos;
  for (int i = 0; i < n; ++i) pos[g.nodes[i].id] = i;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : g.edges) a(pos.at(e.from), pos.at(e.to)) = e.weight;
  return a;
}

bool is_upper_triangular(const Eigen::MatrixXd& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i && j < a.cols(); ++j) {
      if (a(i, j) != 0.0) return false;
    }
  }
  return true;
}

int param_count(const Genome& g) {
  int count = static_cast<int>(g.edges.size());
  for (const Node& n : g.nodes) {
    if (n.linear) {
      count += static_cast<int>(n.linear->weights.size() + n.linear->bias.size());
    }
  }
  return count;
}

Eigen::VectorXd weight_vector(const Genome& g) {
  Eigen::VectorXd w(param_count(g));
  Eigen::Index k = 0;
  for (const Node& n : g.nodes) {
    if (!n.linear) continue;
    for (Eigen::Index r = 0; r < n.linear->weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < n.linear->weights.cols(); ++c) {
        w[k++] = n.linear->weights(r, c);
      }
    }
    for (Eigen::Index r = 0; r < n.linear->bias.size(); ++r) {
      w[k++] = n.linear->bias[r];
    }
  }
  for (const Edge& e : g.edges) w[k++] = e.weight;
  return w;
}

void set_weight_vector(Genome& g, const Eigen::VectorXd& w) {
  if (w.size() != param_count(g)) {
    throw ValidationError("weight vector length does not match param_count");
  }
  Eigen::Index k = 0;
  for (Node& n : g.nodes) {
    if (!n.linear) continue;
    for (Eigen::Index r = 0; r < n.linear->weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < n.linear->weights.cols(); ++c) {
        n.linear->weights(r, c) = w[k++];
      }
    }
    for (Eigen::Index r = 0; r < n.linear->bias.size(); ++r) {
      n.linear->bias[r] = w[k++];
    }
  }
  for (Edge& e : g.edges) e.weight = w[k++];
}

std::vector<ParamKey> param_keys(const Genome& g) {
  std::vector<ParamKey> keys;
  keys.reserve(param_count(g));
  for (const Node& n : g.nodes) {
    if (!n.linear) continue;
    for (int r = 0; r < n.linear->weights.rows(); ++r) {
      for (int c = 0; c < n.linear->weights.cols(); ++c) {
        keys.push_back({ParamKey::Kind::LinearWeight, r, c});
      }
    }
    for (int r = 0; r < n.linear->bias.size(); ++r) {
      keys.push_back({ParamKey::Kind::LinearBias, r, 0});
    }
  }
  for (const Edge& e : g.edges) {
    keys.push_back({ParamKey::Kind::EdgeWeight, e.from, e.to});
  }
  return keys;
}

std::vector<int> param_index_map(const Genome& before, const Genome& now) {
  std::map<std::tuple<int, int, int>, int> index;
  std::vector<ParamKey> old_keys = param_keys(before);
  for (size_t i = 0; i < old_keys.size(); ++i) {
    const ParamKey& k = old_keys[i];
    index[{static_cast<int>(k.kind), k.a, k.b}] = static_cast<int>(i);
  }
  std::vector<ParamKey> new_keys = param_keys(now);
  std::vector<int> map(new_keys.size(), -1);
  for (size_t i = 0; i < new_keys.size(); ++i) {
    const ParamKey& k = new_keys[i];
    auto it = index.find({static_cast<int>(k.kind), k.a, k.b});
    if (it != index.end()) map[i] = it->second;
  }
  return map;
}

int saturated_edge_count(int n_hidden) {
  // Upper triangle of the (input, h_1..h_n, output) order: all ordered pairs.
  const int n = n_hidden + 2;
  return n * (n - 1) / 2;
}

}  // namespace dppn
