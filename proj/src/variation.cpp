#include "dppn/variation.hpp"

#include <unordered_map>
#include <utility>
#include <vector>

#include "dppn/error.hpp"

namespace dppn {

double random_weight(Rng& rng) { return rng.uniform(-1.0, 1.0); }

Transfer random_transfer(Rng& rng) {
  return static_cast<Transfer>(rng.index(kTransferCount));
}

namespace {

LinearLayer identity_linear(int dim) {
  return {Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)};
}

Edge make_edge(const Genome& g, int from, int to, double weight, Rng& rng) {
  Edge e{from, to, weight, 0, 0};
  if (from == g.input_node_id()) e.tap = static_cast<int>(rng.index(g.input_dim));
  if (to == g.output_node_id()) e.slot = static_cast<int>(rng.index(g.output_dim));
  return e;
}

}  // namespace

Genome new_minimal(int input_dim, int output_dim, Rng& rng, bool linear_input) {
  if (input_dim < 1 || output_dim < 1) {
    throw ValidationError("dims must be >= 1");
  }
  Genome g;
  g.input_dim = input_dim;
  g.output_dim = output_dim;
  g.rng_seed = rng.raw();
  g.nodes.push_back({0, NodeKind::Input, Transfer::Identity,
                     linear_input ? std::optional<LinearLayer>(identity_linear(input_dim))
                                  : std::nullopt});
  g.nodes.push_back({1, NodeKind::Output, Transfer::Identity, std::nullopt});
  g.nodes.push_back({2, NodeKind::Hidden, random_transfer(rng), std::nullopt});
  g.nodes.push_back({3, NodeKind::Hidden, random_transfer(rng), std::nullopt});
  for (int hidden : {2, 3}) {
    g.edges.push_back(make_edge(g, 0, hidden, random_weight(rng), rng));
  }
  for (int hidden : {2, 3}) {
    g.edges.push_back(make_edge(g, hidden, 1, random_weight(rng), rng));
  }
  return validated(g);
}

Genome new_fully_connected(int input_dim, int output_dim, int n_hidden,
                           Rng& rng, bool linear_input) {
  if (input_dim < 1 || output_dim < 1) {
    throw ValidationError("dims must be >= 1");
  }
  if (n_hidden < 1) throw ValidationError("n_hidden must be >= 1");
  Genome g;
  g.input_dim = input_dim;
  g.output_dim = output_dim;
  g.rng_seed = rng.raw();
  g.nodes.push_back({0, NodeKind::Input, Transfer::Identity,
                     linear_input ? std::optional<LinearLayer>(identity_linear(input_dim))
                                  : std::nullopt});
  g.nodes.push_back({1, NodeKind::Output, Transfer::Identity, std::nullopt});
  std::vector<int> order{0};
  for (int i = 0; i < n_hidden; ++i) {
    int id = 2 + i;
    g.nodes.push_back({id, NodeKind::Hidden, random_transfer(rng), std::nullopt});
    order.push_back(id);
  }
  order.push_back(1);
  for (size_t i = 0; i < order.size(); ++i) {
    for (size_t j = i + 1; j < order.size(); ++j) {
      g.edges.push_back(make_edge(g, order[i], order[j], random_weight(rng), rng));
    }
  }
  return validated(g);
}

Genome mutate_add_node(const Genome& g, Rng& rng) {
  std::vector<size_t> upstream;
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].kind != NodeKind::Output) upstream.push_back(i);
  }
  if (upstream.empty()) return g;
  size_t u = upstream[rng.index(upstream.size())];
  std::vector<size_t> downstream;  // strictly after u in the stored topo order
  for (size_t j = u + 1; j < g.nodes.size(); ++j) {
    if (g.nodes[j].kind != NodeKind::Input) downstream.push_back(j);
  }
  if (downstream.empty()) return g;
  size_t v = downstream[rng.index(downstream.size())];

  Genome out = g;
  int id = out.fresh_node_id();
  out.nodes.push_back({id, NodeKind::Hidden, random_transfer(rng), std::nullopt});
  out.edges.push_back(make_edge(out, g.nodes[u].id, id, random_weight(rng), rng));
  out.edges.push_back(make_edge(out, id, g.nodes[v].id, random_weight(rng), rng));
  out.rng_seed = rng.raw();
  return validated(out);
}

Genome mutate_add_edge(const Genome& g, Rng& rng) {
  std::vector<std::pair<int, int>> candidates;
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].kind == NodeKind::Output) continue;
    for (size_t j = i + 1; j < g.nodes.size(); ++j) {
      if (g.nodes[j].kind == NodeKind::Input) continue;
      if (!g.has_edge(g.nodes[i].id, g.nodes[j].id)) {
        candidates.emplace_back(g.nodes[i].id, g.nodes[j].id);
      }
    }
  }
  if (candidates.empty()) return g;  // saturated
  auto [from, to] = candidates[rng.index(candidates.size())];
  Genome out = g;
  out.edges.push_back(make_edge(out, from, to, random_weight(rng), rng));
  out.rng_seed = rng.raw();
  return validated(out);
}

Genome mutate_remove_edge(const Genome& g, Rng& rng) {
  if (g.edges.size() < 2) return g;
  Genome out = g;
  out.edges.erase(out.edges.begin() +
                  static_cast<std::ptrdiff_t>(rng.index(out.edges.size())));
  out.rng_seed = rng.raw();
  return validated(out);
}

Genome mutate_weights_cauchy(const Genome& g, double coefficient, Rng& rng) {
  if (coefficient == 0.0) return g;
  Genome out = g;
  for (Node& n : out.nodes) {
    if (!n.linear) continue;
    for (Eigen::Index r = 0; r < n.linear->weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < n.linear->weights.cols(); ++c) {
        n.linear->weights(r, c) += coefficient * rng.cauchy();
      }
    }
    for (Eigen::Index r = 0; r < n.linear->bias.size(); ++r) {
      n.linear->bias[r] += coefficient * rng.cauchy();
    }
  }
  for (Edge& e : out.edges) e.weight += coefficient * rng.cauchy();
  out.rng_seed = rng.raw();
  return out;
}

Genome crossover_merge(const Genome& parent_a, const Genome& parent_b,
                       Rng& rng) {
  if (parent_a.input_dim != parent_b.input_dim ||
      parent_a.output_dim != parent_b.output_dim) {
    throw ValidationError("crossover parents disagree on dimensions");
  }
  Genome out = parent_a;  // keeps A's input/output nodes, edges, and n_mod

  std::unordered_map<int, int> remap;
  int next_id = out.fresh_node_id();
  for (const Node& n : parent_b.nodes) {
    if (n.kind != NodeKind::Hidden) continue;
    remap[n.id] = next_id;
    out.nodes.push_back({next_id, NodeKind::Hidden, n.transfer, std::nullopt});
    ++next_id;
  }
  for (const Edge& e : parent_b.edges) {
    auto from = remap.find(e.from);
    auto to = remap.find(e.to);
    if (from != remap.end() && to != remap.end()) {
      out.edges.push_back({from->second, to->second, e.weight, 0, 0});
    }
  }
  const int a_in = parent_a.input_node_id();
  const int a_out = parent_a.output_node_id();
  for (const Node& n : parent_b.nodes) {
    if (n.kind != NodeKind::Hidden) continue;
    out.edges.push_back(make_edge(out, a_in, remap.at(n.id), random_weight(rng), rng));
  }
  for (const Node& n : parent_b.nodes) {
    if (n.kind != NodeKind::Hidden) continue;
    out.edges.push_back(make_edge(out, remap.at(n.id), a_out, random_weight(rng), rng));
  }
  out.rng_seed = rng.raw();
  return validated(out);
}

}  // namespace dppn
