#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dppn/transfer.hpp"

namespace dppn {

enum class NodeKind { Input, Hidden, Output };

const char* node_kind_name(NodeKind k);
NodeKind node_kind_from_name(std::string_view name);

// Optional square linear layer carried by the input node: u = W c + b with
// W of shape dim x dim.  Entries are trainable and count toward param_count.
struct LinearLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

struct Node {
  int id = 0;
  NodeKind kind = NodeKind::Hidden;
  Transfer transfer = Transfer::Identity;
  std::optional<LinearLayer> linear;  // input nodes only
};

// The input node emits a vector and the output node collects one; `tap`
// selects the input component an edge reads (meaningful only when `from` is
// the input node) and `slot` the output component it feeds (only when `to`
// is the output node).  Both are 0 otherwise.  (from, to) pairs are unique.
struct Edge {
  int from = 0;
  int to = 0;
  double weight = 0.0;
  int tap = 0;
  int slot = 0;
};

struct Genome {
  std::vector<Node> nodes;  // kept in topological order by validated()
  std::vector<Edge> edges;
  int input_dim = 1;
  int output_dim = 1;
  int n_mod = 28;  // the genotype-encoded N of the reconstruction coordinates
  std::uint64_t rng_seed = 0;

  const Node* find_node(int id) const;
  int input_node_id() const;
  int output_node_id() const;
  int hidden_count() const;
  int fresh_node_id() const;
  bool has_edge(int from, int to) const;
};

// Kahn topological order over node ids, ties broken by ascending id.
// Throws CycleError when edges admit no such order.
std::vector<int> topo_sort(const Genome& g);

// Structural checks (dims, unique edges, endpoint roles, acyclicity) plus
// orphan pruning: hidden nodes off every input->output path are removed
// together with their incident edges.  Nodes come back sorted topologically,
// so the adjacency matrix is upper-right triangular in storage order.
// Idempotent.  Throws ValidationError/CycleError on structural faults.
Genome validated(const Genome& g);

// Dense adjacency in the genome's storage order; entry (i, j) is the weight
// of the edge nodes[i] -> nodes[j], 0 when absent.
Eigen::MatrixXd adjacency_matrix(const Genome& g);

bool is_upper_triangular(const Eigen::MatrixXd& a);

// Trainable parameter count: edge weights plus linear-layer entries.
int param_count(const Genome& g);

// Canonical parameter order: input linear layer first (W row-major, then
// bias), then edge weights in storage order.  weight_vector/set_weight_vector
// and the engine's GradientVector all use this order.
Eigen::VectorXd weight_vector(const Genome& g);
void set_weight_vector(Genome& g, const Eigen::VectorXd& w);

// Stable identity of each canonical parameter slot, used to carry optimizer
// state across topology changes: linear entries by (row, col), biases by
// row, edge weights by (from, to).
struct ParamKey {
  enum class Kind { LinearWeight, LinearBias, EdgeWeight } kind;
  int a = 0;
  int b = 0;
  friend bool operator==(const ParamKey&, const ParamKey&) = default;
};

std::vector<ParamKey> param_keys(const Genome& g);

// For each parameter of `now`, the index of the matching parameter of `before`
// (-1 when new).  Feeds adam_resize.
std::vector<int> param_index_map(const Genome& before, const Genome& now);

// Edge count of the saturated graph over (1 input + n_hidden + n_output-node)
// order: every ordered pair except those into the input or out of the output.
int saturated_edge_count(int n_hidden);

}  // namespace dppn
