#include "dppn/engine.hpp"

#include <string>
#include <unordered_map>

#include "dppn/error.hpp"
#include "dppn/transfer.hpp"

namespace dppn {

namespace {

struct Plan {
  int input_pos = -1;
  int output_pos = -1;
  // per node storage index: (edge index into g.edges, source storage index)
  std::vector<std::vector<std::pair<int, int>>> in_edges;
};

Plan make_plan(const Genome& g) {
  Plan plan;
  plan.in_edges.resize(g.nodes.size());
  std::unordered_map<int, int> pos;
  pos.reserve(g.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    pos[g.nodes[i].id] = static_cast<int>(i);
    if (g.nodes[i].kind == NodeKind::Input) plan.input_pos = static_cast<int>(i);
    if (g.nodes[i].kind == NodeKind::Output) plan.output_pos = static_cast<int>(i);
  }
  if (plan.input_pos < 0 || plan.output_pos < 0) {
    throw EvalError("genome lacks an input or output node");
  }
  for (size_t k = 0; k < g.edges.size(); ++k) {
    const Edge& e = g.edges[k];
    auto from = pos.find(e.from);
    auto to = pos.find(e.to);
    if (from == pos.end() || to == pos.end()) {
      throw EvalError("edge references unknown node");
    }
    if (from->second >= to->second) {
      throw EvalError("edge " + std::to_string(e.from) + "->" +
                      std::to_string(e.to) + " violates the stored topological order");
    }
    plan.in_edges[to->second].emplace_back(static_cast<int>(k), from->second);
  }
  return plan;
}

}  // namespace

std::pair<OutputMatrix, EvalTape> forward(const Genome& g,
                                          const Eigen::MatrixXd& batch) {
  if (batch.cols() != g.input_dim) {
    throw EvalError("batch width " + std::to_string(batch.cols()) +
                    " does not match input_dim " + std::to_string(g.input_dim));
  }
  if (batch.rows() < 1) throw EvalError("empty batch");

  const Plan plan = make_plan(g);
  const Eigen::Index b = batch.rows();

  EvalTape tape;
  tape.batch = batch;
  tape.pre.resize(g.nodes.size());
  tape.act.resize(g.nodes.size());
  tape.out_pre = Eigen::MatrixXd::Zero(b, g.output_dim);

  const Node& input = g.nodes[plan.input_pos];
  if (input.linear) {
    tape.input_act = (batch * input.linear->weights.transpose()).rowwise() +
                     input.linear->bias.transpose();
  } else {
    tape.input_act = batch;
  }
  if (!tape.input_act.allFinite()) {
    throw EvalError("non-finite activation at node " + std::to_string(input.id));
  }

  auto source_column =
      [&](int edge_index, int src_pos) -> Eigen::Ref<const Eigen::VectorXd> {
    if (src_pos == plan.input_pos) {
      return tape.input_act.col(g.edges[edge_index].tap);
    }
    return tape.act[src_pos];
  };

  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const Node& node = g.nodes[i];
    if (node.kind == NodeKind::Input) continue;
    if (node.kind == NodeKind::Hidden) {
      Eigen::VectorXd pre = Eigen::VectorXd::Zero(b);
      for (auto [edge_index, src_pos] : plan.in_edges[i]) {
        pre += g.edges[edge_index].weight * source_column(edge_index, src_pos);
      }
      tape.pre[i] = pre;
      tape.act[i] = transfer_apply(node.transfer, pre.array()).matrix();
      if (!tape.act[i].allFinite()) {
        throw EvalError("non-finite activation at node " + std::to_string(node.id));
      }
    } else {  // output group
      for (auto [edge_index, src_pos] : plan.in_edges[i]) {
        const Edge& e = g.edges[edge_index];
        tape.out_pre.col(e.slot) += e.weight * source_column(edge_index, src_pos);
      }
      tape.out_act = transfer_apply(node.transfer, tape.out_pre.array()).matrix();
      if (!tape.out_act.allFinite()) {
        throw EvalError("non-finite activation at node " + std::to_string(node.id));
      }
    }
  }
  return {tape.out_act, tape};
}

GradientVector backward(const Genome& g, const EvalTape& tape,
                        const Eigen::MatrixXd& dLoss_dOutputs) {
  if (dLoss_dOutputs.rows() != tape.batch.rows() ||
      dLoss_dOutputs.cols() != g.output_dim) {
    throw EvalError("output-gradient shape does not match the tape");
  }
  const Plan plan = make_plan(g);
  const Eigen::Index b = tape.batch.rows();
  const Node& input = g.nodes[plan.input_pos];
  const int linear_params =
      input.linear ? g.input_dim * g.input_dim + g.input_dim : 0;

  GradientVector grad = GradientVector::Zero(param_count(g));
  std::vector<Eigen::VectorXd> d_act(g.nodes.size());
  Eigen::MatrixXd d_input_act = Eigen::MatrixXd::Zero(b, g.input_dim);

  auto source_column =
      [&](int edge_index, int src_pos) -> Eigen::Ref<const Eigen::VectorXd> {
    if (src_pos == plan.input_pos) {
      return tape.input_act.col(g.edges[edge_index].tap);
    }
    return tape.act[src_pos];
  };
  auto accumulate_source = [&](int edge_index, int src_pos,
                               const Eigen::Ref<const Eigen::VectorXd>& delta) {
    const Edge& e = g.edges[edge_index];
    if (src_pos == plan.input_pos) {
      d_input_act.col(e.tap) += e.weight * delta;
    } else {
      if (d_act[src_pos].size() == 0) d_act[src_pos] = Eigen::VectorXd::Zero(b);
      d_act[src_pos] += e.weight * delta;
    }
  };

  for (size_t ii = g.nodes.size(); ii-- > 0;) {
    const Node& node = g.nodes[ii];
    if (node.kind == NodeKind::Input) continue;
    if (node.kind == NodeKind::Output) {
      Eigen::MatrixXd d_pre =
          (dLoss_dOutputs.array() *
           transfer_derivative(node.transfer, tape.out_pre.array(),
                               tape.out_act.array()))
              .matrix();
      for (auto [edge_index, src_pos] : plan.in_edges[ii]) {
        const Edge& e = g.edges[edge_index];
        grad[linear_params + edge_index] =
            d_pre.col(e.slot).dot(source_column(edge_index, src_pos));
        accumulate_source(edge_index, src_pos, d_pre.col(e.slot));
      }
    } else {
      if (d_act[ii].size() == 0) continue;  // no downstream consumers
      Eigen::VectorXd d_pre =
          (d_act[ii].array() * transfer_derivative(node.transfer,
                                                   tape.pre[ii].array(),
                                                   tape.act[ii].array()))
              .matrix();
      for (auto [edge_index, src_pos] : plan.in_edges[ii]) {
        grad[linear_params + edge_index] =
            d_pre.dot(source_column(edge_index, src_pos));
        accumulate_source(edge_index, src_pos, d_pre);
      }
    }
  }

  if (input.linear) {
    Eigen::MatrixXd d_w = d_input_act.transpose() * tape.batch;
    Eigen::VectorXd d_b = d_input_act.colwise().sum();
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < d_w.rows(); ++r) {
      for (Eigen::Index c = 0; c < d_w.cols(); ++c) grad[k++] = d_w(r, c);
    }
    for (Eigen::Index r = 0; r < d_b.size(); ++r) grad[k++] = d_b[r];
  }
  return grad;
}

GradientVector finite_diff_gradient(const Genome& g,
                                    const Eigen::MatrixXd& batch,
                                    const LossOfOutputs& loss_fn, double step) {
  Genome probe = g;
  Eigen::VectorXd w = weight_vector(probe);
  GradientVector grad(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double saved = w[i];
    w[i] = saved + step;
    set_weight_vector(probe, w);
    const double hi = loss_fn(forward(probe, batch).first);
    w[i] = saved - step;
    set_weight_vector(probe, w);
    const double lo = loss_fn(forward(probe, batch).first);
    w[i] = saved;
    grad[i] = (hi - lo) / (2.0 * step);
  }
  set_weight_vector(probe, w);
  return grad;
}

}  // namespace dppn
