#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "dppn/genome.hpp"

namespace dppn {

using OutputMatrix = Eigen::MatrixXd;    // B x output_dim
using GradientVector = Eigen::VectorXd;  // length = param_count(g)

// Per-forward-pass record of pre-activations and activations, in the
// genome's stored (topological) node order, as needed by backward().
struct EvalTape {
  Eigen::MatrixXd batch;      // B x input_dim raw coordinates
  Eigen::MatrixXd input_act;  // B x input_dim, after the optional linear layer
  std::vector<Eigen::VectorXd> pre;  // per node storage index; empty for input
  std::vector<Eigen::VectorXd> act;
  Eigen::MatrixXd out_pre;  // B x output_dim
  Eigen::MatrixXd out_act;
};

// Batched evaluation over the topological order: each node applies its
// transfer to the weighted sum of its in-edge activations.  Throws EvalError
// naming the node if any activation goes non-finite.
std::pair<OutputMatrix, EvalTape> forward(const Genome& g,
                                          const Eigen::MatrixXd& batch);

// Exact reverse-mode gradient of the scalar loss whose per-output gradient
// is supplied, summed over batch rows, in canonical parameter order.
GradientVector backward(const Genome& g, const EvalTape& tape,
                        const Eigen::MatrixXd& dLoss_dOutputs);

using LossOfOutputs = std::function<double(const OutputMatrix&)>;

// Central-difference reference gradient; test oracle only.
GradientVector finite_diff_gradient(const Genome& g,
                                    const Eigen::MatrixXd& batch,
                                    const LossOfOutputs& loss_fn, double step);

}  // namespace dppn
