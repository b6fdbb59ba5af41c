#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace dppn {

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t t = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState adam_init(Eigen::Index n, double lr = 0.001, double beta1 = 0.9,
                    double beta2 = 0.999, double epsilon = 1e-8);

// One bias-corrected update, in place: t is incremented first, then
// m/v decay toward the (squared) gradient and w -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(AdamState& state, Eigen::VectorXd& weights,
               const Eigen::VectorXd& grads);

// Re-indexes moments after a topology change.  index_map[i] is the old
// parameter index now living at slot i, or -1 for a brand-new parameter
// (zero moments).  The step counter carries over.
AdamState adam_resize(const AdamState& state, const std::vector<int>& index_map);

}  // namespace dppn
