#include "dppn/adam.hpp"

#include <cmath>

#include "dppn/error.hpp"

namespace dppn {

AdamState adam_init(Eigen::Index n, double lr, double beta1, double beta2,
                    double epsilon) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(n);
  s.v = Eigen::VectorXd::Zero(n);
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void adam_step(AdamState& state, Eigen::VectorXd& weights,
               const Eigen::VectorXd& grads) {
  if (state.m.size() != weights.size() || grads.size() != weights.size()) {
    throw ValidationError("adam_step length mismatch");
  }
  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v.array().matrix() +
            (1.0 - state.beta2) * grads.array().square().matrix();
  const double m_corr = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double v_corr = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  weights.array() -= state.lr * (state.m.array() / m_corr) /
                     ((state.v.array() / v_corr).sqrt() + state.epsilon);
}

AdamState adam_resize(const AdamState& state, const std::vector<int>& index_map) {
  AdamState out = state;
  const Eigen::Index n = static_cast<Eigen::Index>(index_map.size());
  out.m = Eigen::VectorXd::Zero(n);
  out.v = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int old = index_map[static_cast<size_t>(i)];
    if (old == -1) continue;
    if (old < 0 || old >= state.m.size()) {
      throw ValidationError("adam_resize index out of range");
    }
    out.m[i] = state.m[old];
    out.v[i] = state.v[old];
  }
  return out;
}

}  // namespace dppn
