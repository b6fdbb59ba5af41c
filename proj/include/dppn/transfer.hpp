#pragma once

#include <Eigen/Dense>
#include <string_view>

namespace dppn {

enum class Transfer { Sigmoid, Tanh, Abs, Gaussian, Identity, Sine, Relu };

inline constexpr int kTransferCount = 7;

const char* transfer_name(Transfer t);
Transfer transfer_from_name(std::string_view name);

// Elementwise application over a pre-activation array.
Eigen::ArrayXXd transfer_apply(Transfer t, const Eigen::ArrayXXd& x);

// Derivative with respect to the pre-activation. `act` must be
// transfer_apply(t, x); sigmoid/tanh/gaussian reuse it.
// Subgradients at the kinks of abs and relu are fixed to 0.
Eigen::ArrayXXd transfer_derivative(Transfer t, const Eigen::ArrayXXd& x,
                                    const Eigen::ArrayXXd& act);

double transfer_apply(Transfer t, double x);

}  // namespace dppn
