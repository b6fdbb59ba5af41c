#include "dppn/transfer.hpp"

#include "dppn/error.hpp"

namespace dppn {

namespace {
// x*x is clamped at 700 before exponentiation; beyond that the gaussian is
// flat (and its derivative zero) instead of underflowing.
constexpr double kGaussClamp = 700.0;
}  // namespace

const char* transfer_name(Transfer t) {
  switch (t) {
    case Transfer::Sigmoid: return "sigmoid";
    case Transfer::Tanh: return "tanh";
    case Transfer::Abs: return "abs";
    case Transfer::Gaussian: return "gaussian";
    case Transfer::Identity: return "identity";
    case Transfer::Sine: return "sine";
    case Transfer::Relu: return "relu";
  }
  return "?";
}

Transfer transfer_from_name(std::string_view name) {
  if (name == "sigmoid") return Transfer::Sigmoid;
  if (name == "tanh") return Transfer::Tanh;
  if (name == "abs") return Transfer::Abs;
  if (name == "gaussian") return Transfer::Gaussian;
  if (name == "identity") return Transfer::Identity;
  if (name == "sine") return Transfer::Sine;
  if (name == "relu") return Transfer::Relu;
  throw ValidationError("unknown transfer function: " + std::string(name));
}

Eigen::ArrayXXd transfer_apply(Transfer t, const Eigen::ArrayXXd& x) {
  switch (t) {
    case Transfer::Sigmoid:
      // branch on the sign so exp never overflows
      return (x >= 0.0).select(1.0 / (1.0 + (-x).exp()),
                               x.exp() / (1.0 + x.exp()));
    case Transfer::Tanh:
      return x.tanh();
    case Transfer::Abs:
      return x.abs();
    case Transfer::Gaussian:
      return (-0.5 * x.square().min(kGaussClamp)).exp();
    case Transfer::Identity:
      return x;
    case Transfer::Sine:
      return x.sin();
    case Transfer::Relu:
      return x.max(0.0);
  }
  throw EvalError("bad transfer tag");
}

Eigen::ArrayXXd transfer_derivative(Transfer t, const Eigen::ArrayXXd& x,
                                    const Eigen::ArrayXXd& act) {
  switch (t) {
    case Transfer::Sigmoid:
      return act * (1.0 - act);
    case Transfer::Tanh:
      return 1.0 - act.square();
    case Transfer::Abs:
      return (x > 0.0).select(Eigen::ArrayXXd::Ones(x.rows(), x.cols()),
                              (x < 0.0).select(-Eigen::ArrayXXd::Ones(x.rows(), x.cols()),
                                               Eigen::ArrayXXd::Zero(x.rows(), x.cols())));
    case Transfer::Gaussian:
      return (x.square() <= kGaussClamp)
          .select(-x * act, Eigen::ArrayXXd::Zero(x.rows(), x.cols()));
    case Transfer::Identity:
      return Eigen::ArrayXXd::Ones(x.rows(), x.cols());
    case Transfer::Sine:
      return x.cos();
    case Transfer::Relu:
      return (x > 0.0).cast<double>();
  }
  throw EvalError("bad transfer tag");
}

double transfer_apply(Transfer t, double x) {
  Eigen::ArrayXXd a(1, 1);
  a(0, 0) = x;
  return transfer_apply(t, a)(0, 0);
}

}  // namespace dppn
