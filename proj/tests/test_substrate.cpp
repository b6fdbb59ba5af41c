#include <cmath>
#include <functional>

#include "doctest.h"
#include "dppn/error.hpp"
#include "dppn/rng.hpp"
#include "dppn/substrate.hpp"
#include "testutil.hpp"

using namespace dppn;

namespace {

Eigen::VectorXd numeric_param_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& p, double h = 1e-6) {
  Eigen::VectorXd g(p.size());
  Eigen::VectorXd q = p;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    q[i] = p[i] + h;
    const double up = f(q);
    q[i] = p[i] - h;
    const double down = f(q);
    q[i] = p[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                              double lo, double hi) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("loss reference values") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
  CHECK(loss_mse(x, x) == 0.0);

  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(1, 1);
  Eigen::MatrixXd half = Eigen::MatrixXd::Constant(1, 1, 0.5);
  CHECK(loss_bce(ones, half) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss_bce(ones, ones) == doctest::Approx(0.0).epsilon(1e-6));

  Eigen::MatrixXd a(1, 2), b(1, 2);
  a << 1.0, 0.0;
  b << 0.75, 0.25;
  CHECK(loss_mse(a, b) == doctest::Approx(0.0625));
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(31);
  for (LossKind kind : {LossKind::Mse, LossKind::Bce}) {
    Eigen::MatrixXd target = random_matrix(3, 5, rng, 0.0, 1.0);
    Eigen::MatrixXd pred = random_matrix(3, 5, rng, 0.05, 0.95);
    Eigen::MatrixXd analytic = loss_grad(kind, target, pred);
    for (Eigen::Index r = 0; r < 3; ++r) {
      for (Eigen::Index c = 0; c < 5; ++c) {
        Eigen::MatrixXd q = pred;
        const double h = 1e-7;
        q(r, c) = pred(r, c) + h;
        const double up = loss_value(kind, target, q);
        q(r, c) = pred(r, c) - h;
        const double down = loss_value(kind, target, q);
        const double fd = (up - down) / (2.0 * h);
        CHECK(test::rel_err(analytic(r, c), fd) < 1e-5);
      }
    }
  }
}

TEST_CASE("bce clamp flattens the gradient") {
  Eigen::MatrixXd target = Eigen::MatrixXd::Ones(1, 1);
  Eigen::MatrixXd pred = Eigen::MatrixXd::Constant(1, 1, 1e-9);
  CHECK(std::isfinite(loss_bce(target, pred)));
  CHECK(loss_bce_grad(target, pred)(0, 0) == 0.0);
  Eigen::MatrixXd high = Eigen::MatrixXd::Constant(1, 1, 1.0 - 1e-9);
  CHECK(loss_bce_grad(target, high)(0, 0) == 0.0);
}

TEST_CASE("loss names round-trip") {
  CHECK(loss_from_name("mse") == LossKind::Mse);
  CHECK(loss_from_name("bce") == LossKind::Bce);
  CHECK(loss_name(LossKind::Bce) == std::string("bce"));
  CHECK_THROWS_AS(loss_from_name("hinge"), ValidationError);
}

TEST_CASE("fc autoencoder parameter count at full scale") {
  CHECK(fc_param_count(28, 10) == 157684);
  CHECK(fc_param_count(4, 2) == 2 * 16 * 4 + 4 + 16);
  const FCAutoencoder net = fc_autoencoder(28, 10);
  CHECK(fc_get_params(net).size() == 157684);
}

TEST_CASE("fc autoencoder with zero parameters emits one half") {
  const FCAutoencoder net = fc_autoencoder(4, 2);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 16).cwiseAbs();
  const auto [recon, tape] = fc_forward(net, x);
  CHECK(recon.rows() == 3);
  CHECK(recon.cols() == 16);
  CHECK((recon.array() == 0.5).all());
  CHECK((tape.hidden.array() == 0.5).all());
}

TEST_CASE("fc outputs live strictly inside the unit interval") {
  Rng rng(32);
  FCAutoencoder net = fc_autoencoder(4, 2);
  fc_set_params(net, random_matrix(fc_param_count(4, 2), 1, rng, -2.0, 2.0));
  Eigen::MatrixXd x = random_matrix(5, 16, rng, 0.0, 1.0);
  const auto [recon, tape] = fc_forward(net, x);
  CHECK((recon.array() > 0.0).all());
  CHECK((recon.array() < 1.0).all());
}

TEST_CASE("fc parameter round-trip is exact") {
  Rng rng(33);
  FCAutoencoder net = fc_autoencoder(3, 2);
  const Eigen::VectorXd p =
      random_matrix(fc_param_count(3, 2), 1, rng, -1.0, 1.0);
  fc_set_params(net, p);
  CHECK(fc_get_params(net) == p);
  CHECK_THROWS_AS(fc_set_params(net, Eigen::VectorXd::Zero(5)), ValidationError);
}

TEST_CASE("fc parameter gradient matches finite differences") {
  Rng rng(34);
  FCAutoencoder net = fc_autoencoder(4, 2);
  const int n = fc_param_count(4, 2);
  const Eigen::VectorXd p0 = random_matrix(n, 1, rng, -0.5, 0.5);
  Eigen::MatrixXd x = random_matrix(3, 16, rng, 0.0, 1.0);
  Eigen::MatrixXd target = random_matrix(3, 16, rng, 0.0, 1.0);

  for (LossKind kind : {LossKind::Mse, LossKind::Bce}) {
    const auto f = [&](const Eigen::VectorXd& p) {
      FCAutoencoder m = net;
      fc_set_params(m, p);
      return loss_value(kind, target, fc_forward(m, x).first);
    };
    FCAutoencoder m = net;
    fc_set_params(m, p0);
    const auto [recon, tape] = fc_forward(m, x);
    const Eigen::VectorXd analytic =
        fc_param_grad(m, tape, loss_grad(kind, target, recon));
    const Eigen::VectorXd numeric = numeric_param_grad(f, p0);
    CHECK(test::max_rel_err(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("conv autoencoder shape and count") {
  const ConvAutoencoder net = conv_autoencoder(28, 7, 2, 3, 2);
  CHECK(net.out_side() == 14);
  CHECK(conv_param_count(net) == 200);
  const ConvAutoencoder mini = conv_autoencoder(4, 3, 2, 1, 2);
  CHECK(mini.out_side() == 2);
  CHECK(conv_param_count(mini) == 2 * 2 * 9 + 4);
}

TEST_CASE("conv autoencoder with zero parameters emits zero") {
  const ConvAutoencoder net = conv_autoencoder(4, 3, 2, 1, 2);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 16).cwiseAbs();
  const auto [recon, tape] = conv_forward(net, x);
  CHECK(recon.rows() == 2);
  CHECK(recon.cols() == 16);
  CHECK(recon.isZero(0.0));
}

TEST_CASE("conv outputs are nonnegative and full sized") {
  Rng rng(35);
  ConvAutoencoder net = conv_autoencoder(6, 3, 2, 1, 2);
  conv_set_params(net, random_matrix(conv_param_count(net), 1, rng, -1.0, 1.0));
  Eigen::MatrixXd x = random_matrix(4, 36, rng, 0.0, 1.0);
  const auto [recon, tape] = conv_forward(net, x);
  CHECK(recon.cols() == 36);
  CHECK((recon.array() >= 0.0).all());
}

TEST_CASE("conv parameter round-trip is exact") {
  Rng rng(36);
  ConvAutoencoder net = conv_autoencoder(4, 3, 2, 1, 2);
  const Eigen::VectorXd p =
      random_matrix(conv_param_count(net), 1, rng, -1.0, 1.0);
  conv_set_params(net, p);
  CHECK(conv_get_params(net) == p);
}

TEST_CASE("conv parameter gradient matches finite differences") {
  Rng rng(37);
  ConvAutoencoder net = conv_autoencoder(4, 3, 2, 1, 2);
  const int n = conv_param_count(net);
  Eigen::MatrixXd x = random_matrix(2, 16, rng, 0.0, 1.0);
  Eigen::MatrixXd target = random_matrix(2, 16, rng, 0.0, 1.0);

  // several random parameter points; ReLU kinks make exact-zero pre-acts
  // the only hazard and random points avoid them
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd p0 = random_matrix(n, 1, rng, -0.8, 0.8);
    const auto f = [&](const Eigen::VectorXd& p) {
      ConvAutoencoder m = net;
      conv_set_params(m, p);
      return loss_value(LossKind::Mse, target, conv_forward(m, x).first);
    };
    ConvAutoencoder m = net;
    conv_set_params(m, p0);
    const auto [recon, tape] = conv_forward(m, x);
    const Eigen::VectorXd analytic =
        conv_param_grad(m, tape, loss_mse_grad(target, recon));
    const Eigen::VectorXd numeric = numeric_param_grad(f, p0);
    CHECK(test::max_rel_err(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("fc layout carries the full parameter set") {
  const ParamLayout layout = fc_layout(28, 10);
  CHECK(layout.coords.rows() == 157684);
  CHECK(layout.coords.cols() == 8);
  CHECK(layout.dppn_input_dim == 8);
  CHECK(layout.dppn_output_dim == 2);
  CHECK(layout.slots.size() == 157684);
  CHECK(layout.discarded == 157684);  // the unused column of every row

  // first row: pixel (0,0) -> hidden (0,0), encoder side
  const double s2 = std::sqrt(2.0);
  CHECK(layout.coords(0, 0) == doctest::Approx(-1.0));
  CHECK(layout.coords(0, 1) == doctest::Approx(-1.0));
  CHECK(layout.coords(0, 2) == doctest::Approx(-1.0));
  CHECK(layout.coords(0, 3) == doctest::Approx(-1.0));
  CHECK(layout.coords(0, 4) == doctest::Approx(s2));
  CHECK(layout.coords(0, 5) == doctest::Approx(s2));
  CHECK(layout.coords(0, 6) == doctest::Approx(-1.0));
  CHECK(layout.coords(0, 7) == doctest::Approx(1.0));

  // encoder weights and hidden biases read column 0, the rest column 1
  for (int i : {0, 40000, 78400, 78499}) {
    CHECK(layout.slots[static_cast<size_t>(i)] == std::make_pair(i, 0));
  }
  for (int i : {78500, 120000, 157683}) {
    CHECK(layout.slots[static_cast<size_t>(i)] == std::make_pair(i, 1));
  }

  // hidden bias rows zero the absent pixel coordinates
  CHECK(layout.coords(78400, 0) == 0.0);
  CHECK(layout.coords(78400, 1) == 0.0);
  CHECK(layout.coords(78400, 4) == 0.0);
  CHECK(layout.coords(78400, 6) == doctest::Approx(-1.0));
  // decoder rows flag layer +1
  CHECK(layout.coords(78500, 6) == doctest::Approx(1.0));
  CHECK(layout.coords(157683, 6) == doctest::Approx(1.0));
}

TEST_CASE("conv layout matches the kernel grid") {
  const ParamLayout layout = conv_layout(7, 2);
  CHECK(layout.coords.rows() == 49);
  CHECK(layout.coords.cols() == 4);
  CHECK(layout.dppn_input_dim == 4);
  CHECK(layout.dppn_output_dim == 6);
  CHECK(layout.slots.size() == 200);
  CHECK(layout.discarded == 94);

  // center of the 7x7 grid
  CHECK(layout.coords(24, 0) == doctest::Approx(0.0));
  CHECK(layout.coords(24, 1) == doctest::Approx(0.0));
  CHECK(layout.coords(24, 2) == doctest::Approx(0.0));
  CHECK(layout.coords(24, 3) == doctest::Approx(1.0));
  // corner
  CHECK(layout.coords(0, 0) == doctest::Approx(-1.0));
  CHECK(layout.coords(0, 2) == doctest::Approx(std::sqrt(2.0)));

  // kernels fill columns 0..3 row-major; biases sit in the last two columns
  CHECK(layout.slots[0] == std::make_pair(0, 0));
  CHECK(layout.slots[48] == std::make_pair(48, 0));
  CHECK(layout.slots[49] == std::make_pair(0, 1));
  CHECK(layout.slots[196] == std::make_pair(0, 4));
  CHECK(layout.slots[197] == std::make_pair(1, 4));
  CHECK(layout.slots[198] == std::make_pair(0, 5));
  CHECK(layout.slots[199] == std::make_pair(1, 5));
}

TEST_CASE("gather and scatter are adjoint index maps") {
  Rng rng(38);
  for (const ParamLayout& layout : {conv_layout(3, 2), fc_layout(3, 2)}) {
    Eigen::MatrixXd out = random_matrix(layout.coords.rows(),
                                        layout.dppn_output_dim, rng, -1.0, 1.0);
    const Eigen::VectorXd p = gather_params(layout, out);
    REQUIRE(p.size() == static_cast<Eigen::Index>(layout.slots.size()));

    const Eigen::VectorXd grad =
        random_matrix(p.size(), 1, rng, -1.0, 1.0);
    const Eigen::MatrixXd scattered = scatter_param_grad(layout, grad);
    CHECK(scattered.rows() == layout.coords.rows());
    CHECK(scattered.cols() == layout.dppn_output_dim);
    // slots are distinct, so gathering the scattered gradient recovers it
    CHECK(gather_params(layout, scattered) == grad);
    CHECK(scattered.cwiseAbs().sum() ==
          doctest::Approx(grad.cwiseAbs().sum()).epsilon(1e-12));
  }
  CHECK_THROWS_AS(gather_params(fc_layout(3, 2), Eigen::MatrixXd::Zero(2, 2)),
                  EvalError);
}

TEST_CASE("gathered parameters drive the fc substrate exactly") {
  Rng rng(39);
  const ParamLayout layout = fc_layout(4, 2);
  Eigen::MatrixXd out = random_matrix(layout.coords.rows(), 2, rng, -0.5, 0.5);
  FCAutoencoder net = fc_autoencoder(4, 2);
  fc_set_params(net, gather_params(layout, out));
  // encoder weight (hidden 0, pixel 7) sits at layout row 7, column 0
  CHECK(net.w_enc(0, 7) == out(7, 0));
  // hidden bias 1 at row 16*4 + 1
  CHECK(net.b_hidden[1] == out(16 * 4 + 1, 0));
  // decoder weight (pixel 0, hidden 3) at row 16*4 + 4 + 3, column 1
  CHECK(net.w_dec(0, 3) == out(16 * 4 + 4 + 3, 1));
  // output bias 15 is the last row, column 1
  CHECK(net.b_out[15] == out(layout.coords.rows() - 1, 1));
}
