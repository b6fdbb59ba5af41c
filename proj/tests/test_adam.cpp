#include <cmath>
#include <vector>

#include "doctest.h"
#include "dppn/adam.hpp"
#include "dppn/error.hpp"

using namespace dppn;

TEST_CASE("zero gradient leaves weights unchanged") {
  AdamState s = adam_init(3, 0.01);
  Eigen::VectorXd w(3);
  w << 1.0, -2.0, 0.5;
  const Eigen::VectorXd before = w;
  adam_step(s, w, Eigen::VectorXd::Zero(3));
  CHECK(w == before);
  CHECK(s.t == 1);
}

TEST_CASE("first step moves by the learning rate regardless of scale") {
  for (double g : {3.7, -0.2, 1e-3, 250.0}) {
    AdamState s = adam_init(1, 0.001);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(1);
    Eigen::VectorXd grad(1);
    grad << g;
    adam_step(s, w, grad);
    // bias-corrected m/sqrt(v) == sign(g) on the first step, up to epsilon
    CHECK(std::abs(w[0]) == doctest::Approx(0.001).epsilon(1e-4));
    CHECK((g > 0) == (w[0] < 0));
  }
}

TEST_CASE("quadratic bowl is minimized") {
  AdamState s = adam_init(1, 0.1);
  Eigen::VectorXd w(1);
  w << 5.0;
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd grad(1);
    grad << 2.0 * w[0];  // d/dw of w^2
    adam_step(s, w, grad);
  }
  CHECK(std::abs(w[0]) < 0.5);
  CHECK(s.t == 200);
}

TEST_CASE("per-step movement stays near the learning rate") {
  AdamState s = adam_init(2, 0.05);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd grad(2);
    grad << std::sin(0.3 * i) * 4.0, std::cos(0.7 * i) * 0.2;
    const Eigen::VectorXd before = w;
    adam_step(s, w, grad);
    CHECK((w - before).cwiseAbs().maxCoeff() <= 0.05 * 1.1);
  }
}

TEST_CASE("gradient length mismatch is rejected") {
  AdamState s = adam_init(3, 0.01);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(adam_step(s, w, Eigen::VectorXd::Zero(2)), ValidationError);
  Eigen::VectorXd w2 = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(adam_step(s, w2, Eigen::VectorXd::Zero(3)), ValidationError);
}

TEST_CASE("adam_resize remaps moments by index") {
  AdamState s = adam_init(3, 0.01);
  Eigen::VectorXd w(3);
  w << 1.0, 2.0, 3.0;
  Eigen::VectorXd grad(3);
  grad << 0.5, -0.25, 0.125;
  adam_step(s, w, grad);
  adam_step(s, w, grad);
  const Eigen::VectorXd m = s.m;
  const Eigen::VectorXd v = s.v;
  const int t = s.t;

  SUBCASE("identity map preserves everything") {
    AdamState r = adam_resize(s, {0, 1, 2});
    CHECK(r.m == m);
    CHECK(r.v == v);
    CHECK(r.t == t);
    CHECK(r.lr == s.lr);
  }
  SUBCASE("fresh slots start at zero") {
    AdamState r = adam_resize(s, {0, -1, 2, -1});
    REQUIRE(r.m.size() == 4);
    CHECK(r.m[0] == m[0]);
    CHECK(r.m[1] == 0.0);
    CHECK(r.m[2] == m[2]);
    CHECK(r.m[3] == 0.0);
    CHECK(r.v[1] == 0.0);
    CHECK(r.v[3] == 0.0);
    CHECK(r.t == t);
  }
  SUBCASE("shrinking keeps only the mapped entries") {
    AdamState r = adam_resize(s, {2});
    REQUIRE(r.m.size() == 1);
    CHECK(r.m[0] == m[2]);
    CHECK(r.v[0] == v[2]);
  }
  SUBCASE("out-of-range source index is rejected") {
    CHECK_THROWS_AS(adam_resize(s, {0, 3}), ValidationError);
    CHECK_THROWS_AS(adam_resize(s, {-2}), ValidationError);
  }
}

TEST_CASE("steps accumulate time and moments") {
  AdamState s = adam_init(1, 0.01);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd grad(1);
  grad << 1.0;
  for (int i = 1; i <= 5; ++i) {
    adam_step(s, w, grad);
    CHECK(s.t == i);
  }
  CHECK(s.m[0] > 0.0);
  CHECK(s.v[0] > 0.0);
  CHECK(w[0] < 0.0);
}
