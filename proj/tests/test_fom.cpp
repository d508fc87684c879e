#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "cobras/models.hpp"
#include "cobras/rng.hpp"
#include "cobras/system.hpp"
#include "oracles.hpp"

using namespace cobras;
namespace orc = cobras::oracles;

namespace {

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

}  // namespace

TEST_CASE("toy vector field values") {
  const OdeSystem toy = toy_model();
  CHECK(toy.vector_field(Vec::Zero(3), Vec::Zero(1)).norm() == 0.0);
  CHECK(toy.output(Vec::Zero(3), Vec::Zero(1))[0] == 0.0);

  const Vec f = toy.vector_field(vec3(1, 1, 1), vec1(0));
  CHECK(f[0] == doctest::Approx(19.0));
  CHECK(f[1] == doctest::Approx(18.0));
  CHECK(f[2] == doctest::Approx(-5.0));
  CHECK(toy.output(vec3(1, 1, 1), vec1(0))[0] == doctest::Approx(3.0));

  CHECK(toy_impulse_state(0.5).isApprox(vec3(0.5, 0.5, 0.5)));
}

TEST_CASE("rk4 leaves a zero field unchanged") {
  OdeSystem sys;
  sys.state_dim = 2;
  sys.input_dim = 1;
  sys.output_dim = 1;
  sys.dt = 0.7;
  sys.substeps = 3;
  sys.vector_field = [](const Vec& x, const Vec&) { return Vec(Vec::Zero(x.size())); };
  sys.jacobian_product = [](const Vec&, const Vec&, const Vec& v) {
    return Vec(Vec::Zero(v.size()));
  };
  sys.output = [](const Vec& x, const Vec&) { return Vec(x.head(1)); };
  sys.adjoint_output = [](const Vec& x, const Vec&, const Vec& eta) {
    Vec g = Vec::Zero(x.size());
    g[0] = eta[0];
    return g;
  };
  const Vec x0 = vec3(1, 2, 0).head(2);
  CHECK(rk4_step(sys, x0, vec1(0)).isApprox(x0));
}

TEST_CASE("rk4 against the scalar exponential") {
  Mat A(1, 1), B(1, 1), C(1, 1);
  A << -5.0;
  B << 0.0;
  C << 1.0;
  const OdeSystem sys = linear_ode(A, B, C, 0.5, 50);
  const Vec x = rk4_step(sys, vec1(1.0), vec1(0.0));
  // RK4's one-step amplification error accumulates to ~1.1e-8 here; frozen
  // bound from the closed-form oracle with a small margin.
  CHECK(std::abs(x[0] - std::exp(-2.5)) < 1.5e-8);
}

TEST_CASE("rk4 against the dense matrix exponential") {
  Rng rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    Mat G = orc::gaussian_matrix(rng, 3, 3);
    Mat A = G - (G.eigenvalues().real().maxCoeff() + 1.0) * Mat::Identity(3, 3);
    const OdeSystem sys = linear_ode(A, Mat::Zero(3, 1), Mat::Ones(1, 3), 0.1, 10);
    const Mat expected = orc::expm(Mat(0.1 * A));
    const Vec x0 = orc::gaussian_vector(rng, 3);
    const Vec x1 = rk4_step(sys, x0, vec1(0));
    CHECK((x1 - expected * x0).norm() < 1e-7 * x0.norm());
  }
}

TEST_CASE("rk4 order: halving the substep shrinks error ~16x") {
  Mat A(2, 2), B(2, 1), C(1, 2);
  A << -1.0, 2.0, 0.0, -3.0;
  B << 0, 0;
  C << 1, 1;
  const Vec x0 = vec3(1, -1, 0).head(2);
  const Mat truth = orc::expm(Mat(0.5 * A));
  auto error_at = [&](int substeps) {
    const OdeSystem sys = linear_ode(A, B, C, 0.5, substeps);
    return (rk4_step(sys, x0, vec1(0)) - truth * x0).norm();
  };
  const double ratio = error_at(4) / error_at(8);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("rk4 flags blow-up with a step index") {
  OdeSystem sys;
  sys.state_dim = 1;
  sys.input_dim = 1;
  sys.output_dim = 1;
  sys.dt = 1.0;
  sys.substeps = 4;
  sys.vector_field = [](const Vec& x, const Vec&) { return Vec(x.array().square() * 1e3); };
  sys.jacobian_product = [](const Vec& x, const Vec&, const Vec& v) {
    return Vec(2e3 * x.array() * v.array());
  };
  sys.output = [](const Vec& x, const Vec&) { return x; };
  sys.adjoint_output = [](const Vec&, const Vec&, const Vec& eta) { return eta; };
  CHECK_THROWS_AS((void)rk4_step(sys, vec1(50.0), vec1(0)), BlowUpError);

  const DiscreteSystem dsys = discretize(sys);
  try {
    (void)simulate(dsys, vec1(2.0), Mat::Zero(1, 10));
    FAIL("expected blow-up");
  } catch (const BlowUpError& e) {
    CHECK(e.step() >= 0);
    CHECK(e.step() < 10);
  }
}

TEST_CASE("adjoint of a linear step is the transposed transition matrix") {
  Rng rng(77);
  Mat G = orc::gaussian_matrix(rng, 4, 4);
  Mat A = G - (G.eigenvalues().real().maxCoeff() + 0.8) * Mat::Identity(4, 4);
  const OdeSystem sys =
      linear_ode(A, orc::gaussian_matrix(rng, 4, 2), orc::gaussian_matrix(rng, 2, 4), 0.3, 7);
  // Transition matrix column by column.
  Mat Phi(4, 4);
  for (Index i = 0; i < 4; ++i) {
    Vec e = Vec::Zero(4);
    e[i] = 1.0;
    Phi.col(i) = rk4_step(sys, e, Vec::Zero(2));
  }
  for (int trial = 0; trial < 5; ++trial) {
    const Vec v = orc::gaussian_vector(rng, 4);
    const Vec x = orc::gaussian_vector(rng, 4);
    const Vec got = rk4_adjoint_step(sys, x, Vec::Zero(2), v);
    CHECK((got - Phi.transpose() * v).norm() < 1e-12 * v.norm());
  }
  CHECK(rk4_adjoint_step(sys, orc::gaussian_vector(rng, 4), Vec::Zero(2), Vec::Zero(4)).norm() ==
        0.0);
}

TEST_CASE("adjoint consistency with finite differences") {
  Rng rng(123);
  const OdeSystem toy = toy_model();
  const OdeSystem lti =
      random_stable_linear_ode(5, 2, 2, 0.4, 20, /*seed=*/55);
  for (const OdeSystem* sys : {&toy, &lti}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vec x = orc::gaussian_vector(rng, sys->state_dim);
      const Vec u = orc::gaussian_vector(rng, sys->input_dim);
      const Vec v = orc::gaussian_vector(rng, sys->state_dim);
      const Vec w = orc::gaussian_vector(rng, sys->state_dim);
      const double lhs = w.dot(rk4_adjoint_step(*sys, x, u, v));
      const double rhs = orc::central_difference(
          [&](const Vec& xx) { return v.dot(rk4_step(*sys, xx, u)); }, x, w, 1e-6);
      CHECK(std::abs(lhs - rhs) < 1e-5 * (1.0 + std::abs(lhs)));
    }
  }
}

TEST_CASE("adjoint step is linear in v") {
  Rng rng(9);
  const OdeSystem toy = toy_model();
  const Vec x = orc::gaussian_vector(rng, 3);
  const Vec u = orc::gaussian_vector(rng, 1);
  const Vec v1 = orc::gaussian_vector(rng, 3);
  const Vec v2 = orc::gaussian_vector(rng, 3);
  const Vec lhs = rk4_adjoint_step(toy, x, u, Vec(2.0 * v1 - 3.0 * v2));
  const Vec rhs = 2.0 * rk4_adjoint_step(toy, x, u, v1) - 3.0 * rk4_adjoint_step(toy, x, u, v2);
  CHECK((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
}

TEST_CASE("simulate replays exactly and handles T=0") {
  const OdeSystem toy = toy_model();
  const DiscreteSystem dsys = discretize(toy);
  const Trajectory traj = simulate(toy, toy_impulse_state(1.0), zero_inputs(1, 12));
  CHECK(traj.steps() == 12);
  for (Index k = 0; k < traj.steps(); ++k) {
    const Vec replay = dsys.step(traj.states.col(k), traj.inputs.col(k));
    CHECK((replay - traj.states.col(k + 1)).norm() == 0.0);
  }

  const Trajectory single = simulate(toy, toy_impulse_state(0.3), zero_inputs(1, 0));
  CHECK(single.states.cols() == 1);
  CHECK(single.steps() == 0);
}

TEST_CASE("equilibrium stays put exactly") {
  const OdeSystem toy = toy_model();
  const Trajectory traj = simulate(toy, Vec::Zero(3), zero_inputs(1, 20));
  CHECK(traj.states.norm() == 0.0);
  const DiscreteSystem dsys = discretize(toy);
  CHECK(outputs_along(dsys, traj).norm() == 0.0);
}

TEST_CASE("outputs along a trajectory") {
  const OdeSystem toy = toy_model();
  const DiscreteSystem dsys = discretize(toy);
  const Trajectory traj = simulate(toy, toy_impulse_state(1.0), zero_inputs(1, 5));
  const Mat ys = outputs_along(dsys, traj);
  CHECK(ys.cols() == 6);
  CHECK(ys(0, 0) == doctest::Approx(3.0));
  for (Index k = 0; k <= 5; ++k)
    CHECK(ys(0, k) == doctest::Approx(traj.states.col(k).sum()));
}

TEST_CASE("toy linearization matches the analytic Jacobian at the origin") {
  const OdeSystem lin = toy_linearization();
  const OdeSystem toy = toy_model();
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec v = orc::gaussian_vector(rng, 3);
    const Vec u = orc::gaussian_vector(rng, 1);
    CHECK((lin.vector_field(Vec::Zero(3), u) - toy.vector_field(Vec::Zero(3), u)).norm() <
          1e-14);
    CHECK((lin.jacobian_product(Vec::Zero(3), u, v) -
           toy.jacobian_product(Vec::Zero(3), u, v))
              .norm() < 1e-14);
  }
}
