#include "cobras/models.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "cobras/rng.hpp"

namespace cobras {

OdeSystem toy_model(double dt, int substeps) {
  OdeSystem sys;
  sys.state_dim = 3;
  sys.input_dim = 1;
  sys.output_dim = 1;
  sys.dt = dt;
  sys.substeps = substeps;
  sys.vector_field = [](const Vec& x, const Vec& u) {
    Vec f(3);
    f[0] = -x[0] + 20.0 * x[0] * x[2] + u[0];
    f[1] = -2.0 * x[1] + 20.0 * x[1] * x[2] + u[0];
    f[2] = -5.0 * x[2] + u[0];
    return f;
  };
  // J = [[-1+20 x3, 0, 20 x1], [0, -2+20 x3, 20 x2], [0, 0, -5]]
  sys.jacobian_product = [](const Vec& x, const Vec&, const Vec& v) {
    Vec w(3);
    w[0] = (-1.0 + 20.0 * x[2]) * v[0];
    w[1] = (-2.0 + 20.0 * x[2]) * v[1];
    w[2] = 20.0 * x[0] * v[0] + 20.0 * x[1] * v[1] - 5.0 * v[2];
    return w;
  };
  sys.output = [](const Vec& x, const Vec&) {
    Vec y(1);
    y[0] = x.sum();
    return y;
  };
  sys.adjoint_output = [](const Vec&, const Vec&, const Vec& eta) {
    return Vec(Vec::Constant(3, eta[0]));
  };
  return sys;
}

Vec toy_impulse_state(double u0) { return Vec::Constant(3, u0); }

OdeSystem toy_linearization(double dt, int substeps) {
  Mat A = Mat::Zero(3, 3);
  A.diagonal() << -1.0, -2.0, -5.0;
  Mat B = Mat::Ones(3, 1);
  Mat C = Mat::Ones(1, 3);
  return linear_ode(A, B, C, dt, substeps);
}

OdeSystem linear_ode(const Mat& A, const Mat& B, const Mat& C, double dt, int substeps) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.cols())
    throw std::invalid_argument("linear_ode: inconsistent matrix shapes");
  auto a = std::make_shared<const Mat>(A);
  auto b = std::make_shared<const Mat>(B);
  auto c = std::make_shared<const Mat>(C);
  OdeSystem sys;
  sys.state_dim = A.rows();
  sys.input_dim = B.cols();
  sys.output_dim = C.rows();
  sys.dt = dt;
  sys.substeps = substeps;
  sys.vector_field = [a, b](const Vec& x, const Vec& u) { return Vec((*a) * x + (*b) * u); };
  sys.jacobian_product = [a](const Vec&, const Vec&, const Vec& v) {
    return Vec(a->transpose() * v);
  };
  sys.output = [c](const Vec& x, const Vec&) { return Vec((*c) * x); };
  sys.adjoint_output = [c](const Vec&, const Vec&, const Vec& eta) {
    return Vec(c->transpose() * eta);
  };
  return sys;
}

DiscreteSystem linear_discrete(const Mat& A, const Mat& B, const Mat& C) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.cols())
    throw std::invalid_argument("linear_discrete: inconsistent matrix shapes");
  auto a = std::make_shared<const Mat>(A);
  auto b = std::make_shared<const Mat>(B);
  auto c = std::make_shared<const Mat>(C);
  DiscreteSystem sys;
  sys.state_dim = A.rows();
  sys.input_dim = B.cols();
  sys.output_dim = C.rows();
  sys.step = [a, b](const Vec& x, const Vec& u) { return Vec((*a) * x + (*b) * u); };
  sys.adjoint_step = [a](const Vec&, const Vec&, const Vec& v) {
    return Vec(a->transpose() * v);
  };
  sys.output = [c](const Vec& x, const Vec&) { return Vec((*c) * x); };
  sys.adjoint_output = [c](const Vec&, const Vec&, const Vec& eta) {
    return Vec(c->transpose() * eta);
  };
  return sys;
}

namespace {

Mat gaussian_matrix(Rng& rng, Index rows, Index cols) {
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

double spectral_radius(const Mat& A) {
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

OdeSystem random_stable_linear_ode(Index n, Index inputs, Index outputs, double dt,
                                   int substeps, std::uint64_t seed, double margin) {
  Rng rng(seed);
  Mat G = gaussian_matrix(rng, n, n) / std::sqrt(static_cast<double>(n));
  Mat A = G - (spectral_radius(G) + margin) * Mat::Identity(n, n);
  Mat B = gaussian_matrix(rng, n, inputs);
  Mat C = gaussian_matrix(rng, outputs, n);
  return linear_ode(A, B, C, dt, substeps);
}

DiscreteSystem random_stable_linear_discrete(Index n, Index inputs, Index outputs,
                                             double spectral_radius_target,
                                             std::uint64_t seed) {
  Rng rng(seed);
  Mat A = gaussian_matrix(rng, n, n);
  const double rho = spectral_radius(A);
  if (rho > 0.0) A *= spectral_radius_target / rho;
  Mat B = gaussian_matrix(rng, n, inputs);
  Mat C = gaussian_matrix(rng, outputs, n);
  return linear_discrete(A, B, C);
}

OdeSystem cascade_surrogate(Index n, double dt, int substeps, std::uint64_t seed,
                            Index chain_length, double gain) {
  if (n < 50 || n > 500)
    throw std::invalid_argument("cascade_surrogate: dimension must be in [50, 500]");
  if (chain_length < 2 || chain_length >= n)
    throw std::invalid_argument("cascade_surrogate: bad chain length");
  Rng rng(seed);

  Mat A = Mat::Zero(n, n);
  Mat B = Mat::Zero(n, 1);
  Mat C = Mat::Zero(1, n);
  // Feed-forward chain: state chain_length-1 is driven by the input and decays
  // fast; each stage amplifies into the previous one; the head carries the
  // large transient the output sees.
  for (Index i = 0; i + 1 < chain_length; ++i) {
    A(i, i) = -1.0;
    A(i, i + 1) = gain;
  }
  A(chain_length - 1, chain_length - 1) = -2.0;
  B(chain_length - 1, 0) = 1.0;
  C(0, 0) = 1.0;
  // Padding modes: independently decaying, weakly driven, faintly observed.
  for (Index j = chain_length; j < n; ++j) {
    A(j, j) = -(0.5 + 2.5 * rng.uniform());
    const double sign = (rng.uniform() < 0.5) ? -1.0 : 1.0;
    B(j, 0) = 3.0 * sign / std::pow(static_cast<double>(j - chain_length + 2), 0.7);
    const double osign = (rng.uniform() < 0.5) ? -1.0 : 1.0;
    C(0, j) = 0.05 * osign;
  }
  return linear_ode(A, B, C, dt, substeps);
}

Vec cascade_impulse_state(const OdeSystem& surrogate, double u0) {
  // The impulse-equivalent initial state is B * u0; recover B by probing the
  // vector field at the origin.
  const Vec zero = Vec::Zero(surrogate.state_dim);
  Vec e(1);
  e[0] = 1.0;
  Vec b = surrogate.vector_field(zero, e);
  return Vec(u0 * b);
}

LinearRealization realize_linear(const DiscreteSystem& sys, double tol) {
  const Index n = sys.state_dim, q = sys.input_dim, m = sys.output_dim;
  const Vec zx = Vec::Zero(n), zu = Vec::Zero(q);
  LinearRealization r;
  r.A.resize(n, n);
  r.B.resize(n, q);
  r.C.resize(m, n);
  const Vec f0 = sys.step(zx, zu);
  if (f0.norm() > tol)
    throw std::invalid_argument("realize_linear: origin is not an equilibrium");
  for (Index i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    r.A.col(i) = sys.step(e, zu);
    r.C.col(i) = sys.output(e, zu) - sys.output(zx, zu);
  }
  for (Index j = 0; j < q; ++j) {
    Vec e = Vec::Zero(q);
    e[j] = 1.0;
    r.B.col(j) = sys.step(zx, e);
  }
  // Superposition spot-check on a deterministic probe.
  Rng rng(0x5eed);
  Vec x1 = Vec::NullaryExpr(n, [&](Index) { return rng.normal(); });
  Vec x2 = Vec::NullaryExpr(n, [&](Index) { return rng.normal(); });
  Vec u1 = Vec::NullaryExpr(q, [&](Index) { return rng.normal(); });
  Vec u2 = Vec::NullaryExpr(q, [&](Index) { return rng.normal(); });
  const double a = 0.7, b = -1.3;
  Vec lhs = sys.step(a * x1 + b * x2, a * u1 + b * u2);
  Vec rhs = a * sys.step(x1, u1) + b * sys.step(x2, u2);
  const double scale = 1.0 + lhs.norm();
  if ((lhs - rhs).norm() > tol * scale)
    throw std::invalid_argument("realize_linear: step map fails superposition");
  Vec ylhs = sys.output(a * x1 + b * x2, a * u1 + b * u2);
  Vec yrhs = a * sys.output(x1, u1) + b * sys.output(x2, u2);
  if ((ylhs - yrhs).norm() > tol * (1.0 + ylhs.norm()))
    throw std::invalid_argument("realize_linear: output map fails superposition");
  return r;
}

}  // namespace cobras
