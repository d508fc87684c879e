#include "cobras/balance.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "cobras/rng.hpp"

namespace cobras {

namespace {

// Superposition probe on deterministic pseudo-random points; throws when the
// step or output map is not linear.
void verify_linear(const DiscreteSystem& sys, double tol) {
  Rng rng(0x11b0d);
  const Index n = sys.state_dim, q = sys.input_dim;
  auto randn = [&rng](Index size) {
    return Vec(Vec::NullaryExpr(size, [&rng](Index) { return rng.normal(); }));
  };
  for (int probe = 0; probe < 2; ++probe) {
    const Vec x1 = randn(n), x2 = randn(n), u1 = randn(q), u2 = randn(q);
    const double a = 0.7 + probe, b = -1.3;
    const Vec lhs = sys.step(a * x1 + b * x2, a * u1 + b * u2);
    const Vec rhs = a * sys.step(x1, u1) + b * sys.step(x2, u2);
    if ((lhs - rhs).norm() > tol * (1.0 + lhs.norm()))
      throw std::invalid_argument("bpod_projection: step map fails superposition");
    const Vec ylhs = sys.output(a * x1 + b * x2, a * u1 + b * u2);
    const Vec yrhs = a * sys.output(x1, u1) + b * sys.output(x2, u2);
    if ((ylhs - yrhs).norm() > tol * (1.0 + ylhs.norm()))
      throw std::invalid_argument("bpod_projection: output map fails superposition");
  }
}

}  // namespace

ThinSvd thin_svd_signed(const Mat& M) {
  Eigen::BDCSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Index j = 0; j < out.U.cols(); ++j) {
    Index imax = 0;
    out.U.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.U(imax, j) < 0.0) {
      out.U.col(j) = -out.U.col(j);
      out.V.col(j) = -out.V.col(j);
    }
  }
  return out;
}

BalancedProjection cobras_balance(const Mat& X, const Mat& Y, Index r) {
  if (X.rows() != Y.rows())
    throw std::invalid_argument("cobras_balance: factor state dimensions differ");
  if (r < 1) throw std::invalid_argument("cobras_balance: rank must be >= 1");
  if (r > std::min(X.cols(), Y.cols()))
    throw std::invalid_argument("cobras_balance: rank exceeds the number of samples");

  const Mat M = Y.transpose() * X;  // s_g x s_x
  ThinSvd svd = thin_svd_signed(M);
  const double sigma1 = svd.sigma.size() > 0 ? svd.sigma[0] : 0.0;
  if (sigma1 <= 0.0) throw std::invalid_argument("cobras_balance: all-zero data");

  Index numerical_rank = 0;
  const double cut = 1e-12 * sigma1;
  while (numerical_rank < svd.sigma.size() && svd.sigma[numerical_rank] > cut)
    ++numerical_rank;
  Index r_eff = r;
  if (numerical_rank < r) {
    std::cerr << "cobras_balance: requested rank " << r << " exceeds numerical rank "
              << numerical_rank << "; truncating\n";
    r_eff = numerical_rank;
  }

  BalancedProjection proj;
  proj.sigma = svd.sigma.head(r_eff);
  const Vec inv_sqrt = proj.sigma.cwiseSqrt().cwiseInverse();
  proj.phi = X * (svd.V.leftCols(r_eff) * inv_sqrt.asDiagonal());
  proj.psi = Y * (svd.U.leftCols(r_eff) * inv_sqrt.asDiagonal());
  return proj;
}

BalancedProjection cobras_balance(const SnapshotMatrix& X, const SnapshotMatrix& Y, Index r) {
  return cobras_balance(X.data, Y.data, r);
}

Vec linear_features(const BalancedProjection& proj, const Vec& x) {
  if (x.size() != proj.state_dim())
    throw std::invalid_argument("linear_features: dimension mismatch");
  return proj.psi.transpose() * x;
}

PodBasis pod_basis(const Mat& X, Index r) {
  if (r < 1) throw std::invalid_argument("pod_basis: rank must be >= 1");
  ThinSvd svd = thin_svd_signed(X);
  const double sigma1 = svd.sigma.size() > 0 ? svd.sigma[0] : 0.0;
  Index numerical_rank = 0;
  const double cut = 1e-12 * sigma1;
  while (numerical_rank < svd.sigma.size() && svd.sigma[numerical_rank] > cut)
    ++numerical_rank;
  if (r > numerical_rank)
    throw std::invalid_argument("pod_basis: requested rank exceeds numerical rank");
  return PodBasis{svd.U.leftCols(r), svd.sigma.head(r)};
}

PodBasis pod_basis(const SnapshotMatrix& X, Index r) { return pod_basis(X.data, r); }

BalancedProjection bpod_projection(const DiscreteSystem& sys, Index horizon, Index r,
                                   Index output_projection_rank) {
  if (horizon < 1) throw std::invalid_argument("bpod_projection: horizon must be >= 1");
  const Index n = sys.state_dim, q = sys.input_dim, m = sys.output_dim;

  verify_linear(sys, 1e-8);

  const Vec zu = Vec::Zero(q);
  // Direct impulse responses: columns B, AB, A^2 B, ... per input channel.
  Mat X(n, q * horizon);
  Mat impulse_outputs(m, q * horizon);
  for (Index j = 0; j < q; ++j) {
    Vec e = Vec::Zero(q);
    e[j] = 1.0;
    Vec x = sys.step(Vec::Zero(n), e);
    for (Index k = 0; k < horizon; ++k) {
      X.col(j * horizon + k) = x;
      impulse_outputs.col(j * horizon + k) = sys.output(x, zu);
      if (k + 1 < horizon) x = sys.step(x, zu);
    }
  }

  // Output projection: POD of the direct impulse outputs, rank-limited.
  Mat directions;  // m x p
  if (output_projection_rank >= m) {
    directions = Mat::Identity(m, m);
  } else {
    PodBasis output_pod = pod_basis(impulse_outputs, output_projection_rank);
    directions = output_pod.modes;
  }

  // Adjoint impulse responses of the output-projected system:
  // columns C^T theta, A^T C^T theta, ...
  const Index p = directions.cols();
  Mat Y(n, p * horizon);
  const Vec zx = Vec::Zero(n);
  for (Index i = 0; i < p; ++i) {
    Vec v = sys.adjoint_output(zx, zu, directions.col(i));
    for (Index k = 0; k < horizon; ++k) {
      Y.col(i * horizon + k) = v;
      if (k + 1 < horizon) v = sys.adjoint_step(zx, zu, v);
    }
  }

  return cobras_balance(X, Y, r);
}

Mat generalized_eig_projection(const Mat& W_x, const Mat& W_g, Index r) {
  const Index n = W_x.rows();
  if (n > 200) throw std::invalid_argument("generalized_eig_projection: dense oracle, n <= 200");
  if (W_x.cols() != n || W_g.rows() != n || W_g.cols() != n)
    throw std::invalid_argument("generalized_eig_projection: shape mismatch");
  if (r < 1 || r > n) throw std::invalid_argument("generalized_eig_projection: bad rank");
  if (!W_x.isApprox(W_x.transpose(), 1e-10))
    throw std::invalid_argument("generalized_eig_projection: W_x must be symmetric");

  Eigen::LLT<Mat> llt(W_x);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("generalized_eig_projection: W_x must be positive-definite");
  const Mat L = llt.matrixL();

  // W_g V = W_x^{-1} V Lambda reduces to the symmetric problem
  // (L^T W_g L) Q = Q Lambda with V = L Q.
  Eigen::SelfAdjointEigenSolver<Mat> eig(L.transpose() * W_g * L);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("generalized_eig_projection: eigensolver failed");
  // Eigenvalues ascend; take the last r columns in descending order.
  Mat Q(n, r);
  for (Index j = 0; j < r; ++j) Q.col(j) = eig.eigenvectors().col(n - 1 - j);
  const Mat V = L * Q;
  return V * llt.solve(V).transpose();
}

double truncation_energy(const Mat& X, const Mat& Y, const BalancedProjection& proj) {
  const Mat M = Y.transpose() * X;
  const Mat reduced = (Y.transpose() * proj.phi) * (proj.psi.transpose() * X);
  return (M - reduced).squaredNorm();
}

}  // namespace cobras
