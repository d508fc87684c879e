#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "cobras/balance.hpp"
#include "cobras/models.hpp"
#include "cobras/rng.hpp"
#include "oracles.hpp"

using namespace cobras;
namespace orc = cobras::oracles;

namespace {

Mat projector(const BalancedProjection& proj) {
  return proj.phi * proj.psi.transpose();
}

double trace_objective(const Mat& Wx, const Mat& Wg, const Mat& P) {
  const Mat I = Mat::Identity(P.rows(), P.cols());
  return (Wx * (I - P).transpose() * Wg * (I - P)).trace();
}

}  // namespace

TEST_CASE("identity factors give the identity projection") {
  const Mat I6 = Mat::Identity(6, 6);
  const BalancedProjection proj = cobras_balance(I6, I6, 6);
  CHECK((projector(proj) - I6).norm() < 1e-12);
  CHECK((proj.sigma - Vec::Ones(6)).norm() < 1e-12);
}

TEST_CASE("projection invariants: biorthogonality, idempotence, ordered sigma") {
  Rng rng(100);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 6, sx = 9, sy = 8, r = 3;
    const Mat X = orc::gaussian_matrix(rng, n, sx);
    const Mat Y = orc::gaussian_matrix(rng, n, sy);
    const BalancedProjection proj = cobras_balance(X, Y, r);
    CHECK((proj.psi.transpose() * proj.phi - Mat::Identity(r, r)).norm() < 1e-10);
    const Mat P = projector(proj);
    CHECK((P * P - P).norm() <= 1e-9 * (1.0 + P.squaredNorm()));
    for (Index i = 1; i < proj.sigma.size(); ++i) CHECK(proj.sigma[i] <= proj.sigma[i - 1]);
    CHECK(proj.sigma[proj.sigma.size() - 1] > 0.0);
  }
}

TEST_CASE("trace identity: residual energy equals the tail singular values") {
  Rng rng(7);
  const Index n = 6, r = 2;
  const Mat X = orc::gaussian_matrix(rng, n, 7);
  const Mat Y = orc::gaussian_matrix(rng, n, 6);
  const BalancedProjection proj = cobras_balance(X, Y, r);
  const Vec all_sigma = thin_svd_signed(Y.transpose() * X).sigma;
  double tail = 0.0;
  for (Index i = r; i < all_sigma.size(); ++i) tail += all_sigma[i] * all_sigma[i];

  const double direct =
      trace_objective(X * X.transpose(), Y * Y.transpose(), projector(proj));
  CHECK(direct == doctest::Approx(tail).epsilon(1e-8));
  CHECK(truncation_energy(X, Y, proj) == doctest::Approx(tail).epsilon(1e-8));
}

TEST_CASE("no random projector beats the balancing projection") {
  Rng rng(41);
  const Index n = 6, r = 2;
  const Mat X = orc::gaussian_matrix(rng, n, 8);
  const Mat Y = orc::gaussian_matrix(rng, n, 8);
  const Mat Wx = X * X.transpose();
  const Mat Wg = Y * Y.transpose();
  const BalancedProjection proj = cobras_balance(X, Y, r);
  const double best = trace_objective(Wx, Wg, projector(proj));
  for (int trial = 0; trial < 2000; ++trial) {
    const Mat P = orc::random_projector(rng, n, r);
    CHECK(trace_objective(Wx, Wg, P) >= best - 1e-9);
  }
}

TEST_CASE("generalized eigenproblem route agrees on SPD covariances") {
  Rng rng(55);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 8, r = 3;
    const Mat Wx = orc::random_spd(rng, n, 0.5, 4.0);
    const Mat Wg = orc::random_spd(rng, n, 0.1, 3.0);
    const Mat X = orc::sym_sqrt(Wx);
    const Mat Y = orc::sym_sqrt(Wg);
    const BalancedProjection proj = cobras_balance(X, Y, r);
    const Mat P_eig = generalized_eig_projection(Wx, Wg, r);
    CHECK(orc::op_norm(Mat(projector(proj) - P_eig)) < 1e-7);
  }
}

TEST_CASE("generalized eigenproblem route: diagonal hand example") {
  Mat Wx = Mat::Zero(2, 2), Wg = Mat::Zero(2, 2);
  Wx.diagonal() << 4.0, 1.0;
  Wg.diagonal() << 1.0, 9.0;
  // Factors diag(2,1), diag(1,3) make Y^T X = diag(2,3): the second
  // coordinate wins at r=1.
  const Mat P = generalized_eig_projection(Wx, Wg, 1);
  Mat expected = Mat::Zero(2, 2);
  expected(1, 1) = 1.0;
  CHECK((P - expected).norm() < 1e-12);

  const BalancedProjection proj = cobras_balance(Mat(Wx.cwiseSqrt()), Mat(Wg.cwiseSqrt()), 1);
  CHECK((projector(proj) - expected).norm() < 1e-12);
  CHECK(proj.sigma[0] == doctest::Approx(3.0));
}

TEST_CASE("generalized eigenproblem route: identity covariances give a rank-r projector") {
  const Mat I5 = Mat::Identity(5, 5);
  const Mat P = generalized_eig_projection(I5, I5, 2);
  CHECK((P * P - P).norm() < 1e-10);
  CHECK((P - P.transpose()).norm() < 1e-10);
  CHECK(P.trace() == doctest::Approx(2.0));
}

TEST_CASE("generalized eigenproblem route rejects bad input") {
  Rng rng(3);
  const Mat Wg = orc::random_spd(rng, 3, 0.1, 1.0);
  Mat not_spd = Mat::Identity(3, 3);
  not_spd(2, 2) = -1.0;
  CHECK_THROWS_AS((void)generalized_eig_projection(not_spd, Wg, 1), std::invalid_argument);
  Mat not_sym = orc::gaussian_matrix(rng, 3, 3);
  CHECK_THROWS_AS((void)generalized_eig_projection(not_sym, Wg, 1), std::invalid_argument);
}

TEST_CASE("transformation law: coordinates change, projection conjugates, sigma fixed") {
  Rng rng(201);
  const Index n = 5, r = 2;
  const Mat X = orc::gaussian_matrix(rng, n, 7);
  const Mat Y = orc::gaussian_matrix(rng, n, 7);
  const Mat T = Mat::Identity(n, n) + 0.4 * orc::gaussian_matrix(rng, n, n);
  const Mat Tinv = T.inverse();

  const BalancedProjection base = cobras_balance(X, Y, r);
  const BalancedProjection moved = cobras_balance(Mat(Tinv * X), Mat(T.transpose() * Y), r);

  CHECK((base.sigma - moved.sigma).norm() < 1e-8 * base.sigma.norm());
  const Mat expected = Tinv * projector(base) * T;
  CHECK(orc::op_norm(Mat(projector(moved) - expected)) < 1e-8 * orc::op_norm(expected));

  // Feature map invariance up to per-coordinate sign.
  const Vec x = orc::gaussian_vector(rng, n);
  const Vec z = linear_features(base, x);
  const Vec zt = linear_features(moved, Vec(Tinv * x));
  for (Index i = 0; i < r; ++i)
    CHECK(std::min(std::abs(zt[i] - z[i]), std::abs(zt[i] + z[i])) < 1e-8 * (1.0 + std::abs(z[i])));
}

TEST_CASE("truncation error bound holds on a Gaussian linear problem") {
  Rng rng(67);
  const Index n = 6, m = 4, r = 2;
  const Mat Sigma = orc::random_spd(rng, n, 0.5, 2.0);
  const Mat M = orc::gaussian_matrix(rng, m, n);
  const Mat X = orc::sym_sqrt(Sigma);
  const Mat Y = M.transpose();  // W_g = M^T M exactly
  const BalancedProjection proj = cobras_balance(X, Y, r);
  const Mat P = projector(proj);

  const double bound = trace_objective(Mat(X * X.transpose()), Mat(Y * Y.transpose()), P);
  const int draws = 4000;
  double mean = 0.0, second = 0.0;
  for (int i = 0; i < draws; ++i) {
    const Vec x = X * orc::gaussian_vector(rng, n);
    const double err = (M * x - M * (P * x)).squaredNorm();
    mean += err / draws;
    second += err * err / draws;
  }
  const double mc_stderr = std::sqrt(std::max(0.0, second - mean * mean) / draws);
  CHECK(mean <= bound + 3.0 * mc_stderr);
}

TEST_CASE("linear features: null space, round trip") {
  Rng rng(88);
  const Index n = 6, r = 2;
  const Mat X = orc::gaussian_matrix(rng, n, 6);
  const Mat Y = orc::gaussian_matrix(rng, n, 6);
  const BalancedProjection proj = cobras_balance(X, Y, r);

  CHECK(linear_features(proj, Vec::Zero(n)).norm() == 0.0);

  // x orthogonal to every psi column maps to zero.
  Eigen::FullPivLU<Mat> lu(proj.psi.transpose());
  const Mat null_basis = lu.kernel();
  const Vec x_null = null_basis.col(0);
  CHECK(linear_features(proj, x_null).norm() < 1e-10 * x_null.norm());

  // phi * z reproduces P x.
  const Vec x = orc::gaussian_vector(rng, n);
  const Vec lifted = proj.phi * linear_features(proj, x);
  CHECK((lifted - projector(proj) * x).norm() < 1e-10 * x.norm());
}

TEST_CASE("rank handling: errors and graceful truncation") {
  Rng rng(5);
  const Mat X = orc::gaussian_matrix(rng, 5, 4);
  const Mat Y = orc::gaussian_matrix(rng, 5, 4);
  CHECK_THROWS_AS((void)cobras_balance(X, Y, 5), std::invalid_argument);
  CHECK_THROWS_AS((void)cobras_balance(X, Y, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)cobras_balance(Mat(Mat::Zero(5, 4)), Y, 2), std::invalid_argument);
  CHECK_THROWS_AS(
      (void)cobras_balance(orc::gaussian_matrix(rng, 4, 3), orc::gaussian_matrix(rng, 5, 3), 2),
      std::invalid_argument);

  // Rank-1 factors truncate gracefully whatever rank is requested.
  const Vec u = orc::gaussian_vector(rng, 5);
  Mat X1(5, 3), Y1(5, 3);
  for (Index j = 0; j < 3; ++j) {
    X1.col(j) = (j + 1.0) * u;
    Y1.col(j) = (2.0 * j + 1.0) * u;
  }
  const BalancedProjection proj = cobras_balance(X1, Y1, 3);
  CHECK(proj.rank() == 1);
  CHECK(proj.phi.allFinite());
  CHECK(proj.psi.allFinite());
}

TEST_CASE("pod basis: orthonormal modes, ordered values, eigen oracle") {
  Rng rng(31);
  const Index n = 7, s = 5, r = 3;
  const Mat X = orc::gaussian_matrix(rng, n, s);
  const PodBasis pod = pod_basis(X, r);
  CHECK((pod.modes.transpose() * pod.modes - Mat::Identity(r, r)).norm() < 1e-12);
  for (Index i = 1; i < r; ++i) CHECK(pod.singular_values[i] <= pod.singular_values[i - 1]);

  // Eigen-oracle agreement: XX^T eigenvalues are squared singular values and
  // eigenvectors match the modes up to sign.
  Eigen::SelfAdjointEigenSolver<Mat> eig(X * X.transpose());
  for (Index j = 0; j < r; ++j) {
    const double lam = eig.eigenvalues()[n - 1 - j];
    CHECK(pod.singular_values[j] * pod.singular_values[j] == doctest::Approx(lam).epsilon(1e-10));
    const Vec v = eig.eigenvectors().col(n - 1 - j);
    const double align = std::abs(v.dot(pod.modes.col(j)));
    CHECK(align == doctest::Approx(1.0).epsilon(1e-10));
  }

  // Orthonormal input columns come back as modes (up to sign).
  const Mat Q = Eigen::HouseholderQR<Mat>(orc::gaussian_matrix(rng, n, 3)).householderQ() *
                Mat::Identity(n, 3);
  Mat scaled = Q;
  scaled.col(0) *= 3.0;
  scaled.col(1) *= 2.0;
  const PodBasis pod2 = pod_basis(scaled, 3);
  for (Index j = 0; j < 3; ++j)
    CHECK(std::abs(pod2.modes.col(j).dot(Q.col(j))) == doctest::Approx(1.0).epsilon(1e-10));

  CHECK_THROWS_AS((void)pod_basis(Mat(orc::random_rank_r(rng, 6, 5, 2)), 4),
                  std::invalid_argument);
}

TEST_CASE("bpod: scalar system recovers the full state") {
  Mat A(1, 1), B(1, 1), C(1, 1);
  A << 0.5;
  B << 2.0;
  C << -1.5;
  const DiscreteSystem sys = linear_discrete(A, B, C);
  const BalancedProjection proj = bpod_projection(sys, 30, 1, 5);
  CHECK(proj.rank() == 1);
  const Mat P = projector(proj);
  CHECK(P(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("bpod rejects nonlinear systems") {
  const DiscreteSystem toy = discretize(toy_model());
  CHECK_THROWS_AS((void)bpod_projection(toy, 10, 2, 1), std::invalid_argument);
}

TEST_CASE("bpod matches infinite-horizon balanced truncation") {
  Rng rng(404);
  for (std::uint64_t seed : {11ull, 12ull}) {
    DiscreteSystem sys = random_stable_linear_discrete(5, 2, 2, 0.6, seed);
    const auto dense = orc::probe_linear(sys);
    const Index r = 2;
    // Horizon long enough that the truncated Gramian tails are negligible.
    const BalancedProjection bpod = bpod_projection(sys, 80, r, 2);
    const orc::BtOracle bt = orc::bt_oracle(dense.A, dense.B, dense.C, r);

    const Vec angles_phi = orc::principal_angles(bpod.phi, bt.phi);
    const Vec angles_psi = orc::principal_angles(bpod.psi, bt.psi);
    CHECK(angles_phi.maxCoeff() < 1e-3);
    CHECK(angles_psi.maxCoeff() < 1e-3);
    for (Index i = 0; i < r; ++i)
      CHECK(std::abs(bpod.sigma[i] - bt.hankel[i]) < 1e-3 * bt.hankel[i]);
  }
}
