#pragma once

#include "cobras/snapshots.hpp"
#include "cobras/system.hpp"
#include "cobras/types.hpp"

namespace cobras {

/// Thin SVD with a deterministic sign convention: the largest-magnitude entry
/// of each left-singular column is positive (right columns flipped to match).
struct ThinSvd {
  Mat U;
  Vec sigma;
  Mat V;
};
ThinSvd thin_svd_signed(const Mat& M);

/// Oblique projection P = phi * psi^T with psi^T phi = I and the singular
/// values of Y^T X that produced it.
struct BalancedProjection {
  Mat phi;    // n x r
  Mat psi;    // n x r
  Vec sigma;  // r, nonincreasing, positive

  Index rank() const { return sigma.size(); }
  Index state_dim() const { return phi.rows(); }
  /// Applies P = phi psi^T without forming it.
  Mat apply(const Mat& X) const { return phi * (psi.transpose() * X); }
};

struct PodBasis {
  Mat modes;            // n x r, orthonormal columns
  Vec singular_values;  // r, nonincreasing
};

/// Balancing reduction from covariance factors: SVD of Y^T X, truncated to
/// rank r, with
///   phi = X V_r S_r^{-1/2},  psi = Y U_r S_r^{-1/2}.
/// If the numerical rank (singular values above 1e-12 * sigma_1) is below r,
/// the projection is truncated there and a warning is printed; Sigma^{-1/2}
/// can then never produce NaNs. Throws if r exceeds min(s_x, s_g) or if the
/// factors are all zero.
BalancedProjection cobras_balance(const Mat& X, const Mat& Y, Index r);
BalancedProjection cobras_balance(const SnapshotMatrix& X, const SnapshotMatrix& Y, Index r);

/// z = psi^T x, the reduced coordinates of the projection. Never forms an
/// n x n matrix.
Vec linear_features(const BalancedProjection& proj, const Vec& x);

/// Leading left singular vectors of the snapshot factor (method of snapshots).
/// Throws if the numerical rank of X is below r.
PodBasis pod_basis(const Mat& X, Index r);
PodBasis pod_basis(const SnapshotMatrix& X, Index r);

/// Balancing reduction of a stable discrete-time *linear* system from impulse
/// data: direct impulse-response snapshots pair with adjoint impulse-response
/// snapshots of the output-projected system (output projection of the given
/// rank computed by POD of the direct impulse outputs). Linearity is verified
/// by a superposition probe. The factor scaling is left untouched so the
/// singular values approximate Hankel singular values.
BalancedProjection bpod_projection(const DiscreteSystem& linear_sys, Index horizon, Index r,
                                   Index output_projection_rank);

/// Dense cross-validation route for the same projection: solve the generalized
/// eigenvalue problem W_g V = W_x^{-1} V Lambda and form P = V_r V_r^T W_x^{-1}
/// with V_r normalized so V_r^T W_x^{-1} V_r = I. Test oracle only: requires
/// SPD W_x and n <= 200.
Mat generalized_eig_projection(const Mat& W_x, const Mat& W_g, Index r);

/// The balanced-truncation objective Tr[W_x (I-P)^T W_g (I-P)] evaluated in
/// factored form as ||Y^T X - (Y^T phi)(psi^T X)||_F^2; usable as an error
/// diagnostic for any projection without forming n x n matrices.
double truncation_energy(const Mat& X, const Mat& Y, const BalancedProjection& proj);

}  // namespace cobras
