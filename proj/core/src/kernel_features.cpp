#include "cobras/kernel_features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "cobras/rng.hpp"

namespace cobras {

KernelFeatureMap kernel_balance(const KernelSpec& kernel, const Mat& state_samples,
                                const GradientSet& gradients, Index r) {
  const Index n = state_samples.rows();
  const Index s_x = state_samples.cols();
  const Index s_g = gradients.sample_count();
  if (gradients.base_states.rows() != n || gradients.gradients.rows() != n)
    throw std::invalid_argument("kernel_balance: state dimension mismatch");
  if (s_x < 1 || s_g < 1) throw std::invalid_argument("kernel_balance: empty sample set");
  if (r < 1 || r > std::min(s_x, s_g))
    throw std::invalid_argument("kernel_balance: rank exceeds the number of samples");

  KernelFeatureMap fm;
  fm.kernel = kernel;
  fm.state_samples = state_samples;
  fm.gradient_bases = gradients.base_states;
  fm.gradients = gradients.gradients;

  // Duals G(xb_i)^{-1} g_i / sqrt(s_g) reappear in every feature evaluation.
  fm.duals.resize(n, s_g);
  const double inv_sqrt_sg = 1.0 / std::sqrt(static_cast<double>(s_g));
  for (Index i = 0; i < s_g; ++i)
    fm.duals.col(i) =
        inv_sqrt_sg * apply_gram_inverse(kernel, fm.gradient_bases.col(i), fm.gradients.col(i));

  const Vec origin = Vec::Zero(n);
  fm.centering.resize(s_g);
  Mat M(s_g, s_x);
  const double inv_sqrt_sx = 1.0 / std::sqrt(static_cast<double>(s_x));
  for (Index i = 0; i < s_g; ++i) {
    const Vec base = fm.gradient_bases.col(i);
    const Vec dual = fm.duals.col(i);
    const Vec grad_at_origin = grad_kernel(kernel, base, origin);
    fm.centering[i] = dual.dot(grad_at_origin);
    for (Index j = 0; j < s_x; ++j) {
      const Vec grad_at_sample = grad_kernel(kernel, base, state_samples.col(j));
      M(i, j) = inv_sqrt_sx * dual.dot(grad_at_sample - grad_at_origin);
    }
  }

  ThinSvd svd = thin_svd_signed(M);
  const double sigma1 = svd.sigma.size() > 0 ? svd.sigma[0] : 0.0;
  if (sigma1 <= 0.0) throw std::invalid_argument("kernel_balance: all-zero data");
  Index numerical_rank = 0;
  const double cut = 1e-12 * sigma1;
  while (numerical_rank < svd.sigma.size() && svd.sigma[numerical_rank] > cut)
    ++numerical_rank;
  Index r_eff = r;
  if (numerical_rank < r) {
    std::cerr << "kernel_balance: requested rank " << r << " exceeds numerical rank "
              << numerical_rank << "; truncating\n";
    r_eff = numerical_rank;
  }
  fm.left_vectors = svd.U.leftCols(r_eff);
  fm.sigma = svd.sigma.head(r_eff);
  fm.right_vectors = svd.V.leftCols(r_eff);
  return fm;
}

Vec nonlinear_features(const KernelFeatureMap& fm, const Vec& x) {
  if (x.size() != fm.state_dim())
    throw std::invalid_argument("nonlinear_features: dimension mismatch");
  const Index s_g = fm.duals.cols();
  Vec lifted(s_g);
  for (Index i = 0; i < s_g; ++i)
    lifted[i] = fm.duals.col(i).dot(grad_kernel(fm.kernel, fm.gradient_bases.col(i), x));
  const Vec centered = lifted - fm.centering;
  return fm.sigma.cwiseSqrt().cwiseInverse().asDiagonal() *
         (fm.left_vectors.transpose() * centered);
}

Vec feature_derivative(const KernelFeatureMap& fm, const Vec& x, const Vec& v) {
  if (x.size() != fm.state_dim() || v.size() != fm.state_dim())
    throw std::invalid_argument("feature_derivative: dimension mismatch");
  const Index s_g = fm.duals.cols();
  Vec lifted(s_g);
  for (Index i = 0; i < s_g; ++i) {
    const Vec base = fm.gradient_bases.col(i);
    lifted[i] = fm.duals.col(i).dot(cross_hessian_apply(fm.kernel, base, x, v));
  }
  return fm.sigma.cwiseSqrt().cwiseInverse().asDiagonal() *
         (fm.left_vectors.transpose() * lifted);
}

Mat training_features(const KernelFeatureMap& fm) {
  const double root_sx = std::sqrt(static_cast<double>(fm.state_samples.cols()));
  return root_sx * fm.sigma.cwiseSqrt().asDiagonal() * fm.right_vectors.transpose();
}

KpcaMap kpca_fit(const KernelSpec& kernel, const Mat& state_samples, Index r) {
  const Index s_x = state_samples.cols();
  if (s_x < 1) throw std::invalid_argument("kpca_fit: empty sample set");
  if (r < 1 || r > s_x) throw std::invalid_argument("kpca_fit: rank exceeds sample count");

  const Vec origin = Vec::Zero(state_samples.rows());
  Vec k0(s_x);
  for (Index i = 0; i < s_x; ++i)
    k0[i] = eval_kernel(kernel, state_samples.col(i), origin);
  const double k00 = eval_kernel(kernel, origin, origin);

  Mat gram(s_x, s_x);
  for (Index i = 0; i < s_x; ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double kij = eval_kernel(kernel, state_samples.col(i), state_samples.col(j));
      const double centered = kij - k0[i] - k0[j] + k00;
      gram(i, j) = centered;
      gram(j, i) = centered;
    }
  }

  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  if (eig.info() != Eigen::Success) throw std::runtime_error("kpca_fit: eigensolver failed");
  const double lead = eig.eigenvalues()[s_x - 1];
  if (lead <= 0.0) throw std::invalid_argument("kpca_fit: centered Gram has no positive spectrum");
  // Keep eigenpairs above the positivity cut, truncating with a warning if
  // fewer than r remain.
  const double cut = 1e-12 * lead;
  Index usable = 0;
  while (usable < s_x && eig.eigenvalues()[s_x - 1 - usable] > cut) ++usable;
  Index r_eff = r;
  if (usable < r) {
    std::cerr << "kpca_fit: requested rank " << r << " exceeds positive spectrum " << usable
              << "; truncating\n";
    r_eff = usable;
  }

  KpcaMap map;
  map.kernel = kernel;
  map.state_samples = state_samples;
  map.eigvecs.resize(s_x, r_eff);
  map.eigvals.resize(r_eff);
  for (Index j = 0; j < r_eff; ++j) {
    map.eigvals[j] = eig.eigenvalues()[s_x - 1 - j];
    Vec q = eig.eigenvectors().col(s_x - 1 - j);
    // Deterministic sign: largest-magnitude entry positive.
    Index imax = 0;
    q.cwiseAbs().maxCoeff(&imax);
    if (q[imax] < 0.0) q = -q;
    map.eigvecs.col(j) = q;
  }
  return map;
}

Vec kpca_features(const KpcaMap& map, const Vec& x) {
  const Index s_x = map.state_samples.cols();
  if (x.size() != map.state_samples.rows())
    throw std::invalid_argument("kpca_features: dimension mismatch");
  const Vec origin = Vec::Zero(x.size());
  const double k0x = eval_kernel(map.kernel, origin, x);
  const double k00 = eval_kernel(map.kernel, origin, origin);
  Vec centered(s_x);
  for (Index i = 0; i < s_x; ++i) {
    const Vec xi = map.state_samples.col(i);
    centered[i] =
        eval_kernel(map.kernel, xi, x) - eval_kernel(map.kernel, xi, origin) - k0x + k00;
  }
  return map.eigvals.cwiseSqrt().cwiseInverse().asDiagonal() *
         (map.eigvecs.transpose() * centered);
}

Vec kpca_features(const KernelSpec& kernel, const Mat& state_samples, Index r, const Vec& x) {
  return kpca_features(kpca_fit(kernel, state_samples, r), x);
}

KernelDiagnostics kernel_feature_diagnostics(const KernelSpec& kernel, const Mat& state_samples,
                                             std::uint64_t seed, Index pair_checks) {
  KernelDiagnostics diag;
  const Index s_x = state_samples.cols();
  diag.min_pair_separation = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (Index c = 0; c < pair_checks; ++c) {
    const Index i = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(s_x)));
    Index j = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(s_x)));
    if (i == j) j = (j + 1) % s_x;
    if (i == j) continue;  // single sample: nothing to separate
    const Vec xi = state_samples.col(i), xj = state_samples.col(j);
    if ((xi - xj).norm() == 0.0) continue;
    diag.min_pair_separation =
        std::min(diag.min_pair_separation, feature_distance_squared(kernel, xi, xj));
  }
  if (kernel.family == KernelFamily::polynomial) {
    // G(x) has eigenvalues lead and lead * (alpha + p||x||^2)/(alpha + ||x||^2)
    // up to the shared scale; the conditioning ratio is the latter factor.
    for (Index i = 0; i < s_x; ++i) {
      const double s = state_samples.col(i).squaredNorm();
      const double cond = (kernel.alpha + kernel.degree * s) / (kernel.alpha + s);
      diag.worst_gram_condition = std::max(diag.worst_gram_condition, cond);
    }
  }
  return diag;
}

}  // namespace cobras
