#pragma once

#include "cobras/balance.hpp"
#include "cobras/kernels.hpp"
#include "cobras/snapshots.hpp"
#include "cobras/types.hpp"

namespace cobras {

/// Fitted nonlinear feature extractor from the kernelized balancing reduction.
/// Feature evaluation needs only kernel calls against the stored samples:
/// nothing is ever indexed by the lifted space's dimension.
struct KernelFeatureMap {
  KernelSpec kernel;
  Mat state_samples;    // n x s_x, raw states
  Mat gradient_bases;   // n x s_g, states the gradients are anchored at
  Mat gradients;        // n x s_g, weighted gradient samples
  Mat duals;            // n x s_g, G(base_i)^{-1} g_i / sqrt(s_g), precomputed
  Mat left_vectors;     // s_g x r
  Vec sigma;            // r, nonincreasing, positive
  Mat right_vectors;    // s_x x r
  Vec centering;        // s_g, the lifted-origin coordinates of the gradients

  Index feature_dim() const { return sigma.size(); }
  Index state_dim() const { return state_samples.rows(); }
};

/// Kernelized balancing reduction: assembles the s_g x s_x matrix of inner
/// products between lifted gradients and origin-centered lifted states,
///   M_ij = (1/sqrt(s_g s_x)) g_i^T G(xb_i)^{-1} (grad_x K(xb_i, x_j) - grad_x K(xb_i, 0)),
/// takes its SVD, and keeps the leading r triplets (graceful truncation with a
/// warning if the numerical rank is below r, as in cobras_balance).
KernelFeatureMap kernel_balance(const KernelSpec& kernel, const Mat& state_samples,
                                const GradientSet& gradients, Index r);

/// z(x): origin-centered projection of the lifted state onto the balanced
/// directions. Exactly zero at x = 0. O(s_g * n) per call.
Vec nonlinear_features(const KernelFeatureMap& fm, const Vec& x);

/// Dz(x) v via the cross-derivative matrices H(xb_i, x).
Vec feature_derivative(const KernelFeatureMap& fm, const Vec& x, const Vec& v);

/// Features of the training states themselves, computed by the shortcut
/// sqrt(s_x) * Sigma_r^{1/2} V_r^T (column j belongs to state_samples.col(j)).
Mat training_features(const KernelFeatureMap& fm);

/// Kernel PCA about the origin: eigen-decomposition of the centered Gram
/// matrix Gt_ij = K(x_i,x_j) - K(x_i,0) - K(0,x_j) + K(0,0). Feature j of x is
/// the projection of the centered lift of x onto the j-th unit eigenfunction.
struct KpcaMap {
  KernelSpec kernel;
  Mat state_samples;  // n x s_x
  Mat eigvecs;        // s_x x r
  Vec eigvals;        // r, eigenvalues of the (unnormalized) centered Gram

  Index feature_dim() const { return eigvals.size(); }
};

KpcaMap kpca_fit(const KernelSpec& kernel, const Mat& state_samples, Index r);
Vec kpca_features(const KpcaMap& map, const Vec& x);
/// One-shot convenience: fit on the samples and evaluate at x.
Vec kpca_features(const KernelSpec& kernel, const Mat& state_samples, Index r, const Vec& x);

/// Spot-check diagnostics for a kernel on a sample set: the smallest
/// feature-space separation over random distinct pairs (positive means the
/// lift is injective on those pairs) and, for the polynomial family, the worst
/// conditioning ratio of the derivative Gram matrix over the samples. Callers
/// are expected to warn, not fail, on suspicious values.
struct KernelDiagnostics {
  double min_pair_separation = 0.0;
  double worst_gram_condition = 1.0;
};
KernelDiagnostics kernel_feature_diagnostics(const KernelSpec& kernel, const Mat& state_samples,
                                             std::uint64_t seed, Index pair_checks = 64);

}  // namespace cobras
