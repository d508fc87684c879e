#pragma once

#include <string>

#include "cobras/types.hpp"

namespace cobras {

enum class KernelFamily { linear, polynomial, gaussian };

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& s);

/// A smooth kernel with closed-form derivative machinery:
///   linear      K(x,y) = alpha + x^T y,            alpha >= 0
///   polynomial  K(x,y) = (alpha + x^T y)^p,        alpha > 0, p > 1
///   gaussian    K(x,y) = exp(-||x-y||^2 / 2 sigma^2), sigma > 0
/// Every operation below runs in O(n) time; nothing indexed by the lifted
/// space's dimension is ever materialized.
struct KernelSpec {
  KernelFamily family = KernelFamily::linear;
  double alpha = 0.0;   // offset (linear, polynomial)
  double degree = 2.0;  // p (polynomial)
  double width = 1.0;   // sigma (gaussian)

  static KernelSpec linear(double alpha = 0.0);
  static KernelSpec polynomial(double alpha, double degree);
  static KernelSpec gaussian(double width);
};

double eval_kernel(const KernelSpec& k, const Vec& x, const Vec& y);

/// Gradient of K(x, y) with respect to x.
Vec grad_kernel(const KernelSpec& k, const Vec& x, const Vec& y);

/// Applies the inverse of the derivative Gram matrix
/// G(x) = [d^2 K(x,x) / dx_i dy_j] to v, using the per-family closed form
/// (identity, rank-one update, or sigma^2 I).
Vec apply_gram_inverse(const KernelSpec& k, const Vec& x, const Vec& v);

/// Applies the cross-derivative matrix H(x, y) = [d^2 K(x,y) / dx_i dy_j]
/// to v, used to differentiate kernel feature coordinates.
Vec cross_hessian_apply(const KernelSpec& k, const Vec& x, const Vec& y, const Vec& v);

/// Squared feature-space distance K(x,x) - 2 K(x,y) + K(y,y). Strictly
/// positive for distinct points exactly when the lift separates them, so it
/// doubles as an injectivity witness.
double feature_distance_squared(const KernelSpec& k, const Vec& x, const Vec& y);

}  // namespace cobras
