#include "cobras/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace cobras {

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::linear: return "linear";
    case KernelFamily::polynomial: return "polynomial";
    case KernelFamily::gaussian: return "gaussian";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "linear") return KernelFamily::linear;
  if (s == "polynomial") return KernelFamily::polynomial;
  if (s == "gaussian") return KernelFamily::gaussian;
  throw std::invalid_argument("unknown kernel family: " + s);
}

KernelSpec KernelSpec::linear(double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("linear kernel: alpha must be >= 0");
  KernelSpec k;
  k.family = KernelFamily::linear;
  k.alpha = alpha;
  return k;
}

KernelSpec KernelSpec::polynomial(double alpha, double degree) {
  if (alpha <= 0.0) throw std::invalid_argument("polynomial kernel: alpha must be > 0");
  if (degree <= 1.0) throw std::invalid_argument("polynomial kernel: degree must be > 1");
  KernelSpec k;
  k.family = KernelFamily::polynomial;
  k.alpha = alpha;
  k.degree = degree;
  return k;
}

KernelSpec KernelSpec::gaussian(double width) {
  if (width <= 0.0) throw std::invalid_argument("gaussian kernel: width must be > 0");
  KernelSpec k;
  k.family = KernelFamily::gaussian;
  k.width = width;
  return k;
}

double eval_kernel(const KernelSpec& k, const Vec& x, const Vec& y) {
  switch (k.family) {
    case KernelFamily::linear: return k.alpha + x.dot(y);
    case KernelFamily::polynomial: return std::pow(k.alpha + x.dot(y), k.degree);
    case KernelFamily::gaussian: {
      const double d2 = (x - y).squaredNorm();
      return std::exp(-d2 / (2.0 * k.width * k.width));
    }
  }
  throw std::logic_error("eval_kernel: unreachable");
}

Vec grad_kernel(const KernelSpec& k, const Vec& x, const Vec& y) {
  switch (k.family) {
    case KernelFamily::linear: return y;
    case KernelFamily::polynomial: {
      const double base = k.alpha + x.dot(y);
      return Vec(k.degree * std::pow(base, k.degree - 1.0) * y);
    }
    case KernelFamily::gaussian: {
      const double kv = eval_kernel(k, x, y);
      return Vec(-(kv / (k.width * k.width)) * (x - y));
    }
  }
  throw std::logic_error("grad_kernel: unreachable");
}

Vec apply_gram_inverse(const KernelSpec& k, const Vec& x, const Vec& v) {
  switch (k.family) {
    case KernelFamily::linear: return v;
    case KernelFamily::polynomial: {
      // G(x) = p (alpha + ||x||^2)^{p-1} I + p(p-1)(alpha + ||x||^2)^{p-2} x x^T;
      // rank-one (Sherman-Morrison) closed form of the inverse:
      const double p = k.degree;
      const double s = k.alpha + x.squaredNorm();
      const double lead = 1.0 / (p * std::pow(s, p - 1.0));
      const double coeff = (p - 1.0) / (k.alpha + p * x.squaredNorm());
      return Vec(lead * (v - coeff * x * x.dot(v)));
    }
    case KernelFamily::gaussian: return Vec(k.width * k.width * v);
  }
  throw std::logic_error("apply_gram_inverse: unreachable");
}

Vec cross_hessian_apply(const KernelSpec& k, const Vec& x, const Vec& y, const Vec& v) {
  switch (k.family) {
    case KernelFamily::linear: return v;
    case KernelFamily::polynomial: {
      const double p = k.degree;
      const double base = k.alpha + x.dot(y);
      return Vec(p * std::pow(base, p - 1.0) * v +
                 p * (p - 1.0) * std::pow(base, p - 2.0) * y * x.dot(v));
    }
    case KernelFamily::gaussian: {
      const double s2 = k.width * k.width;
      const double kv = eval_kernel(k, x, y);
      const Vec d = x - y;
      return Vec((kv / s2) * (v - d * (d.dot(v) / s2)));
    }
  }
  throw std::logic_error("cross_hessian_apply: unreachable");
}

double feature_distance_squared(const KernelSpec& k, const Vec& x, const Vec& y) {
  return eval_kernel(k, x, x) - 2.0 * eval_kernel(k, x, y) + eval_kernel(k, y, y);
}

}  // namespace cobras
