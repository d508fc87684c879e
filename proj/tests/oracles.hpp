// Independent reference computations used by the test and acceptance suites.
// Everything here is dense and small-n by design; none of it is reachable from
// the production library.
#pragma once

#include <cstdint>

#include "cobras/rng.hpp"
#include "cobras/system.hpp"
#include "cobras/types.hpp"

namespace cobras::oracles {

/// Dense matrix exponential (scaling-and-squaring).
Mat expm(const Mat& A);

/// Solves the discrete (Stein) equation W = A W A^T + Q by doubling;
/// requires spectral radius of A below 1.
Mat stein_solve(const Mat& A, const Mat& Q);

/// Classical balanced truncation of a stable discrete-time (A, B, C) from
/// exact Gramians.
struct BtOracle {
  Mat phi;     // n x r
  Mat psi;     // n x r
  Vec hankel;  // all Hankel singular values, nonincreasing
};
BtOracle bt_oracle(const Mat& A, const Mat& B, const Mat& C, Index r);

/// Principal angles (radians, ascending) between the column spans of A and B.
Vec principal_angles(const Mat& A, const Mat& B);

/// Largest singular value.
double op_norm(const Mat& M);

/// Symmetric PSD square root via eigendecomposition (negatives clipped).
Mat sym_sqrt(const Mat& W);

Mat gaussian_matrix(Rng& rng, Index rows, Index cols);
Vec gaussian_vector(Rng& rng, Index size);

/// Random matrix of exact rank r with singular values in [0.5, 2].
Mat random_rank_r(Rng& rng, Index rows, Index cols, Index r);

/// Random SPD matrix with eigenvalues in [lo, hi].
Mat random_spd(Rng& rng, Index n, double lo, double hi);

/// Random oblique projector of rank r: P = A (B^T A)^{-1} B^T.
Mat random_projector(Rng& rng, Index n, Index r);

/// Dense transition matrix and input/output matrices of a linear
/// DiscreteSystem, recovered by probing with basis vectors.
struct DenseLinear {
  Mat A;
  Mat B;
  Mat C;
};
DenseLinear probe_linear(const DiscreteSystem& sys);

/// Central finite difference of a scalar function along direction w.
template <typename F>
double central_difference(F&& f, const Vec& x, const Vec& w, double eps) {
  return (f(Vec(x + eps * w)) - f(Vec(x - eps * w))) / (2.0 * eps);
}

}  // namespace cobras::oracles
