#pragma once

#include <cstdint>

#include "cobras/system.hpp"
#include "cobras/types.hpp"

namespace cobras {

/// Three-state model with strong nonlinear coupling through the low-variance
/// third coordinate:
///   x1' = -x1 + 20 x1 x3 + u
///   x2' = -2 x2 + 20 x2 x3 + u
///   x3' = -5 x3 + u
///   y   = x1 + x2 + x3
/// Jacobian products are analytic. Default substeps keep the internal RK4 step
/// at 0.01 for dt = 0.5; the stiffest linear rate (-5) is well inside the RK4
/// stability region at that step.
OdeSystem toy_model(double dt = 0.5, int substeps = 50);

/// Impulse-response initial state of magnitude u0 for the toy model: (u0, u0, u0).
Vec toy_impulse_state(double u0);

/// Linearization of the toy model about the origin equilibrium:
/// A = diag(-1,-2,-5), B = (1,1,1)^T, C = (1,1,1).
OdeSystem toy_linearization(double dt = 0.5, int substeps = 50);

/// x' = A x + B u, y = C x as an OdeSystem with analytic adjoints.
OdeSystem linear_ode(const Mat& A, const Mat& B, const Mat& C, double dt, int substeps);

/// x(t+1) = A x + B u, y = C x directly in discrete time.
DiscreteSystem linear_discrete(const Mat& A, const Mat& B, const Mat& C);

/// Random continuous-time stable system: A = G - (rho(G) + margin) I with G a
/// seeded Gaussian matrix, B and C Gaussian. Deterministic given the seed.
OdeSystem random_stable_linear_ode(Index n, Index inputs, Index outputs, double dt,
                                   int substeps, std::uint64_t seed, double margin = 0.5);

/// Random discrete-time stable system with spectral radius scaled to
/// `spectral_radius`. Deterministic given the seed.
DiscreteSystem random_stable_linear_discrete(Index n, Index inputs, Index outputs,
                                             double spectral_radius, std::uint64_t seed);

/// Non-normal surrogate used for desk-scale comparisons: a feed-forward chain of
/// `chain_length` states amplifies a low-variance input coordinate into the
/// high-variance observed end of the chain, padded with seeded, weakly driven
/// stable modes up to dimension n. Input enters at the chain tail and at the
/// padding modes; the output reads the chain head plus a small seeded
/// combination of padding modes. Requires n in [50, 500].
OdeSystem cascade_surrogate(Index n, double dt, int substeps, std::uint64_t seed,
                            Index chain_length = 8, double gain = 2.5);

/// The initial state used for surrogate impulse responses of magnitude u0
/// (the discrete-impulse image of the input matrix).
Vec cascade_impulse_state(const OdeSystem& surrogate, double u0);

/// Dense system matrices recovered from a linear system's callables by probing
/// with basis vectors. Throws if the system is not linear to tolerance.
struct LinearRealization {
  Mat A;  // n x n      (discrete step or continuous vector field)
  Mat B;  // n x q
  Mat C;  // m x n
};
LinearRealization realize_linear(const DiscreteSystem& sys, double tol = 1e-8);

}  // namespace cobras
