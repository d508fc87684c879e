#pragma once

#include <optional>

#include "cobras/balance.hpp"
#include "cobras/system.hpp"
#include "cobras/types.hpp"

namespace cobras {

/// Petrov-Galerkin reduction: trial basis phi, test basis psi with
/// psi^T phi = I, and the reduced system evolving z with
///   z' = psi^T f(phi z, u),   y = g(phi z, u)
/// (continuous-time base, integrated with the base system's RK4 settings), or
///   z(t+1) = psi^T f(phi z(t), u(t))
/// for a discrete-time base.
struct GalerkinRom {
  Mat phi;  // n x r
  Mat psi;  // n x r
  DiscreteSystem reduced;
  double dt = 1.0;

  Index reduced_dim() const { return phi.cols(); }
  Index full_dim() const { return phi.rows(); }
  Vec encode(const Vec& x) const { return psi.transpose() * x; }
  Vec lift(const Vec& z) const { return phi * z; }
};

GalerkinRom build_galerkin_rom(const BalancedProjection& proj, const OdeSystem& sys);
GalerkinRom build_galerkin_rom(const PodBasis& basis, const OdeSystem& sys);
GalerkinRom build_galerkin_rom(const BalancedProjection& proj, const DiscreteSystem& sys,
                               double dt = 1.0);
GalerkinRom build_galerkin_rom(const PodBasis& basis, const DiscreteSystem& sys, double dt = 1.0);

/// Norm threshold above which a reduced state counts as blown up.
inline constexpr double kRomDivergenceNorm = 1e6;

/// A ROM rollout. When the reduced state blows up (non-finite or norm beyond
/// kRomDivergenceNorm), the run is clipped at the last healthy sample and
/// divergence_step records where; divergence is reported, never fatal.
struct RomRun {
  Trajectory reduced;  // r x (T'+1) with T' <= T
  Mat outputs;         // m x (T'+1)
  std::optional<Index> divergence_step;

  bool diverged() const { return divergence_step.has_value(); }
};

/// Rolls the ROM from a full-order initial state (encoded by psi^T x0).
RomRun simulate_rom(const GalerkinRom& rom, const Vec& x0_full, const Mat& inputs);
/// Rolls the ROM from a reduced initial state.
RomRun simulate_rom_reduced(const GalerkinRom& rom, const Vec& z0, const Mat& inputs);

/// Lifted state reconstructions phi z(t) for every retained sample, n x (T'+1).
Mat reconstruct_states(const GalerkinRom& rom, const RomRun& run);

}  // namespace cobras
