#include "cobras/galerkin.hpp"

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>

namespace cobras {

namespace {

// Enforce psi^T phi = I, rebalancing psi when needed; throws on singularity.
void biorthonormalize(Mat& phi, Mat& psi) {
  const Index r = phi.cols();
  const Mat M = psi.transpose() * phi;
  if ((M - Mat::Identity(r, r)).norm() <= 1e-10) return;
  Eigen::FullPivLU<Mat> lu(M);
  if (!lu.isInvertible())
    throw std::invalid_argument("build_galerkin_rom: psi^T phi is singular");
  psi = psi * lu.inverse().transpose();
}

}  // namespace

GalerkinRom build_galerkin_rom(const BalancedProjection& proj, const OdeSystem& sys) {
  if (proj.state_dim() != sys.state_dim)
    throw std::invalid_argument("build_galerkin_rom: projection/system dimension mismatch");
  GalerkinRom rom;
  rom.phi = proj.phi;
  rom.psi = proj.psi;
  biorthonormalize(rom.phi, rom.psi);
  rom.dt = sys.dt;

  auto phi = std::make_shared<const Mat>(rom.phi);
  auto psi = std::make_shared<const Mat>(rom.psi);
  auto base = std::make_shared<const OdeSystem>(sys);
  OdeSystem reduced;
  reduced.state_dim = rom.phi.cols();
  reduced.input_dim = sys.input_dim;
  reduced.output_dim = sys.output_dim;
  reduced.dt = sys.dt;
  reduced.substeps = sys.substeps;
  reduced.vector_field = [phi, psi, base](const Vec& z, const Vec& u) {
    return Vec(psi->transpose() * base->vector_field(*phi * z, u));
  };
  reduced.jacobian_product = [phi, psi, base](const Vec& z, const Vec& u, const Vec& w) {
    return Vec(phi->transpose() * base->jacobian_product(*phi * z, u, *psi * w));
  };
  reduced.output = [phi, base](const Vec& z, const Vec& u) {
    return base->output(*phi * z, u);
  };
  reduced.adjoint_output = [phi, base](const Vec& z, const Vec& u, const Vec& eta) {
    return Vec(phi->transpose() * base->adjoint_output(*phi * z, u, eta));
  };
  rom.reduced = discretize(reduced);
  return rom;
}

GalerkinRom build_galerkin_rom(const PodBasis& basis, const OdeSystem& sys) {
  BalancedProjection proj;
  proj.phi = basis.modes;
  proj.psi = basis.modes;
  proj.sigma = basis.singular_values;
  return build_galerkin_rom(proj, sys);
}

GalerkinRom build_galerkin_rom(const BalancedProjection& proj, const DiscreteSystem& sys,
                               double dt) {
  if (proj.state_dim() != sys.state_dim)
    throw std::invalid_argument("build_galerkin_rom: projection/system dimension mismatch");
  GalerkinRom rom;
  rom.phi = proj.phi;
  rom.psi = proj.psi;
  biorthonormalize(rom.phi, rom.psi);
  rom.dt = dt;

  auto phi = std::make_shared<const Mat>(rom.phi);
  auto psi = std::make_shared<const Mat>(rom.psi);
  auto base = std::make_shared<const DiscreteSystem>(sys);
  DiscreteSystem reduced;
  reduced.state_dim = rom.phi.cols();
  reduced.input_dim = sys.input_dim;
  reduced.output_dim = sys.output_dim;
  reduced.step = [phi, psi, base](const Vec& z, const Vec& u) {
    return Vec(psi->transpose() * base->step(*phi * z, u));
  };
  reduced.adjoint_step = [phi, psi, base](const Vec& z, const Vec& u, const Vec& w) {
    return Vec(phi->transpose() * base->adjoint_step(*phi * z, u, *psi * w));
  };
  reduced.output = [phi, base](const Vec& z, const Vec& u) {
    return base->output(*phi * z, u);
  };
  reduced.adjoint_output = [phi, base](const Vec& z, const Vec& u, const Vec& eta) {
    return Vec(phi->transpose() * base->adjoint_output(*phi * z, u, eta));
  };
  rom.reduced = reduced;
  return rom;
}

GalerkinRom build_galerkin_rom(const PodBasis& basis, const DiscreteSystem& sys, double dt) {
  BalancedProjection proj;
  proj.phi = basis.modes;
  proj.psi = basis.modes;
  proj.sigma = basis.singular_values;
  return build_galerkin_rom(proj, sys, dt);
}

RomRun simulate_rom_reduced(const GalerkinRom& rom, const Vec& z0, const Mat& inputs) {
  const Index T = inputs.cols();
  const Index r = rom.reduced_dim();
  if (z0.size() != r) throw std::invalid_argument("simulate_rom: z0 dimension mismatch");

  Mat states(r, T + 1);
  states.col(0) = z0;
  std::optional<Index> divergence;
  Index last = 0;
  for (Index k = 0; k < T; ++k) {
    Vec next;
    try {
      next = rom.reduced.step(states.col(k), inputs.col(k));
    } catch (const BlowUpError&) {
      divergence = k;
      break;
    }
    if (!next.allFinite() || next.norm() > kRomDivergenceNorm) {
      divergence = k;
      break;
    }
    states.col(k + 1) = next;
    last = k + 1;
  }

  RomRun run;
  run.divergence_step = divergence;
  run.reduced.states = states.leftCols(last + 1);
  run.reduced.inputs = inputs.leftCols(last);
  run.reduced.dt = rom.dt;
  run.outputs.resize(rom.reduced.output_dim, last + 1);
  const Vec u_final = Vec::Zero(rom.reduced.input_dim);
  for (Index k = 0; k <= last; ++k) {
    const Vec u = (k < inputs.cols()) ? Vec(inputs.col(k)) : u_final;
    run.outputs.col(k) = rom.reduced.output(run.reduced.states.col(k), u);
  }
  return run;
}

RomRun simulate_rom(const GalerkinRom& rom, const Vec& x0_full, const Mat& inputs) {
  if (x0_full.size() != rom.full_dim())
    throw std::invalid_argument("simulate_rom: x0 dimension mismatch");
  return simulate_rom_reduced(rom, rom.encode(x0_full), inputs);
}

Mat reconstruct_states(const GalerkinRom& rom, const RomRun& run) {
  return rom.phi * run.reduced.states;
}

}  // namespace cobras
