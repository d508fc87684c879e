#include "cobras/system.hpp"

#include <memory>
#include <vector>

namespace cobras {

namespace {

Vec rk4_substep(const OdeSystem& sys, const Vec& x, const Vec& u, double h) {
  Vec k1 = sys.vector_field(x, u);
  Vec k2 = sys.vector_field(x + (0.5 * h) * k1, u);
  Vec k3 = sys.vector_field(x + (0.5 * h) * k2, u);
  Vec k4 = sys.vector_field(x + h * k3, u);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// v <- (D_x of one substep)^T v, stage points recomputed from the base state.
Vec rk4_substep_adjoint(const OdeSystem& sys, const Vec& x, const Vec& u, double h,
                        const Vec& v) {
  Vec k1 = sys.vector_field(x, u);
  Vec x2 = x + (0.5 * h) * k1;
  Vec k2 = sys.vector_field(x2, u);
  Vec x3 = x + (0.5 * h) * k2;
  Vec k3 = sys.vector_field(x3, u);
  Vec x4 = x + h * k3;

  // Reverse sweep through y = x + h/6 (k1 + 2 k2 + 2 k3 + k4).
  Vec kbar1 = (h / 6.0) * v;
  Vec kbar2 = (h / 3.0) * v;
  Vec kbar3 = (h / 3.0) * v;
  Vec kbar4 = (h / 6.0) * v;
  Vec xbar = v;

  Vec t4 = sys.jacobian_product(x4, u, kbar4);
  xbar += t4;
  kbar3 += h * t4;
  Vec t3 = sys.jacobian_product(x3, u, kbar3);
  xbar += t3;
  kbar2 += (0.5 * h) * t3;
  Vec t2 = sys.jacobian_product(x2, u, kbar2);
  xbar += t2;
  kbar1 += (0.5 * h) * t2;
  xbar += sys.jacobian_product(x, u, kbar1);
  return xbar;
}

}  // namespace

Vec rk4_step(const OdeSystem& sys, const Vec& x, const Vec& u) {
  if (sys.substeps < 1) throw std::invalid_argument("rk4_step: substeps must be >= 1");
  const double h = sys.dt / sys.substeps;
  Vec xi = x;
  for (int s = 0; s < sys.substeps; ++s) {
    xi = rk4_substep(sys, xi, u, h);
    if (!xi.allFinite()) throw BlowUpError("rk4_step: state became non-finite", s);
  }
  return xi;
}

Vec rk4_adjoint_step(const OdeSystem& sys, const Vec& x, const Vec& u, const Vec& v) {
  if (sys.substeps < 1) throw std::invalid_argument("rk4_adjoint_step: substeps must be >= 1");
  const double h = sys.dt / sys.substeps;
  std::vector<Vec> bases(static_cast<std::size_t>(sys.substeps));
  Vec xi = x;
  for (int s = 0; s < sys.substeps; ++s) {
    bases[static_cast<std::size_t>(s)] = xi;
    xi = rk4_substep(sys, xi, u, h);
  }
  Vec w = v;
  for (int s = sys.substeps - 1; s >= 0; --s) {
    w = rk4_substep_adjoint(sys, bases[static_cast<std::size_t>(s)], u, h, w);
  }
  return w;
}

DiscreteSystem discretize(const OdeSystem& sys) {
  auto ode = std::make_shared<const OdeSystem>(sys);
  DiscreteSystem d;
  d.state_dim = ode->state_dim;
  d.input_dim = ode->input_dim;
  d.output_dim = ode->output_dim;
  d.step = [ode](const Vec& x, const Vec& u) { return rk4_step(*ode, x, u); };
  d.adjoint_step = [ode](const Vec& x, const Vec& u, const Vec& v) {
    return rk4_adjoint_step(*ode, x, u, v);
  };
  d.output = ode->output;
  d.adjoint_output = ode->adjoint_output;
  return d;
}

Trajectory simulate(const DiscreteSystem& sys, const Vec& x0, const Mat& inputs, double dt) {
  if (x0.size() != sys.state_dim) throw std::invalid_argument("simulate: x0 dimension mismatch");
  if (inputs.rows() != sys.input_dim)
    throw std::invalid_argument("simulate: input dimension mismatch");
  const Index T = inputs.cols();
  Trajectory traj;
  traj.states.resize(sys.state_dim, T + 1);
  traj.inputs = inputs;
  traj.dt = dt;
  traj.states.col(0) = x0;
  for (Index k = 0; k < T; ++k) {
    Vec next;
    try {
      next = sys.step(traj.states.col(k), inputs.col(k));
    } catch (const BlowUpError&) {
      throw BlowUpError("simulate: state blew up", k);
    }
    if (!next.allFinite()) throw BlowUpError("simulate: state became non-finite", k);
    traj.states.col(k + 1) = next;
  }
  return traj;
}

Trajectory simulate(const OdeSystem& sys, const Vec& x0, const Mat& inputs) {
  Trajectory traj = simulate(discretize(sys), x0, inputs, sys.dt);
  return traj;
}

Mat outputs_along(const DiscreteSystem& sys, const Trajectory& traj) {
  const Index T = traj.steps();
  Mat ys(sys.output_dim, T + 1);
  const Vec u_final = Vec::Zero(sys.input_dim);
  for (Index k = 0; k <= T; ++k) {
    const Vec u = (k < T) ? Vec(traj.inputs.col(k)) : u_final;
    ys.col(k) = sys.output(traj.states.col(k), u);
  }
  return ys;
}

Mat zero_inputs(Index input_dim, Index steps) { return Mat::Zero(input_dim, steps); }

}  // namespace cobras
