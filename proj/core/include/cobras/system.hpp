#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include "cobras/types.hpp"

namespace cobras {

/// Thrown when a state stops being finite during time stepping. Carries the
/// index of the offending step so harnesses can record divergence times.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, Index step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  Index step() const { return step_; }

 private:
  Index step_;
};

/// Discrete-time system
///   x(t+1) = step(x(t), u(t)),   y(t) = output(x(t), u(t)),
/// together with the exact transpose-Jacobian products needed by adjoint
/// recursions:
///   adjoint_step(x, u, v)    = D_x step(x, u)^T v
///   adjoint_output(x, u, w)  = D_x output(x, u)^T w
///
/// Systems are immutable after construction and safe to share across threads;
/// all callables must be pure functions of their arguments.
struct DiscreteSystem {
  Index state_dim = 0;
  Index input_dim = 0;
  Index output_dim = 0;
  std::function<Vec(const Vec&, const Vec&)> step;
  std::function<Vec(const Vec&, const Vec&)> output;
  std::function<Vec(const Vec&, const Vec&, const Vec&)> adjoint_step;
  std::function<Vec(const Vec&, const Vec&, const Vec&)> adjoint_output;
};

/// Continuous-time system sampled at a fixed interval dt. The discretization
/// is classical RK4 with `substeps` internal stages per interval and zero-order
/// hold on the input; its adjoint is the exact transpose of the linearized RK4
/// composition (discretize-then-adjoint), so finite-difference checks hold to
/// integrator roundoff rather than to the continuous-adjoint truncation error.
struct OdeSystem {
  Index state_dim = 0;
  Index input_dim = 0;
  Index output_dim = 0;
  std::function<Vec(const Vec&, const Vec&)> vector_field;
  /// jacobian_product(x, u, v) = D_x vector_field(x, u)^T v
  std::function<Vec(const Vec&, const Vec&, const Vec&)> jacobian_product;
  std::function<Vec(const Vec&, const Vec&)> output;
  std::function<Vec(const Vec&, const Vec&, const Vec&)> adjoint_output;
  double dt = 0.1;
  int substeps = 1;
};

/// A stored sample path: states has one more column than inputs.
struct Trajectory {
  Mat states;  // n x (T+1)
  Mat inputs;  // q x T
  int t0 = 0;
  double dt = 1.0;

  Index steps() const { return states.cols() - 1; }
  Index state_dim() const { return states.rows(); }
};

/// One sampling interval of classical RK4 (substeps internal stages, ZOH input).
/// Throws BlowUpError if the state stops being finite (carries the substep index).
Vec rk4_step(const OdeSystem& sys, const Vec& x, const Vec& u);

/// Exact transpose-Jacobian of rk4_step at (x, u) applied to v, assembled by
/// transposing the chain of RK4 stage linearizations in reverse order.
Vec rk4_adjoint_step(const OdeSystem& sys, const Vec& x, const Vec& u, const Vec& v);

/// Wraps an OdeSystem as a DiscreteSystem whose step is the RK4 composition
/// over one sampling interval.
DiscreteSystem discretize(const OdeSystem& sys);

/// Rolls the system forward for inputs.cols() steps. Propagates blow-up with
/// the offending step index.
Trajectory simulate(const DiscreteSystem& sys, const Vec& x0, const Mat& inputs, double dt = 1.0);
Trajectory simulate(const OdeSystem& sys, const Vec& x0, const Mat& inputs);

/// Output samples y(t) along a trajectory, m x (T+1). The final sample has no
/// stored input and is evaluated with u = 0.
Mat outputs_along(const DiscreteSystem& sys, const Trajectory& traj);

/// q x T all-zero input sequence.
Mat zero_inputs(Index input_dim, Index steps);

}  // namespace cobras
