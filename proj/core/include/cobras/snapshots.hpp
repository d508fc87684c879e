#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cobras/rng.hpp"
#include "cobras/system.hpp"
#include "cobras/types.hpp"

namespace cobras {

enum class SnapshotKind { state, gradient };
enum class EtaDistribution { gaussian, rademacher };

std::string to_string(EtaDistribution d);
EtaDistribution eta_distribution_from_string(const std::string& s);

/// Column-stacked covariance factor: data * data^T estimates the second-moment
/// matrix of the underlying samples (columns carry their Monte-Carlo weights,
/// 1/sqrt(s) for uniformly weighted samples).
struct SnapshotMatrix {
  Mat data;  // n x s
  SnapshotKind kind = SnapshotKind::state;

  // Provenance, carried into sidecar files.
  std::uint64_t seed = 0;
  int horizon = -1;
  std::string eta_distribution;
  std::vector<std::string> sources;

  Index dim() const { return data.rows(); }
  Index samples() const { return data.cols(); }
};

/// Prediction-horizon offset tau and output direction eta with
/// E[eta eta^T] = (L+1) I; the induced stacked direction has identity covariance.
struct RandomDirection {
  int tau = 0;
  Vec eta;
};

struct GradientSampleSpec {
  int horizon = 0;            // L
  Index sample_count = 0;     // number of Monte-Carlo draws
  EtaDistribution eta = EtaDistribution::gaussian;
  std::uint64_t seed = 0;
};

/// (trajectory index, time index) pair selecting one stored state.
struct SampleIndex {
  Index traj = 0;
  Index time = 0;
};

/// All states of all trajectories, in (trajectory, time) order.
std::vector<SampleIndex> select_all_states(const std::vector<Trajectory>& trajectories);
/// Times [t_begin, t_end) of every trajectory.
std::vector<SampleIndex> select_time_range(const std::vector<Trajectory>& trajectories,
                                           Index t_begin, Index t_end);

/// Stacks the selected states into a covariance factor scaled by 1/sqrt(s).
/// Centering is about the origin; pass `reference` to subtract a chosen state
/// (an equilibrium, say) from every column first.
SnapshotMatrix build_state_matrix(const std::vector<Trajectory>& trajectories,
                                  const std::vector<SampleIndex>& selection,
                                  const Vec* reference = nullptr);

/// Backward recursion for output-direction gradients along stored states:
/// returns g(t_f - k, k) for k = 0..k_max, where g(t, k) is the gradient with
/// respect to x(t) of eta^T y(t+k). The base case pulls eta through the output
/// map; each further step applies the transposed step Jacobian.
std::vector<Vec> adjoint_gradient_sequence(const DiscreteSystem& sys, const Trajectory& traj,
                                           Index t_f, const Vec& eta, Index k_max);

/// Gradient samples with the states they are anchored at. Gradient columns are
/// pre-weighted so that (1/S) * gradients * gradients^T is the covariance
/// estimate with S = gradients.cols(); base_states.col(i) is where
/// gradients.col(i) was taken.
struct GradientSet {
  Mat base_states;  // n x S
  Mat gradients;    // n x S
  int horizon = 0;
  std::uint64_t seed = 0;
  EtaDistribution eta = EtaDistribution::gaussian;

  Index sample_count() const { return gradients.cols(); }
  SnapshotMatrix to_snapshot_matrix() const;
};

/// tau uniform on {0..L}; eta = sqrt(L+1) * zeta with zeta zero-mean, identity
/// covariance under the chosen distribution. Draw order: tau, then eta entries.
RandomDirection draw_random_direction(Index output_dim, int L, EtaDistribution dist, Rng& rng);

/// One adjoint recursion per mini-trajectory (each exactly L+1 states), keeping
/// every intermediate gradient: mini-trajectory i contributes the L+1 columns
/// g(L,0), g(L-1,1), ..., g(0,L) for a single random eta_i. Valid as a
/// covariance estimator when the state distribution is statistically
/// stationary over the window.
GradientSet sample_gradients_stationary(const DiscreteSystem& sys,
                                        const std::vector<Trajectory>& mini_trajectories,
                                        const GradientSampleSpec& spec);

/// Randomized sampling from a long trajectory of N+L+1 states: per draw, pick a
/// final time t_f = t' + tau' with t' ~ U{0..N}, tau' ~ U{0..L}, solve the
/// adjoint recursion once, and keep the gradients whose anchor falls inside the
/// first N+1 states, weighted by the number kept.
GradientSet sample_gradients_long(const DiscreteSystem& sys, const Trajectory& trajectory,
                                  const GradientSampleSpec& spec);

/// Multi-trajectory variant: each draw first picks a trajectory uniformly.
GradientSet sample_gradients_long(const DiscreteSystem& sys,
                                  const std::vector<Trajectory>& trajectories,
                                  const GradientSampleSpec& spec);

/// One deterministic block of the long-trajectory estimator (exposed so the
/// block rules can be tested and enumerated exactly).
struct LongSampleBlock {
  Mat columns;      // n x (tau_max - tau_min + 1), unweighted gradients
  Mat base_states;  // matching anchors
  int t_final = 0;
  int tau_min = 0;
  int tau_max = 0;
  double scale = 1.0;  // 1/sqrt(1 + tau_max - tau_min)
};
LongSampleBlock long_trajectory_block(const DiscreteSystem& sys, const Trajectory& traj,
                                      int t_prime, int tau_prime, const Vec& eta, int L);

}  // namespace cobras
