#include "cobras/snapshots.hpp"

#include <cmath>
#include <stdexcept>

namespace cobras {

std::string to_string(EtaDistribution d) {
  return d == EtaDistribution::gaussian ? "gaussian" : "rademacher";
}

EtaDistribution eta_distribution_from_string(const std::string& s) {
  if (s == "gaussian") return EtaDistribution::gaussian;
  if (s == "rademacher") return EtaDistribution::rademacher;
  throw std::invalid_argument("unknown eta distribution: " + s);
}

std::vector<SampleIndex> select_all_states(const std::vector<Trajectory>& trajectories) {
  std::vector<SampleIndex> sel;
  for (Index j = 0; j < static_cast<Index>(trajectories.size()); ++j)
    for (Index t = 0; t < trajectories[static_cast<std::size_t>(j)].states.cols(); ++t)
      sel.push_back({j, t});
  return sel;
}

std::vector<SampleIndex> select_time_range(const std::vector<Trajectory>& trajectories,
                                           Index t_begin, Index t_end) {
  std::vector<SampleIndex> sel;
  for (Index j = 0; j < static_cast<Index>(trajectories.size()); ++j) {
    const Index cols = trajectories[static_cast<std::size_t>(j)].states.cols();
    for (Index t = t_begin; t < t_end && t < cols; ++t) sel.push_back({j, t});
  }
  return sel;
}

SnapshotMatrix build_state_matrix(const std::vector<Trajectory>& trajectories,
                                  const std::vector<SampleIndex>& selection,
                                  const Vec* reference) {
  if (selection.empty()) throw std::invalid_argument("build_state_matrix: empty selection");
  if (trajectories.empty()) throw std::invalid_argument("build_state_matrix: no trajectories");
  const Index n = trajectories.front().states.rows();
  for (const auto& traj : trajectories)
    if (traj.states.rows() != n)
      throw std::invalid_argument("build_state_matrix: state dimension mismatch");
  if (reference != nullptr && reference->size() != n)
    throw std::invalid_argument("build_state_matrix: reference dimension mismatch");

  const Index s = static_cast<Index>(selection.size());
  SnapshotMatrix snap;
  snap.kind = SnapshotKind::state;
  snap.data.resize(n, s);
  const double scale = 1.0 / std::sqrt(static_cast<double>(s));
  for (Index c = 0; c < s; ++c) {
    const auto& [j, t] = selection[static_cast<std::size_t>(c)];
    if (j < 0 || j >= static_cast<Index>(trajectories.size()))
      throw std::invalid_argument("build_state_matrix: trajectory index out of range");
    const Mat& states = trajectories[static_cast<std::size_t>(j)].states;
    if (t < 0 || t >= states.cols())
      throw std::invalid_argument("build_state_matrix: time index out of range");
    snap.data.col(c) = states.col(t);
    if (reference != nullptr) snap.data.col(c) -= *reference;
    snap.data.col(c) *= scale;
  }
  return snap;
}

std::vector<Vec> adjoint_gradient_sequence(const DiscreteSystem& sys, const Trajectory& traj,
                                           Index t_f, const Vec& eta, Index k_max) {
  const Index T = traj.steps();
  if (t_f < 0 || t_f > T)
    throw std::out_of_range("adjoint_gradient_sequence: t_f outside trajectory");
  if (k_max < 0 || k_max > t_f)
    throw std::out_of_range("adjoint_gradient_sequence: k_max exceeds available history");
  if (eta.size() != sys.output_dim)
    throw std::invalid_argument("adjoint_gradient_sequence: eta dimension mismatch");

  const Vec u_final = Vec::Zero(sys.input_dim);
  std::vector<Vec> grads;
  grads.reserve(static_cast<std::size_t>(k_max) + 1);
  const Vec u_tf = (t_f < T) ? Vec(traj.inputs.col(t_f)) : u_final;
  grads.push_back(sys.adjoint_output(traj.states.col(t_f), u_tf, eta));
  for (Index k = 1; k <= k_max; ++k) {
    const Index t = t_f - k;
    grads.push_back(sys.adjoint_step(traj.states.col(t), traj.inputs.col(t), grads.back()));
  }
  return grads;
}

SnapshotMatrix GradientSet::to_snapshot_matrix() const {
  SnapshotMatrix snap;
  snap.kind = SnapshotKind::gradient;
  const Index s = gradients.cols();
  snap.data = gradients / std::sqrt(static_cast<double>(s));
  snap.seed = seed;
  snap.horizon = horizon;
  snap.eta_distribution = to_string(eta);
  return snap;
}

RandomDirection draw_random_direction(Index output_dim, int L, EtaDistribution dist, Rng& rng) {
  if (L < 0) throw std::invalid_argument("draw_random_direction: horizon must be >= 0");
  RandomDirection dir;
  dir.tau = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(L) + 1));
  dir.eta.resize(output_dim);
  const double scale = std::sqrt(static_cast<double>(L) + 1.0);
  for (Index i = 0; i < output_dim; ++i) {
    if (dist == EtaDistribution::gaussian)
      dir.eta[i] = scale * rng.normal();
    else
      dir.eta[i] = (rng.uniform() < 0.5) ? -scale : scale;
  }
  return dir;
}

namespace {

Vec draw_eta(Index output_dim, int L, EtaDistribution dist, Rng& rng) {
  Vec eta(output_dim);
  const double scale = std::sqrt(static_cast<double>(L) + 1.0);
  for (Index i = 0; i < output_dim; ++i) {
    if (dist == EtaDistribution::gaussian)
      eta[i] = scale * rng.normal();
    else
      eta[i] = (rng.uniform() < 0.5) ? -scale : scale;
  }
  return eta;
}

}  // namespace

GradientSet sample_gradients_stationary(const DiscreteSystem& sys,
                                        const std::vector<Trajectory>& mini_trajectories,
                                        const GradientSampleSpec& spec) {
  const int L = spec.horizon;
  if (L < 0) throw std::invalid_argument("sample_gradients_stationary: horizon must be >= 0");
  if (mini_trajectories.empty())
    throw std::invalid_argument("sample_gradients_stationary: no mini-trajectories");
  for (const auto& mt : mini_trajectories)
    if (mt.states.cols() != L + 1)
      throw std::invalid_argument(
          "sample_gradients_stationary: each mini-trajectory must have exactly L+1 states");

  const Index s_g = static_cast<Index>(mini_trajectories.size());
  const Index n = sys.state_dim;
  GradientSet set;
  set.horizon = L;
  set.seed = spec.seed;
  set.eta = spec.eta;
  set.base_states.resize(n, s_g * (L + 1));
  set.gradients.resize(n, s_g * (L + 1));

  Rng root(spec.seed);
  for (Index i = 0; i < s_g; ++i) {
    Rng stream = root.split(static_cast<std::uint64_t>(i));
    const Vec eta = draw_eta(sys.output_dim, L, spec.eta, stream);
    const auto& traj = mini_trajectories[static_cast<std::size_t>(i)];
    const auto grads = adjoint_gradient_sequence(sys, traj, L, eta, L);
    for (int k = 0; k <= L; ++k) {
      const Index col = i * (L + 1) + k;
      set.gradients.col(col) = grads[static_cast<std::size_t>(k)];
      set.base_states.col(col) = traj.states.col(L - k);
    }
  }
  return set;
}

LongSampleBlock long_trajectory_block(const DiscreteSystem& sys, const Trajectory& traj,
                                      int t_prime, int tau_prime, const Vec& eta, int L) {
  const int N = static_cast<int>(traj.steps()) - L;
  if (N < 0) throw std::invalid_argument("long_trajectory_block: trajectory shorter than L+1");
  if (t_prime < 0 || t_prime > N || tau_prime < 0 || tau_prime > L)
    throw std::out_of_range("long_trajectory_block: draw outside its range");

  const int t_f = t_prime + tau_prime;
  const int k_max = std::min(L, t_f);
  const int tau_min = std::max(0, t_f - N);
  const int tau_max = std::min(L, t_f);
  const auto grads = adjoint_gradient_sequence(sys, traj, t_f, eta, k_max);

  LongSampleBlock block;
  block.t_final = t_f;
  block.tau_min = tau_min;
  block.tau_max = tau_max;
  block.scale = 1.0 / std::sqrt(1.0 + static_cast<double>(tau_max - tau_min));
  const Index width = tau_max - tau_min + 1;
  block.columns.resize(sys.state_dim, width);
  block.base_states.resize(sys.state_dim, width);
  for (int k = tau_min; k <= tau_max; ++k) {
    block.columns.col(k - tau_min) = grads[static_cast<std::size_t>(k)];
    block.base_states.col(k - tau_min) = traj.states.col(t_f - k);
  }
  return block;
}

namespace {

GradientSet sample_long_impl(const DiscreteSystem& sys,
                             const std::vector<Trajectory>& trajectories,
                             const GradientSampleSpec& spec) {
  const int L = spec.horizon;
  if (L < 0) throw std::invalid_argument("sample_gradients_long: horizon must be >= 0");
  if (spec.sample_count < 1)
    throw std::invalid_argument("sample_gradients_long: sample_count must be >= 1");
  if (trajectories.empty()) throw std::invalid_argument("sample_gradients_long: no trajectories");
  for (const auto& traj : trajectories)
    if (static_cast<int>(traj.steps()) < L)
      throw std::invalid_argument("sample_gradients_long: trajectory shorter than L+1 states");

  const Index n = sys.state_dim;
  const Index s_g = spec.sample_count;
  std::vector<LongSampleBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(s_g));
  Rng root(spec.seed);
  Index total = 0;
  for (Index i = 0; i < s_g; ++i) {
    // Per-sample stream: draws are (trajectory), t', tau', eta in this order.
    Rng stream = root.split(static_cast<std::uint64_t>(i));
    Index which = 0;
    if (trajectories.size() > 1)
      which = static_cast<Index>(stream.uniform_int(trajectories.size()));
    const auto& traj = trajectories[static_cast<std::size_t>(which)];
    const int N = static_cast<int>(traj.steps()) - L;
    const int t_prime = static_cast<int>(stream.uniform_int(static_cast<std::uint64_t>(N) + 1));
    const int tau_prime = static_cast<int>(stream.uniform_int(static_cast<std::uint64_t>(L) + 1));
    const Vec eta = draw_eta(sys.output_dim, L, spec.eta, stream);
    blocks.push_back(long_trajectory_block(sys, traj, t_prime, tau_prime, eta, L));
    total += blocks.back().columns.cols();
  }

  GradientSet set;
  set.horizon = L;
  set.seed = spec.seed;
  set.eta = spec.eta;
  set.base_states.resize(n, total);
  set.gradients.resize(n, total);
  // Weight each block so that (1/total) * G G^T reproduces the estimator
  // (1/s_g) sum_i (1/nu_i) sum_k g g^T.
  const double mean_width = static_cast<double>(total) / static_cast<double>(s_g);
  Index at = 0;
  for (const auto& block : blocks) {
    const double nu = 1.0 + static_cast<double>(block.tau_max - block.tau_min);
    const double w = std::sqrt(mean_width / nu);
    const Index width = block.columns.cols();
    set.gradients.middleCols(at, width) = w * block.columns;
    set.base_states.middleCols(at, width) = block.base_states;
    at += width;
  }
  return set;
}

}  // namespace

GradientSet sample_gradients_long(const DiscreteSystem& sys, const Trajectory& trajectory,
                                  const GradientSampleSpec& spec) {
  return sample_long_impl(sys, {trajectory}, spec);
}

GradientSet sample_gradients_long(const DiscreteSystem& sys,
                                  const std::vector<Trajectory>& trajectories,
                                  const GradientSampleSpec& spec) {
  return sample_long_impl(sys, trajectories, spec);
}

}  // namespace cobras
