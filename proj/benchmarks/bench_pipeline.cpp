#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "cobras/balance.hpp"
#include "cobras/kernel_features.hpp"
#include "cobras/models.hpp"
#include "cobras/regression.hpp"
#include "cobras/rng.hpp"
#include "cobras/snapshots.hpp"

using namespace cobras;

namespace {

Mat gaussian_matrix(Rng& rng, Index rows, Index cols) {
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

void BM_BalanceFactors(benchmark::State& state) {
  const Index n = state.range(0);
  const Index s = 200;
  Rng rng(1);
  const Mat X = gaussian_matrix(rng, n, s);
  const Mat Y = gaussian_matrix(rng, n, s);
  for (auto _ : state) {
    BalancedProjection proj = cobras_balance(X, Y, 10);
    benchmark::DoNotOptimize(proj.phi.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_BalanceFactors)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_Rk4SurrogateStep(benchmark::State& state) {
  const Index n = state.range(0);
  const OdeSystem sys = cascade_surrogate(n, 0.25, 5, 7);
  Rng rng(2);
  const Vec x = Vec::NullaryExpr(n, [&rng](Index) { return rng.normal(); });
  const Vec u = Vec::Ones(1);
  for (auto _ : state) {
    Vec next = rk4_step(sys, x, u);
    benchmark::DoNotOptimize(next.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Rk4SurrogateStep)->Arg(64)->Arg(128)->Arg(256)->Complexity();

void BM_AdjointGradientSequence(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const OdeSystem sys = cascade_surrogate(80, 0.25, 5, 7);
  const DiscreteSystem dsys = discretize(sys);
  const Trajectory traj = simulate(sys, cascade_impulse_state(sys, 0.1), zero_inputs(1, L));
  const Vec eta = Vec::Ones(1);
  for (auto _ : state) {
    auto grads = adjoint_gradient_sequence(dsys, traj, L, eta, L);
    benchmark::DoNotOptimize(grads.back().data());
  }
}
BENCHMARK(BM_AdjointGradientSequence)->Arg(10)->Arg(40);

void BM_KernelBalanceAssembly(benchmark::State& state) {
  const Index n = 80;
  const Index s = state.range(0);
  Rng rng(3);
  const Mat states = gaussian_matrix(rng, n, s);
  GradientSet grads;
  grads.base_states = gaussian_matrix(rng, n, s);
  grads.gradients = gaussian_matrix(rng, n, s);
  const KernelSpec kernel = KernelSpec::gaussian(8.0);
  for (auto _ : state) {
    KernelFeatureMap fm = kernel_balance(kernel, states, grads, 5);
    benchmark::DoNotOptimize(fm.sigma.data());
  }
  state.SetComplexityN(s);
}
BENCHMARK(BM_KernelBalanceAssembly)->RangeMultiplier(2)->Range(64, 512)->Complexity();

void BM_KrrFit(benchmark::State& state) {
  const Index N = state.range(0);
  Rng rng(4);
  const Mat Z = gaussian_matrix(rng, 5, N);
  const Mat targets = gaussian_matrix(rng, 9, N);
  for (auto _ : state) {
    KrrModel model = fit_krr(Z, targets, 0.1, 1e-4);
    benchmark::DoNotOptimize(model.dual_weights.data());
  }
  state.SetComplexityN(N);
}
BENCHMARK(BM_KrrFit)->RangeMultiplier(2)->Range(128, 1024)->Complexity();

}  // namespace

BENCHMARK_MAIN();
