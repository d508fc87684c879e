#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <unistd.h>

#include "cobras/balance.hpp"
#include "cobras/experiment.hpp"
#include "cobras/kernel_features.hpp"
#include "cobras/models.hpp"
#include "cobras/snapshots.hpp"
#include "oracles.hpp"

using namespace cobras;
namespace orc = cobras::oracles;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("cobras_surr_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("surrogate dimensioning is validated") {
  CHECK_THROWS_AS((void)cascade_surrogate(10, 0.25, 5, 1), std::invalid_argument);
  CHECK_THROWS_AS((void)cascade_surrogate(1000, 0.25, 5, 1), std::invalid_argument);
  ExperimentConfig cfg = ExperimentConfig::surrogate_defaults();
  cfg.surrogate_dim = 20;
  CHECK_THROWS_AS((void)run_surrogate_experiment(cfg), ConfigError);
}

TEST_CASE("balancing from impulse states and stationary gradients recovers BT") {
  // On the linear surrogate, state snapshots from impulse responses estimate
  // the controllability Gramian and stationary adjoint samples with a
  // Rademacher direction give the finite-horizon observability Gramian
  // exactly (scalar output), so the reduction must match classical balanced
  // truncation from dense Gramians.
  const Index n = 60;
  const OdeSystem sys = cascade_surrogate(n, 0.25, 5, /*seed=*/5, /*chain_length=*/6, 2.0);
  const DiscreteSystem dsys = discretize(sys);
  const auto dense = orc::probe_linear(dsys);

  // Impulse-response state snapshots over a long horizon.
  const Index T = 120;
  std::vector<Trajectory> trajs;
  trajs.push_back(simulate(sys, cascade_impulse_state(sys, 1.0), zero_inputs(1, T)));
  // x(t) = A_d^t B u0, so columns t = 0.. are B, A B, ... after dropping x(0)=B*1
  // (x(0) itself equals B here, so every column is a Krylov vector).
  const SnapshotMatrix X = build_state_matrix(trajs, select_all_states(trajs));

  // Stationary gradient sampling with a long horizon.
  const int L = 119;
  GradientSampleSpec spec;
  spec.horizon = L;
  spec.sample_count = 2;
  spec.eta = EtaDistribution::rademacher;
  spec.seed = 9;
  std::vector<Trajectory> minis;
  for (int i = 0; i < 2; ++i) {
    Trajectory t;
    t.states = trajs[0].states.leftCols(L + 1);
    t.inputs = trajs[0].inputs.leftCols(L);
    minis.push_back(t);
  }
  const GradientSet grads = sample_gradients_stationary(dsys, minis, spec);
  const SnapshotMatrix Y = grads.to_snapshot_matrix();

  const Index r = 6;
  const BalancedProjection proj = cobras_balance(X, Y, r);
  // The impulse ensemble injects the continuous-time input vector as the
  // initial state, so the reference truncation uses that same vector.
  const Mat B_impulse = cascade_impulse_state(sys, 1.0);
  const orc::BtOracle bt = orc::bt_oracle(dense.A, B_impulse, dense.C, r);
  CHECK(orc::principal_angles(proj.phi, bt.phi).maxCoeff() < 1e-2);
  CHECK(orc::principal_angles(proj.psi, bt.psi).maxCoeff() < 1e-2);
}

TEST_CASE("kernelized pipeline with the linear kernel equals the linear pipeline") {
  const Index n = 60;
  const OdeSystem sys = cascade_surrogate(n, 0.25, 5, /*seed=*/7, 6, 2.0);
  const DiscreteSystem dsys = discretize(sys);
  std::vector<Trajectory> trajs;
  for (double u0 : {0.6, 1.0})
    trajs.push_back(simulate(sys, cascade_impulse_state(sys, u0), zero_inputs(1, 40)));

  const auto selection = select_all_states(trajs);
  const SnapshotMatrix X = build_state_matrix(trajs, selection);
  Mat raw(n, X.samples());
  {
    Index c = 0;
    for (const auto& [j, t] : selection)
      raw.col(c++) = trajs[static_cast<std::size_t>(j)].states.col(t);
  }
  GradientSampleSpec spec;
  spec.horizon = 10;
  spec.sample_count = 30;
  spec.seed = 3;
  const GradientSet grads = sample_gradients_long(dsys, trajs, spec);

  const Index r = 4;
  const BalancedProjection lin = cobras_balance(X, grads.to_snapshot_matrix(), r);
  const KernelFeatureMap fm = kernel_balance(KernelSpec::linear(0.0), raw, grads, r);
  CHECK((fm.sigma - lin.sigma).norm() < 1e-8 * lin.sigma.norm());
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec x = orc::gaussian_vector(rng, n);
    const Vec a = linear_features(lin, x);
    const Vec b = nonlinear_features(fm, x);
    for (Index i = 0; i < r; ++i)
      CHECK(std::min(std::abs(a[i] - b[i]), std::abs(a[i] + b[i])) <
            1e-8 * (1.0 + std::abs(a[i])));
  }
}

TEST_CASE("surrogate experiment runs end to end at reduced size") {
  TempDir tmp;
  ExperimentConfig cfg = ExperimentConfig::surrogate_defaults();
  cfg.surrogate_dim = 60;
  cfg.train_magnitudes = {-0.1, -0.06, 0.03, 0.06, 0.1};
  cfg.train_steps = 50;
  cfg.horizon = 25;
  cfg.gradient_samples = 40;
  cfg.ranks = {8};
  cfg.bpod_horizon = 50;
  cfg.feature_rank = 4;
  cfg.linear_rank = 12;
  cfg.krr_alpha_grid = {1e-6, 1e-3};
  cfg.krr_gamma_grid = {0.01, 0.1};
  cfg.test_impulses = 3;
  cfg.test_steps = 50;
  cfg.output_dir = (tmp.path / "surr").string();

  const ResultManifest manifest = run_surrogate_experiment(cfg);
  REQUIRE(manifest.methods.size() == 5);
  bool saw_kcobras = false, saw_kpca = false;
  for (const auto& m : manifest.methods) {
    CHECK(std::isfinite(m.mean_error));
    if (m.method == "kcobras_krr") saw_kcobras = true;
    if (m.method == "kpca_krr") saw_kpca = true;
    for (const auto& f : m.files) CHECK(fs::exists(fs::path(cfg.output_dir) / f));
  }
  CHECK(saw_kcobras);
  CHECK(saw_kpca);
  CHECK(fs::exists(fs::path(cfg.output_dir) / "kcobras_features" / "kernel.json"));
}
