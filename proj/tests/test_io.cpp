#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "cobras/io.hpp"
#include "cobras/models.hpp"
#include "cobras/rng.hpp"
#include "cobras/snapshots.hpp"
#include "oracles.hpp"

using namespace cobras;
namespace orc = cobras::oracles;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cobras_io_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("matrix CSV round trip is bit exact") {
  TempDir tmp;
  Rng rng(1);
  Mat m = orc::gaussian_matrix(rng, 5, 3);
  m(0, 0) = 1.0 / 3.0;
  m(1, 2) = 1e-300;
  m(2, 1) = -7.000000000000001e+12;
  const fs::path p = tmp.path / "m.csv";
  write_matrix_csv(p, m);
  const Mat back = read_matrix_csv(p);
  CHECK(back == m);
}

TEST_CASE("trajectory CSV: header, outputs, round trip") {
  TempDir tmp;
  const OdeSystem toy = toy_model();
  const DiscreteSystem dsys = discretize(toy);
  const Trajectory traj = simulate(toy, toy_impulse_state(1.0), zero_inputs(1, 6));
  const Mat ys = outputs_along(dsys, traj);
  const fs::path p = tmp.path / "traj.csv";
  write_trajectory_csv(p, traj, ys);

  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,x1,x2,x3,u1,y1");

  const TrajectoryFile back = read_trajectory_csv(p);
  CHECK(back.trajectory.states == traj.states);
  CHECK(back.trajectory.inputs == traj.inputs);
  CHECK(back.outputs == ys);
  CHECK(back.trajectory.dt == doctest::Approx(0.5));
}

TEST_CASE("snapshot matrix sidecar round trip") {
  TempDir tmp;
  Rng rng(3);
  SnapshotMatrix snap;
  snap.data = orc::gaussian_matrix(rng, 4, 7);
  snap.kind = SnapshotKind::gradient;
  snap.seed = 123456789ull;
  snap.horizon = 5;
  snap.eta_distribution = "gaussian";
  snap.sources = {"a.csv", "b.csv"};
  write_snapshot_matrix(tmp.path / "Y", snap);
  const SnapshotMatrix back = read_snapshot_matrix(tmp.path / "Y");
  CHECK(back.data == snap.data);
  CHECK(back.kind == SnapshotKind::gradient);
  CHECK(back.seed == snap.seed);
  CHECK(back.horizon == 5);
  CHECK(back.eta_distribution == "gaussian");
  CHECK(back.sources == snap.sources);
}

TEST_CASE("gradient set round trip") {
  TempDir tmp;
  Rng rng(4);
  GradientSet set;
  set.base_states = orc::gaussian_matrix(rng, 3, 6);
  set.gradients = orc::gaussian_matrix(rng, 3, 6);
  set.horizon = 4;
  set.seed = 42;
  set.eta = EtaDistribution::rademacher;
  write_gradient_set(tmp.path / "grads", set);
  const GradientSet back = read_gradient_set(tmp.path / "grads");
  CHECK(back.base_states == set.base_states);
  CHECK(back.gradients == set.gradients);
  CHECK(back.horizon == 4);
  CHECK(back.eta == EtaDistribution::rademacher);
}

TEST_CASE("projection and pod directory round trips") {
  TempDir tmp;
  Rng rng(5);
  const Mat X = orc::gaussian_matrix(rng, 6, 8);
  const Mat Y = orc::gaussian_matrix(rng, 6, 8);
  const BalancedProjection proj = cobras_balance(X, Y, 3);
  write_projection(tmp.path / "proj", proj, {"X", "Y"});
  const BalancedProjection back = read_projection(tmp.path / "proj");
  CHECK(back.phi == proj.phi);
  CHECK(back.psi == proj.psi);
  CHECK(back.sigma == proj.sigma);

  const PodBasis pod = pod_basis(X, 2);
  write_pod_basis(tmp.path / "pod", pod);
  const PodBasis pback = read_pod_basis(tmp.path / "pod");
  CHECK(pback.modes == pod.modes);
  CHECK(pback.singular_values == pod.singular_values);
}

TEST_CASE("kernel spec JSON round trip") {
  for (const auto& k :
       {KernelSpec::linear(0.5), KernelSpec::polynomial(1.2, 3.0), KernelSpec::gaussian(8.0)}) {
    const KernelSpec back = kernel_from_json(kernel_to_json(k));
    CHECK(back.family == k.family);
    CHECK(back.alpha == k.alpha);
    CHECK(back.degree == k.degree);
    CHECK(back.width == k.width);
  }
}

TEST_CASE("kernel feature map and kpca map reload to identical behavior") {
  TempDir tmp;
  Rng rng(6);
  const Mat states = orc::gaussian_matrix(rng, 3, 6);
  GradientSet grads;
  grads.base_states = orc::gaussian_matrix(rng, 3, 5);
  grads.gradients = orc::gaussian_matrix(rng, 3, 5);
  const KernelFeatureMap fm = kernel_balance(KernelSpec::gaussian(1.5), states, grads, 2);
  write_kernel_feature_map(tmp.path / "fm", fm);
  const KernelFeatureMap fback = read_kernel_feature_map(tmp.path / "fm");
  const Vec probe = orc::gaussian_vector(rng, 3);
  CHECK((nonlinear_features(fback, probe) - nonlinear_features(fm, probe)).norm() == 0.0);

  const KpcaMap map = kpca_fit(KernelSpec::gaussian(1.5), states, 2);
  write_kpca_map(tmp.path / "kpca", map);
  const KpcaMap mback = read_kpca_map(tmp.path / "kpca");
  CHECK((kpca_features(mback, probe) - kpca_features(map, probe)).norm() == 0.0);
}

TEST_CASE("error curve file format") {
  TempDir tmp;
  Vec curve(3);
  curve << 0.5, 0.25, 0.125;
  write_error_curve(tmp.path / "err.csv", 0.5, curve);
  std::ifstream in(tmp.path / "err.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,err");
  std::getline(in, line);
  CHECK(line == "0,0.5");
  std::getline(in, line);
  CHECK(line == "0.5,0.25");
}

TEST_CASE("reading a missing file raises") {
  CHECK_THROWS_AS((void)read_matrix_csv("/nonexistent/nowhere.csv"), std::runtime_error);
}
