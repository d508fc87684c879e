#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cobras/balance.hpp"
#include "cobras/kernel_features.hpp"
#include "cobras/snapshots.hpp"
#include "cobras/system.hpp"
#include "cobras/types.hpp"

namespace cobras {

/// All numeric text is written with 17 significant digits, enough to make
/// CSV round trips bit-exact for doubles.
std::string format_double(double v);

void write_matrix_csv(const std::filesystem::path& path, const Mat& m);
Mat read_matrix_csv(const std::filesystem::path& path);

/// Trajectory CSV: header `t,x1..xn,u1..uq,y1..ym`, one row per sample. The
/// final row has no stored input; its u columns are written as zeros and its
/// outputs are evaluated with u = 0.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const Mat& outputs);

struct TrajectoryFile {
  Trajectory trajectory;
  Mat outputs;
};
TrajectoryFile read_trajectory_csv(const std::filesystem::path& path);

/// Snapshot matrices live as `<base>.csv` plus a `<base>.json` sidecar carrying
/// kind, shape, seed, horizon, eta distribution, and source trajectory ids.
void write_snapshot_matrix(const std::filesystem::path& base, const SnapshotMatrix& snap);
SnapshotMatrix read_snapshot_matrix(const std::filesystem::path& base);

/// Gradient sets serialize to a directory: base_states.csv, gradients.csv,
/// meta.json.
void write_gradient_set(const std::filesystem::path& dir, const GradientSet& set);
GradientSet read_gradient_set(const std::filesystem::path& dir);

/// Projections serialize to a directory: phi.csv, psi.csv, sigma.csv,
/// meta.json (rank, tolerances, sign convention tag, source ids).
void write_projection(const std::filesystem::path& dir, const BalancedProjection& proj,
                      const std::vector<std::string>& source_ids = {});
BalancedProjection read_projection(const std::filesystem::path& dir);

void write_pod_basis(const std::filesystem::path& dir, const PodBasis& basis);
PodBasis read_pod_basis(const std::filesystem::path& dir);

/// Kernel feature maps serialize to a directory: kernel parameters (JSON) and
/// the sample/factor matrices (CSV).
void write_kernel_feature_map(const std::filesystem::path& dir, const KernelFeatureMap& fm);
KernelFeatureMap read_kernel_feature_map(const std::filesystem::path& dir);

void write_kpca_map(const std::filesystem::path& dir, const KpcaMap& map);
KpcaMap read_kpca_map(const std::filesystem::path& dir);

/// Error curves: CSV `t,err` rows.
void write_error_curve(const std::filesystem::path& path, double dt, const Vec& curve);

std::string kernel_to_json(const KernelSpec& k);
KernelSpec kernel_from_json(const std::string& text);

}  // namespace cobras
