#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "cobras/kernel_features.hpp"
#include "cobras/system.hpp"
#include "cobras/types.hpp"

namespace cobras {

/// Kernel ridge regression with a Gaussian RBF kernel
/// exp(-gamma ||z - z'||^2) on variance-normalized coordinates. Inputs and
/// targets are scaled to unit variance per coordinate at fit time; predictions
/// are returned in the original units.
struct KrrModel {
  Mat training_inputs;  // d x N, normalized
  Mat dual_weights;     // N x c
  Vec input_scales;     // d
  Vec target_scales;    // c
  double rbf_gamma = 1.0;
  double ridge_alpha = 0.0;

  Index input_dim() const { return training_inputs.rows(); }
  Index target_dim() const { return dual_weights.cols(); }
};

KrrModel fit_krr(const Mat& inputs, const Mat& targets, double rbf_gamma, double ridge_alpha);
Vec krr_predict(const KrrModel& model, const Vec& z);
Mat krr_predict(const KrrModel& model, const Mat& Z);

/// Cross-validation over an (alpha, gamma) grid with deterministic fold
/// assignment: each sample group (a trajectory, say) is cut into `folds`
/// contiguous blocks to avoid temporal leakage, and blocks are assigned to
/// folds by a seeded permutation. Selects the grid point with the smallest
/// mean held-out MSE; ties break toward larger alpha, then larger gamma.
struct CvResult {
  double alpha = 0.0;
  double gamma = 0.0;
  Mat mean_mse;  // alpha_grid.size() x gamma_grid.size()
};
CvResult cross_validate_krr(const Mat& inputs, const Mat& targets,
                            const std::vector<double>& alpha_grid,
                            const std::vector<double>& gamma_grid, int folds,
                            std::uint64_t seed,
                            const std::vector<std::pair<Index, Index>>& groups = {});

struct CvConfig {
  std::vector<double> alpha_grid;
  std::vector<double> gamma_grid;
  int folds = 5;
  std::uint64_t seed = 0;
};

/// Feature encoders usable by learned models: a fitted kernelized balancing
/// map, a kernel PCA map, or a plain matrix E acting as z = E x.
using FeatureEncoder = std::variant<KernelFeatureMap, KpcaMap, Mat>;
Vec encode_features(const FeatureEncoder& encoder, const Vec& x);
Index encoder_dim(const FeatureEncoder& encoder);

/// Linear coordinate system used for reconstruction targets and the final
/// lift: coords = encode * x (R x n), x_hat = lift * coords (n x R).
struct LinearLift {
  Mat encode;
  Mat lift;
};

/// Discrete-time model learned by regression in feature coordinates:
/// dynamics advances z(t+1) from z(t); reconstruction maps z to the leading
/// linear coordinates, which lift back to the full state.
struct LearnedRom {
  FeatureEncoder encoder;
  KrrModel dynamics;
  KrrModel reconstruction;
  LinearLift linear;
  double dt = 1.0;
  double dynamics_alpha = 0.0, dynamics_gamma = 0.0;
  double reconstruction_alpha = 0.0, reconstruction_gamma = 0.0;

  Index feature_dim() const { return encoder_dim(encoder); }
};

/// Fits the dynamics on (z(t) -> z(t+1)) pairs pooled over the trajectories
/// and the reconstruction on (z(t) -> linear coordinates of x(t)), selecting
/// hyperparameters by cross-validation per model. All trajectories must share
/// the same sampling interval.
LearnedRom learn_feature_rom(const FeatureEncoder& encoder,
                             const std::vector<Trajectory>& trajectories,
                             const LinearLift& linear, const CvConfig& dynamics_cv,
                             const CvConfig& reconstruction_cv);

/// Autonomous rollout of a learned model for `steps` steps from x0's features,
/// reconstructing full states along the way. Clipped on divergence like the
/// Galerkin runs.
struct LearnedRomRun {
  Mat features;  // r x (T'+1)
  Mat states;    // n x (T'+1)
  std::optional<Index> divergence_step;
  bool diverged() const { return divergence_step.has_value(); }
};
LearnedRomRun rollout_learned(const LearnedRom& rom, const Vec& x0, Index steps);

}  // namespace cobras
