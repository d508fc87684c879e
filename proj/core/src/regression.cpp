#include "cobras/regression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cobras/galerkin.hpp"
#include "cobras/rng.hpp"

namespace cobras {

namespace {

Vec column_scales(const Mat& data) {
  // Population standard deviation per row; zero-variance rows keep scale 1.
  Vec scales(data.rows());
  const double inv_n = 1.0 / static_cast<double>(data.cols());
  for (Index i = 0; i < data.rows(); ++i) {
    const double mean = data.row(i).mean();
    const double var = (data.row(i).array() - mean).square().sum() * inv_n;
    scales[i] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return scales;
}

Mat rbf_gram(const Mat& A, const Mat& B, double gamma) {
  Mat gram(A.cols(), B.cols());
  for (Index j = 0; j < B.cols(); ++j)
    for (Index i = 0; i < A.cols(); ++i)
      gram(i, j) = std::exp(-gamma * (A.col(i) - B.col(j)).squaredNorm());
  return gram;
}

}  // namespace

KrrModel fit_krr(const Mat& inputs, const Mat& targets, double rbf_gamma, double ridge_alpha) {
  if (inputs.cols() != targets.cols())
    throw std::invalid_argument("fit_krr: sample count mismatch");
  if (inputs.cols() < 1) throw std::invalid_argument("fit_krr: need at least one sample");
  if (!inputs.allFinite() || !targets.allFinite())
    throw std::invalid_argument("fit_krr: non-finite training data");
  if (ridge_alpha < 0.0) throw std::invalid_argument("fit_krr: ridge_alpha must be >= 0");

  KrrModel model;
  model.rbf_gamma = rbf_gamma;
  model.ridge_alpha = ridge_alpha;
  model.input_scales = column_scales(inputs);
  model.target_scales = column_scales(targets);
  model.training_inputs = model.input_scales.cwiseInverse().asDiagonal() * inputs;
  const Mat targets_normalized = model.target_scales.cwiseInverse().asDiagonal() * targets;

  const Index N = inputs.cols();
  Mat gram = rbf_gram(model.training_inputs, model.training_inputs, rbf_gamma);
  gram.diagonal().array() += ridge_alpha;
  Eigen::LDLT<Mat> solver(gram);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("fit_krr: Gram factorization failed");
  model.dual_weights = solver.solve(targets_normalized.transpose());
  if (model.dual_weights.rows() != N)
    throw std::runtime_error("fit_krr: solve produced wrong shape");
  return model;
}

Mat krr_predict(const KrrModel& model, const Mat& Z) {
  if (Z.rows() != model.input_dim()) throw std::invalid_argument("krr_predict: dim mismatch");
  const Mat z_normalized = model.input_scales.cwiseInverse().asDiagonal() * Z;
  const Mat cross = rbf_gram(model.training_inputs, z_normalized, model.rbf_gamma);  // N x M
  Mat pred = model.dual_weights.transpose() * cross;                                 // c x M
  return model.target_scales.asDiagonal() * pred;
}

Vec krr_predict(const KrrModel& model, const Vec& z) {
  return Vec(krr_predict(model, Mat(z)));
}

CvResult cross_validate_krr(const Mat& inputs, const Mat& targets,
                            const std::vector<double>& alpha_grid,
                            const std::vector<double>& gamma_grid, int folds,
                            std::uint64_t seed,
                            const std::vector<std::pair<Index, Index>>& groups) {
  const Index N = inputs.cols();
  if (alpha_grid.empty() || gamma_grid.empty())
    throw std::invalid_argument("cross_validate_krr: empty grid");
  if (folds < 2) throw std::invalid_argument("cross_validate_krr: folds must be >= 2");
  if (N < folds) throw std::invalid_argument("cross_validate_krr: fewer samples than folds");
  if (inputs.cols() != targets.cols())
    throw std::invalid_argument("cross_validate_krr: sample count mismatch");

  std::vector<std::pair<Index, Index>> segs = groups;
  if (segs.empty()) segs.push_back({0, N});

  // Contiguous blocks within each group keep temporally adjacent samples
  // together; a seeded permutation decides which fold each block lands in.
  std::vector<int> fold_of(static_cast<std::size_t>(N), 0);
  Rng rng(seed);
  for (const auto& [begin, end] : segs) {
    if (begin < 0 || end > N || begin >= end)
      throw std::invalid_argument("cross_validate_krr: bad group bounds");
    const Index len = end - begin;
    std::vector<int> perm(static_cast<std::size_t>(folds));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = folds - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    for (Index t = 0; t < len; ++t) {
      const Index block = (t * folds) / len;
      fold_of[static_cast<std::size_t>(begin + t)] =
          perm[static_cast<std::size_t>(std::min<Index>(block, folds - 1))];
    }
  }

  CvResult result;
  result.mean_mse.resize(static_cast<Index>(alpha_grid.size()),
                         static_cast<Index>(gamma_grid.size()));
  result.mean_mse.setZero();

  for (int fold = 0; fold < folds; ++fold) {
    std::vector<Index> train_idx, test_idx;
    for (Index i = 0; i < N; ++i)
      (fold_of[static_cast<std::size_t>(i)] == fold ? test_idx : train_idx).push_back(i);
    if (test_idx.empty() || train_idx.empty())
      throw std::invalid_argument("cross_validate_krr: a fold came out empty");
    Mat train_in(inputs.rows(), static_cast<Index>(train_idx.size()));
    Mat train_tg(targets.rows(), static_cast<Index>(train_idx.size()));
    Mat test_in(inputs.rows(), static_cast<Index>(test_idx.size()));
    Mat test_tg(targets.rows(), static_cast<Index>(test_idx.size()));
    for (std::size_t c = 0; c < train_idx.size(); ++c) {
      train_in.col(static_cast<Index>(c)) = inputs.col(train_idx[c]);
      train_tg.col(static_cast<Index>(c)) = targets.col(train_idx[c]);
    }
    for (std::size_t c = 0; c < test_idx.size(); ++c) {
      test_in.col(static_cast<Index>(c)) = inputs.col(test_idx[c]);
      test_tg.col(static_cast<Index>(c)) = targets.col(test_idx[c]);
    }
    for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
      for (std::size_t g = 0; g < gamma_grid.size(); ++g) {
        const KrrModel model = fit_krr(train_in, train_tg, gamma_grid[g], alpha_grid[a]);
        const Mat pred = krr_predict(model, test_in);
        const double mse = (pred - test_tg).squaredNorm() /
                           static_cast<double>(test_tg.size());
        result.mean_mse(static_cast<Index>(a), static_cast<Index>(g)) += mse / folds;
      }
    }
  }

  // Smallest mean MSE; ties prefer stronger regularization (larger alpha,
  // then larger gamma).
  Index best_a = 0, best_g = 0;
  double best = result.mean_mse(0, 0);
  for (Index a = 0; a < result.mean_mse.rows(); ++a) {
    for (Index g = 0; g < result.mean_mse.cols(); ++g) {
      const double v = result.mean_mse(a, g);
      const bool better =
          v < best ||
          (v == best && (alpha_grid[static_cast<std::size_t>(a)] >
                             alpha_grid[static_cast<std::size_t>(best_a)] ||
                         (alpha_grid[static_cast<std::size_t>(a)] ==
                              alpha_grid[static_cast<std::size_t>(best_a)] &&
                          gamma_grid[static_cast<std::size_t>(g)] >
                              gamma_grid[static_cast<std::size_t>(best_g)])));
      if (better) {
        best = v;
        best_a = a;
        best_g = g;
      }
    }
  }
  result.alpha = alpha_grid[static_cast<std::size_t>(best_a)];
  result.gamma = gamma_grid[static_cast<std::size_t>(best_g)];
  return result;
}

Vec encode_features(const FeatureEncoder& encoder, const Vec& x) {
  if (std::holds_alternative<KernelFeatureMap>(encoder))
    return nonlinear_features(std::get<KernelFeatureMap>(encoder), x);
  if (std::holds_alternative<KpcaMap>(encoder))
    return kpca_features(std::get<KpcaMap>(encoder), x);
  return Vec(std::get<Mat>(encoder) * x);
}

Index encoder_dim(const FeatureEncoder& encoder) {
  if (std::holds_alternative<KernelFeatureMap>(encoder))
    return std::get<KernelFeatureMap>(encoder).feature_dim();
  if (std::holds_alternative<KpcaMap>(encoder))
    return std::get<KpcaMap>(encoder).feature_dim();
  return std::get<Mat>(encoder).rows();
}

LearnedRom learn_feature_rom(const FeatureEncoder& encoder,
                             const std::vector<Trajectory>& trajectories,
                             const LinearLift& linear, const CvConfig& dynamics_cv,
                             const CvConfig& reconstruction_cv) {
  if (trajectories.empty()) throw std::invalid_argument("learn_feature_rom: no trajectories");
  const double dt = trajectories.front().dt;
  for (const auto& traj : trajectories)
    if (traj.dt != dt)
      throw std::invalid_argument("learn_feature_rom: inconsistent sampling intervals");
  const Index r = encoder_dim(encoder);

  Index total_states = 0, total_pairs = 0;
  for (const auto& traj : trajectories) {
    total_states += traj.states.cols();
    total_pairs += traj.states.cols() - 1;
  }

  Mat all_features(r, total_states);
  Mat coords(linear.encode.rows(), total_states);
  Mat dyn_in(r, total_pairs), dyn_out(r, total_pairs);
  std::vector<std::pair<Index, Index>> state_groups, pair_groups;
  Index sc = 0, pc = 0;
  for (const auto& traj : trajectories) {
    const Index T1 = traj.states.cols();
    const Index s_begin = sc, p_begin = pc;
    for (Index t = 0; t < T1; ++t) {
      all_features.col(sc) = encode_features(encoder, traj.states.col(t));
      coords.col(sc) = linear.encode * traj.states.col(t);
      ++sc;
    }
    for (Index t = 0; t + 1 < T1; ++t) {
      dyn_in.col(pc) = all_features.col(s_begin + t);
      dyn_out.col(pc) = all_features.col(s_begin + t + 1);
      ++pc;
    }
    state_groups.push_back({s_begin, sc});
    pair_groups.push_back({p_begin, pc});
  }

  LearnedRom rom;
  rom.encoder = encoder;
  rom.linear = linear;
  rom.dt = dt;

  const CvResult dyn_pick = cross_validate_krr(dyn_in, dyn_out, dynamics_cv.alpha_grid,
                                               dynamics_cv.gamma_grid, dynamics_cv.folds,
                                               dynamics_cv.seed, pair_groups);
  rom.dynamics = fit_krr(dyn_in, dyn_out, dyn_pick.gamma, dyn_pick.alpha);
  rom.dynamics_alpha = dyn_pick.alpha;
  rom.dynamics_gamma = dyn_pick.gamma;

  const CvResult rec_pick = cross_validate_krr(all_features, coords,
                                               reconstruction_cv.alpha_grid,
                                               reconstruction_cv.gamma_grid,
                                               reconstruction_cv.folds,
                                               reconstruction_cv.seed, state_groups);
  rom.reconstruction = fit_krr(all_features, coords, rec_pick.gamma, rec_pick.alpha);
  rom.reconstruction_alpha = rec_pick.alpha;
  rom.reconstruction_gamma = rec_pick.gamma;
  return rom;
}

LearnedRomRun rollout_learned(const LearnedRom& rom, const Vec& x0, Index steps) {
  const Index r = rom.feature_dim();
  Mat features(r, steps + 1);
  features.col(0) = encode_features(rom.encoder, x0);
  std::optional<Index> divergence;
  Index last = 0;
  for (Index k = 0; k < steps; ++k) {
    const Vec next = krr_predict(rom.dynamics, Vec(features.col(k)));
    if (!next.allFinite() || next.norm() > kRomDivergenceNorm) {
      divergence = k;
      break;
    }
    features.col(k + 1) = next;
    last = k + 1;
  }

  LearnedRomRun run;
  run.divergence_step = divergence;
  run.features = features.leftCols(last + 1);
  run.states.resize(rom.linear.lift.rows(), last + 1);
  for (Index k = 0; k <= last; ++k)
    run.states.col(k) = rom.linear.lift * krr_predict(rom.reconstruction, Vec(run.features.col(k)));
  return run;
}

}  // namespace cobras
