#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cobras/kernels.hpp"
#include "cobras/types.hpp"

namespace cobras {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Raised for malformed configs and mismatched experiment settings; the CLI
/// maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key = value experiment configuration. Every random quantity has an
/// explicit seed and every CLI flag has a config-file equivalent. Unknown keys
/// are rejected.
struct ExperimentConfig {
  // system
  std::string system = "toy";  // toy | surrogate | lti
  double dt = 0.5;
  int substeps = 50;
  Index surrogate_dim = 80;
  std::uint64_t surrogate_seed = 42;
  Index lti_dim = 6;
  Index lti_inputs = 1;
  Index lti_outputs = 1;
  std::uint64_t lti_seed = 7;

  // training data
  std::vector<double> train_magnitudes = {0.5, 1.0};
  Index samples_per_trajectory = 11;
  Index train_steps = 80;  // surrogate training-trajectory length
  int horizon = 5;         // gradient horizon L
  Index gradient_samples = 100;
  std::string eta_distribution = "gaussian";
  std::uint64_t train_seed = 17;

  // projections
  std::vector<Index> ranks = {2};
  Index bpod_horizon = 40;
  Index output_projection_rank = 20;

  // kernels and learned models
  std::string kernel = "gaussian";
  double kernel_width = 8.0;
  double kernel_alpha = 1.0;
  double kernel_degree = 2.0;
  Index feature_rank = 5;
  Index linear_rank = 20;
  std::vector<double> krr_alpha_grid = {1e-6, 1e-4, 1e-2, 1.0};
  std::vector<double> krr_gamma_grid = {1e-3, 1e-2, 1e-1, 1.0};
  int cv_folds = 5;
  std::uint64_t cv_seed = 99;

  // test protocol
  Index test_impulses = 100;
  double impulse_min = 0.0;
  double impulse_max = 1.0;
  Index test_steps = 40;
  Index sin_steps = 40;
  std::uint64_t test_seed = 1001;

  std::string output_dir = "results";

  static ExperimentConfig toy_defaults();
  static ExperimentConfig surrogate_defaults();
  static ExperimentConfig from_file(const std::filesystem::path& path);

  /// Applies one key = value assignment; throws ConfigError on unknown keys or
  /// unparsable values.
  void set(const std::string& key, const std::string& value);

  /// Sorted key = value rendering; serializes losslessly.
  std::string canonical_string() const;
  void to_file(const std::filesystem::path& path) const;
  /// FNV-1a hash of the canonical rendering, as fixed-width hex.
  std::string hash_hex() const;
};

struct MethodSummary {
  std::string method;
  Index rank = 0;
  double mean_error = 0.0;
  double median_error = 0.0;
  int divergence_count = 0;
  std::vector<std::string> files;
};

/// Everything a run produces, written as deterministic JSON (no timestamps, so
/// reruns of the same config are byte-identical).
struct ResultManifest {
  std::string config_hash;
  std::string version = kToolkitVersion;
  std::map<std::string, std::string> config_echo;
  std::vector<MethodSummary> methods;
  std::map<std::string, std::string> spectra;  // label -> file
  std::map<std::string, std::string> extra;

  std::string to_json() const;
};

enum class EmitFormat { csv, json };

/// Kernel described by the config's kernel/kernel_* keys; throws ConfigError
/// on invalid parameters.
KernelSpec kernel_from_config(const ExperimentConfig& config);

/// Writes the manifest and a summary table into dir. With an empty method
/// list only the summary comes out.
std::vector<std::string> emit_results(const ResultManifest& manifest,
                                      const std::filesystem::path& dir, EmitFormat format);

/// Reproduces the toy-model study: two impulse-response training trajectories,
/// state snapshots over their sample points, randomized adjoint gradient
/// sampling with horizon L, then balanced / POD / linearized-balanced
/// Petrov-Galerkin reductions evaluated on random test impulses and a
/// sinusoidal input. Emits error curves, spectra, and a manifest under
/// config.output_dir.
ResultManifest run_toy_experiment(const ExperimentConfig& config);

/// Desk-scale comparison on the non-normal cascade surrogate: the Galerkin
/// pipeline plus kernel-feature models (kernelized balancing and KPCA, each
/// with regression-learned dynamics and reconstruction) evaluated on held-out
/// impulses with state-space error curves.
ResultManifest run_surrogate_experiment(const ExperimentConfig& config);

}  // namespace cobras
