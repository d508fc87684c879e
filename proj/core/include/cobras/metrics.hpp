#pragma once

#include <vector>

#include "cobras/types.hpp"

namespace cobras {

enum class ErrorKind { output, state };

/// Per-time normalized squared prediction errors: at each sample,
/// ||pred(t) - truth(t)||^2 divided by the average of ||truth(t)||^2 over all
/// times and all trajectories in the batch. Predictions clipped by divergence
/// may have fewer columns than their truth; their curves simply stop there
/// (the denominator always uses the full truth).
std::vector<Vec> normalized_error_curves(const std::vector<Mat>& predicted,
                                         const std::vector<Mat>& truth, ErrorKind kind);

/// Single-pair convenience, normalized over that pair alone.
Vec normalized_error(const Mat& predicted, const Mat& truth, ErrorKind kind);

/// Mean of the per-time normalized errors over every covered sample in the
/// batch.
double mean_normalized_error(const std::vector<Mat>& predicted, const std::vector<Mat>& truth,
                             ErrorKind kind);

/// Median over trajectories of each trajectory's mean normalized error.
double median_normalized_error(const std::vector<Mat>& predicted, const std::vector<Mat>& truth,
                               ErrorKind kind);

}  // namespace cobras
