#include "cobras/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace cobras {

namespace {

double truth_mean_square(const std::vector<Mat>& truth) {
  double sum = 0.0;
  Index count = 0;
  for (const Mat& y : truth) {
    sum += y.colwise().squaredNorm().sum();
    count += y.cols();
  }
  if (count == 0) throw std::invalid_argument("normalized_error: empty truth set");
  const double avg = sum / static_cast<double>(count);
  if (avg <= 0.0) throw std::invalid_argument("normalized_error: zero-energy truth");
  return avg;
}

void check_shapes(const std::vector<Mat>& predicted, const std::vector<Mat>& truth) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("normalized_error: trajectory count mismatch");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i].rows() != truth[i].rows())
      throw std::invalid_argument("normalized_error: sample dimension mismatch");
    if (predicted[i].cols() > truth[i].cols())
      throw std::invalid_argument("normalized_error: prediction longer than truth");
  }
}

}  // namespace

std::vector<Vec> normalized_error_curves(const std::vector<Mat>& predicted,
                                         const std::vector<Mat>& truth, ErrorKind) {
  check_shapes(predicted, truth);
  const double denom = truth_mean_square(truth);
  std::vector<Vec> curves;
  curves.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Index covered = predicted[i].cols();
    Vec curve(covered);
    for (Index t = 0; t < covered; ++t)
      curve[t] = (predicted[i].col(t) - truth[i].col(t)).squaredNorm() / denom;
    curves.push_back(std::move(curve));
  }
  return curves;
}

Vec normalized_error(const Mat& predicted, const Mat& truth, ErrorKind kind) {
  return normalized_error_curves({predicted}, {truth}, kind).front();
}

double mean_normalized_error(const std::vector<Mat>& predicted, const std::vector<Mat>& truth,
                             ErrorKind kind) {
  const auto curves = normalized_error_curves(predicted, truth, kind);
  double sum = 0.0;
  Index count = 0;
  for (const Vec& c : curves) {
    sum += c.sum();
    count += c.size();
  }
  if (count == 0) throw std::invalid_argument("mean_normalized_error: nothing covered");
  return sum / static_cast<double>(count);
}

double median_normalized_error(const std::vector<Mat>& predicted, const std::vector<Mat>& truth,
                               ErrorKind kind) {
  const auto curves = normalized_error_curves(predicted, truth, kind);
  std::vector<double> means;
  means.reserve(curves.size());
  for (const Vec& c : curves)
    means.push_back(c.size() > 0 ? c.mean() : 0.0);
  std::sort(means.begin(), means.end());
  const std::size_t m = means.size();
  if (m == 0) throw std::invalid_argument("median_normalized_error: empty batch");
  return (m % 2 == 1) ? means[m / 2] : 0.5 * (means[m / 2 - 1] + means[m / 2]);
}

}  // namespace cobras
