#include "steer/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "steer/classifiers.hpp"

namespace steer {

namespace {

double kernel(const GpParams& p, const double* a, const double* b, std::size_t d) {
  double sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return p.signal_variance * std::exp(-sq / (2.0 * p.length_scale * p.length_scale));
}

}  // namespace

GpParams default_gp_params(std::size_t d, std::span<const double> y) {
  GpParams p;
  p.length_scale = 0.1 * std::sqrt(static_cast<double>(std::max<std::size_t>(d, 1)));
  double var = 0.0;
  if (!y.empty()) {
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size());
  }
  p.signal_variance = std::max(var, 1e-4);
  p.noise_variance = 1e-4;
  return p;
}

GpModel gp_fit(const std::vector<std::vector<double>>& x, std::span<const double> y) {
  const std::size_t d = x.empty() ? 0 : x.front().size();
  return gp_fit(x, y, default_gp_params(d, y));
}

GpModel gp_fit(const std::vector<std::vector<double>>& x, std::span<const double> y,
               const GpParams& params) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n == 0 || y.size() != x.size()) {
    throw NumericFailure("GP fit needs matching non-empty inputs");
  }
  const auto d = static_cast<Eigen::Index>(x.front().size());
  GpModel model;
  model.params = params;
  model.x.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) model.x(i, j) = x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  model.y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  // Row-major copy so kernel() sees contiguous rows.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = model.x;
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = kernel(params, rows.row(i).data(), rows.row(j).data(),
                                 static_cast<std::size_t>(d));
    }
    k(i, i) += params.noise_variance;
  }
  model.factor.compute(k);
  if (model.factor.info() != Eigen::Success) {
    throw NumericFailure("kernel matrix is not positive definite");
  }
  Eigen::VectorXd centered(n);
  for (Eigen::Index i = 0; i < n; ++i) centered(i) = y[static_cast<std::size_t>(i)] - model.y_mean;
  model.alpha = model.factor.solve(centered);
  if (!model.alpha.allFinite()) throw NumericFailure("GP solve produced non-finite weights");
  return model;
}

Posterior gp_posterior(const GpModel& model, std::span<const double> x) {
  const auto n = model.x.rows();
  const auto d = static_cast<std::size_t>(model.x.cols());
  Eigen::VectorXd ks(n);
  std::vector<double> row(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) row[j] = model.x(i, static_cast<Eigen::Index>(j));
    ks(i) = kernel(model.params, row.data(), x.data(), d);
  }
  Posterior post;
  post.mean = model.y_mean + ks.dot(model.alpha);
  const Eigen::VectorXd v = model.factor.matrixL().solve(ks);
  post.variance = std::max(model.params.signal_variance - v.squaredNorm(), 0.0);
  return post;
}

double expected_improvement(double mean, double variance, double best_so_far, double xi) {
  const double gain = mean - best_so_far - xi;
  const double sigma = std::sqrt(std::max(variance, 0.0));
  if (sigma <= 0.0) return std::max(gain, 0.0);
  const double z = gain / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  return std::max(gain * cdf + sigma * pdf, 0.0);
}

}  // namespace steer
