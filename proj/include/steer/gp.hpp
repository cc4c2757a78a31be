#pragma once

#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace steer {

/// Squared-exponential kernel hyperparameters.
struct GpParams {
  double length_scale = 0.1;
  double signal_variance = 1e-4;
  double noise_variance = 1e-4;
};

/// Exact GP regression on mean-centered targets.
struct GpModel {
  GpParams params;
  Eigen::MatrixXd x;  // n x d training inputs
  double y_mean = 0.0;
  Eigen::VectorXd alpha;  // (K + noise I)^-1 (y - mean)
  Eigen::LLT<Eigen::MatrixXd> factor;
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Fixed-hyperparameter defaults: length 0.1*sqrt(d), signal var(y) floored
/// at 1e-4, noise 1e-4.
GpParams default_gp_params(std::size_t d, std::span<const double> y);

/// Throws NumericFailure when the Cholesky factorization fails.
GpModel gp_fit(const std::vector<std::vector<double>>& x, std::span<const double> y);
GpModel gp_fit(const std::vector<std::vector<double>>& x, std::span<const double> y,
               const GpParams& params);

Posterior gp_posterior(const GpModel& model, std::span<const double> x);

/// Maximization-convention EI; sigma = 0 collapses to max(mu - best - xi, 0).
double expected_improvement(double mean, double variance, double best_so_far, double xi);

}  // namespace steer
