#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "steer/gp.hpp"
#include "steer/run_types.hpp"
#include "steer/search_space.hpp"

namespace steer::testing {

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("steer-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

inline double se_kernel(const GpParams& p, const std::vector<double>& a, const std::vector<double>& b) {
  double sq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return p.signal_variance * std::exp(-sq / (2 * p.length_scale * p.length_scale));
}

/// Independent posterior via explicit dense solves of (K + noise I).
inline Posterior oracle_posterior(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                           const GpParams& p, const std::vector<double>& probe) {
  const std::size_t n = x.size();
  double ybar = 0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(n);
  std::vector<std::vector<double>> k(n, std::vector<double>(n));
  std::vector<double> ks(n), centered(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i][j] = se_kernel(p, x[i], x[j]) + (i == j ? p.noise_variance : 0.0);
    ks[i] = se_kernel(p, x[i], probe);
    centered[i] = y[i] - ybar;
  }
  const auto alpha = dense_solve(k, centered);
  const auto v = dense_solve(k, ks);
  Posterior out;
  out.mean = ybar;
  out.variance = p.signal_variance;
  for (std::size_t i = 0; i < n; ++i) {
    out.mean += ks[i] * alpha[i];
    out.variance -= ks[i] * v[i];
  }
  return out;
}

/// One-algorithm space with a single real tunable on [0, 1].
inline SearchSpace unit_space() {
  return SearchSpace({{"Probe", {}, {{"x", ParamKind::real, 0.0, 1.0, Scale::linear, {}}}}});
}

/// Synthetic ok trials spread over the default space; every 13th is an error.
inline std::vector<Trial> synthetic_trials(std::size_t n, std::uint64_t seed) {
  const SearchSpace space = default_space();
  const auto& hps = space.hyperpartitions();
  std::mt19937_64 rng(seed);
  std::vector<Trial> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& hp = hps[rng() % hps.size()];
    Trial t;
    t.trial_id = static_cast<long>(i + 1);
    t.run_id = "run-000001";
    t.algorithm = hp.algorithm;
    t.hyperpartition_id = hp.id;
    t.config = sample_uniform(hp, space, rng);
    if (i % 13 == 12) {
      t.ok = false;
      t.error = "synthetic failure";
    } else {
      t.score = std::uniform_real_distribution<double>(0.3, 1.0)(rng);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace steer::testing
