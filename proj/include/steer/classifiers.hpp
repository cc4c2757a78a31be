#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "steer/dataset.hpp"
#include "steer/rng.hpp"
#include "steer/search_space.hpp"

namespace steer {

/// Raised by a classifier when training hits a numeric dead end (degenerate
/// variance, diverging weights). Evaluation turns it into an error status.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fully specified model: algorithm, categorical assignment and numeric config.
struct ModelSpec {
  std::string algorithm;
  Assignment assignment;
  Config config;
};

/// Trains on `train`, predicts class indices for every row of `test`.
/// Deterministic given all inputs. Throws NumericFailure or Error(config_mismatch).
std::vector<int> train_predict(const ModelSpec& model, const Dataset& train, const Dataset& test,
                               std::uint64_t seed);

namespace ml {

/// Per-feature z-scoring with statistics from the training rows only.
/// Constant features keep scale 1.
class Standardizer {
 public:
  void fit(const Dataset& train);
  std::vector<double> transform(const Dataset& ds) const;

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

enum class Criterion { gini, entropy };

struct TreeOptions {
  Criterion criterion = Criterion::gini;
  int max_depth = 20;
  int min_samples_split = 2;
  double max_features = 1.0;       // fraction of features considered per split
  bool random_thresholds = false;  // extra-trees style split draws
};

class DecisionTree {
 public:
  void fit(const Dataset& train, std::span<const std::size_t> rows, const TreeOptions& options,
           Rng& rng);
  int predict(std::span<const double> x) const;
  std::size_t node_count() const { return nodes_.size(); }
  int depth() const;

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
    int depth = 0;
  };

  int build(const Dataset& train, std::vector<std::size_t>& rows, int depth, Rng& rng);

  TreeOptions options_;
  int n_classes_ = 0;
  std::vector<Node> nodes_;
};

struct ForestOptions {
  TreeOptions tree;
  int n_trees = 10;
  bool bootstrap = true;
};

class Forest {
 public:
  void fit(const Dataset& train, const ForestOptions& options, std::uint64_t seed);
  int predict(std::span<const double> x) const;
  std::vector<int> predict(const Dataset& test) const;

 private:
  int n_classes_ = 0;
  std::vector<DecisionTree> trees_;
};

enum class KnnWeights { uniform, distance };
enum class KnnMetric { euclidean, manhattan };

/// Brute-force k-NN on already-transformed row-major features.
std::vector<int> knn_predict(std::span<const double> train_x, std::span<const int> train_y,
                             std::span<const double> test_x, std::size_t d, int n_classes,
                             int k, KnnWeights weights, KnnMetric metric);

enum class Penalty { l1, l2, none };

struct SgdOptions {
  double learning_rate = 0.01;
  double alpha = 1e-4;
  int epochs = 20;
  Penalty penalty = Penalty::l2;
  std::size_t batch_size = 32;
};

/// Multinomial logistic regression trained by mini-batch SGD.
class SgdLogistic {
 public:
  void fit(std::span<const double> x, std::span<const int> y, std::size_t d, int n_classes,
           const SgdOptions& options, std::uint64_t seed);
  std::vector<int> predict(std::span<const double> x) const;

 private:
  std::size_t d_ = 0;
  int n_classes_ = 0;
  std::vector<double> weights_;  // n_classes x d
  std::vector<double> bias_;
};

class GaussianNb {
 public:
  void fit(std::span<const double> x, std::span<const int> y, std::size_t d, int n_classes,
           double var_smoothing);
  std::vector<int> predict(std::span<const double> x) const;

 private:
  std::size_t d_ = 0;
  std::vector<double> log_prior_;
  std::vector<double> mean_;
  std::vector<double> var_;
  std::vector<bool> present_;
};

}  // namespace ml
}  // namespace steer
