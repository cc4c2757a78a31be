#include "steer/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "steer/error.hpp"

namespace steer {
namespace ml {

void Standardizer::fit(const Dataset& train) {
  const std::size_t d = train.n_cols;
  mean_.assign(d, 0.0);
  scale_.assign(d, 1.0);
  if (train.n_rows == 0) return;
  const auto n = static_cast<double>(train.n_rows);
  for (std::size_t r = 0; r < train.n_rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) mean_[c] += train.at(r, c);
  }
  for (auto& m : mean_) m /= n;
  std::vector<double> var(d, 0.0);
  for (std::size_t r = 0; r < train.n_rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double delta = train.at(r, c) - mean_[c];
      var[c] += delta * delta;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(var[c] / n);
    scale_[c] = sd > 0.0 ? sd : 1.0;
  }
}

std::vector<double> Standardizer::transform(const Dataset& ds) const {
  std::vector<double> out(ds.features.size());
  for (std::size_t r = 0; r < ds.n_rows; ++r) {
    for (std::size_t c = 0; c < ds.n_cols; ++c) {
      out[r * ds.n_cols + c] = (ds.at(r, c) - mean_[c]) / scale_[c];
    }
  }
  return out;
}

namespace {

double impurity(std::span<const std::size_t> counts, std::size_t total, Criterion criterion) {
  if (total == 0) return 0.0;
  const auto n = static_cast<double>(total);
  double acc = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    acc += criterion == Criterion::gini ? p * p : -p * std::log2(p);
  }
  return criterion == Criterion::gini ? 1.0 - acc : acc;
}

// Majority label, ties to the smallest class index.
int majority(std::span<const std::size_t> counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

void DecisionTree::fit(const Dataset& train, std::span<const std::size_t> rows,
                       const TreeOptions& options, Rng& rng) {
  options_ = options;
  n_classes_ = train.n_classes();
  nodes_.clear();
  std::vector<std::size_t> work(rows.begin(), rows.end());
  build(train, work, 0, rng);
}

int DecisionTree::build(const Dataset& train, std::vector<std::size_t>& rows, int depth,
                        Rng& rng) {
  const auto k = static_cast<std::size_t>(n_classes_);
  std::vector<std::size_t> counts(k, 0);
  for (auto r : rows) ++counts[static_cast<std::size_t>(train.labels[r])];

  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, -1, -1, majority(counts), depth});

  const double parent = impurity(counts, rows.size(), options_.criterion);
  if (depth >= options_.max_depth || rows.size() < static_cast<std::size_t>(options_.min_samples_split) ||
      parent <= 0.0) {
    return index;
  }

  // Candidate features: all, or a random subset of ceil(max_features * d),
  // always scanned in ascending index order.
  const std::size_t d = train.n_cols;
  std::vector<std::size_t> features(d);
  std::iota(features.begin(), features.end(), 0);
  const auto m = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(options_.max_features * static_cast<double>(d) - 1e-9)),
      1, d);
  if (m < d) {
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, d - 1);
      std::swap(features[i], features[pick(rng)]);
    }
    features.resize(m);
    std::sort(features.begin(), features.end());
  }

  double best_score = std::numeric_limits<double>::infinity();
  int best_feature = -1;
  double best_threshold = 0.0;
  const auto total = static_cast<double>(rows.size());
  std::vector<std::size_t> left(k), right(k);

  auto evaluate = [&](std::size_t nl) {
    const std::size_t nr = rows.size() - nl;
    return (static_cast<double>(nl) * impurity(left, nl, options_.criterion) +
            static_cast<double>(nr) * impurity(right, nr, options_.criterion)) /
           total;
  };

  std::vector<std::size_t> sorted = rows;
  for (std::size_t f : features) {
    if (options_.random_thresholds) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (auto r : rows) {
        lo = std::min(lo, train.at(r, f));
        hi = std::max(hi, train.at(r, f));
      }
      if (!(lo < hi)) continue;
      const double threshold = std::uniform_real_distribution<double>(lo, hi)(rng);
      std::fill(left.begin(), left.end(), 0);
      std::size_t nl = 0;
      for (auto r : rows) {
        if (train.at(r, f) <= threshold) {
          ++left[static_cast<std::size_t>(train.labels[r])];
          ++nl;
        }
      }
      if (nl == 0 || nl == rows.size()) continue;
      for (std::size_t c = 0; c < k; ++c) right[c] = counts[c] - left[c];
      const double score = evaluate(nl);
      if (score < best_score) {
        best_score = score;
        best_feature = static_cast<int>(f);
        best_threshold = threshold;
      }
      continue;
    }

    std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      const double va = train.at(a, f), vb = train.at(b, f);
      return va < vb || (va == vb && a < b);
    });
    std::fill(left.begin(), left.end(), 0);
    right = counts;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      const auto y = static_cast<std::size_t>(train.labels[sorted[i]]);
      ++left[y];
      --right[y];
      const double v = train.at(sorted[i], f), next = train.at(sorted[i + 1], f);
      if (!(v < next)) continue;
      const double score = evaluate(i + 1);
      if (score < best_score) {
        best_score = score;
        best_feature = static_cast<int>(f);
        best_threshold = v + (next - v) / 2.0;
      }
    }
  }

  if (best_feature < 0) return index;

  std::vector<std::size_t> lrows, rrows;
  for (auto r : rows) {
    (train.at(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? lrows : rrows)
        .push_back(r);
  }
  rows.clear();
  rows.shrink_to_fit();
  nodes_[static_cast<std::size_t>(index)].feature = best_feature;
  nodes_[static_cast<std::size_t>(index)].threshold = best_threshold;
  const int l = build(train, lrows, depth + 1, rng);
  const int r = build(train, rrows, depth + 1, rng);
  nodes_[static_cast<std::size_t>(index)].left = l;
  nodes_[static_cast<std::size_t>(index)].right = r;
  return index;
}

int DecisionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                         : n.right);
  }
  return nodes_[i].label;
}

int DecisionTree::depth() const {
  int deepest = 0;
  for (const auto& n : nodes_) deepest = std::max(deepest, n.depth);
  return deepest;
}

void Forest::fit(const Dataset& train, const ForestOptions& options, std::uint64_t seed) {
  n_classes_ = train.n_classes();
  trees_.assign(static_cast<std::size_t>(options.n_trees), DecisionTree{});
  std::vector<std::size_t> all(train.n_rows);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> rows = all;
    if (options.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, train.n_rows - 1);
      for (auto& r : rows) r = pick(rng);
    }
    trees_[t].fit(train, rows, options.tree, rng);
  }
}

int Forest::predict(std::span<const double> x) const {
  std::vector<std::size_t> votes(static_cast<std::size_t>(n_classes_), 0);
  for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.predict(x))];
  return majority(votes);
}

std::vector<int> Forest::predict(const Dataset& test) const {
  std::vector<int> out(test.n_rows);
  for (std::size_t r = 0; r < test.n_rows; ++r) out[r] = predict(test.row(r));
  return out;
}

std::vector<int> knn_predict(std::span<const double> train_x, std::span<const int> train_y,
                             std::span<const double> test_x, std::size_t d, int n_classes,
                             int k, KnnWeights weights, KnnMetric metric) {
  const std::size_t n_train = train_y.size();
  const std::size_t n_test = d == 0 ? 0 : test_x.size() / d;
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 1)), n_train);
  std::vector<int> out(n_test);
  std::vector<std::pair<double, std::size_t>> dist(n_train);
  std::vector<double> votes(static_cast<std::size_t>(n_classes));

  for (std::size_t t = 0; t < n_test; ++t) {
    const double* q = test_x.data() + t * d;
    for (std::size_t i = 0; i < n_train; ++i) {
      const double* p = train_x.data() + i * d;
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = q[c] - p[c];
        acc += metric == KnnMetric::euclidean ? diff * diff : std::abs(diff);
      }
      dist[i] = {metric == KnnMetric::euclidean ? std::sqrt(acc) : acc, i};
    }
    // Pair ordering breaks distance ties by lowest row index.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());

    std::fill(votes.begin(), votes.end(), 0.0);
    const bool exact = weights == KnnWeights::distance && dist[0].first == 0.0;
    for (std::size_t j = 0; j < kk; ++j) {
      const auto [dj, idx] = dist[j];
      double w = 1.0;
      if (weights == KnnWeights::distance) {
        if (exact) {
          if (dj != 0.0) continue;
        } else {
          w = 1.0 / dj;
        }
      }
      votes[static_cast<std::size_t>(train_y[idx])] += w;
    }
    out[t] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

void SgdLogistic::fit(std::span<const double> x, std::span<const int> y, std::size_t d,
                      int n_classes, const SgdOptions& options, std::uint64_t seed) {
  d_ = d;
  n_classes_ = n_classes;
  const auto k = static_cast<std::size_t>(n_classes);
  weights_.assign(k * d, 0.0);
  bias_.assign(k, 0.0);
  const std::size_t n = y.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);

  std::vector<double> grad_w(k * d), grad_b(k), logits(k);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t stop = std::min(n, start + options.batch_size);
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const double* xi = x.data() + order[b] * d;
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
          double z = bias_[c];
          for (std::size_t j = 0; j < d; ++j) z += weights_[c * d + j] * xi[j];
          logits[c] = z;
          top = std::max(top, z);
        }
        double norm = 0.0;
        for (auto& z : logits) norm += (z = std::exp(z - top));
        for (std::size_t c = 0; c < k; ++c) {
          const double err =
              logits[c] / norm - (y[order[b]] == static_cast<int>(c) ? 1.0 : 0.0);
          grad_b[c] += err;
          for (std::size_t j = 0; j < d; ++j) grad_w[c * d + j] += err * xi[j];
        }
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < weights_.size(); ++i) {
        double g = grad_w[i] * scale;
        if (options.penalty == Penalty::l2) {
          g += options.alpha * weights_[i];
        } else if (options.penalty == Penalty::l1) {
          g += options.alpha * (weights_[i] > 0 ? 1.0 : weights_[i] < 0 ? -1.0 : 0.0);
        }
        weights_[i] -= options.learning_rate * g;
      }
      for (std::size_t c = 0; c < k; ++c) bias_[c] -= options.learning_rate * grad_b[c] * scale;
    }
  }
  for (double w : weights_) {
    if (!std::isfinite(w)) throw NumericFailure("SGD weights diverged");
  }
}

std::vector<int> SgdLogistic::predict(std::span<const double> x) const {
  const std::size_t n = d_ == 0 ? 0 : x.size() / d_;
  const auto k = static_cast<std::size_t>(n_classes_);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      double z = bias_[c];
      for (std::size_t j = 0; j < d_; ++j) z += weights_[c * d_ + j] * x[i * d_ + j];
      if (z > best) {
        best = z;
        arg = static_cast<int>(c);
      }
    }
    out[i] = arg;
  }
  return out;
}

void GaussianNb::fit(std::span<const double> x, std::span<const int> y, std::size_t d,
                     int n_classes, double var_smoothing) {
  d_ = d;
  const auto k = static_cast<std::size_t>(n_classes);
  const std::size_t n = y.size();
  mean_.assign(k * d, 0.0);
  var_.assign(k * d, 0.0);
  log_prior_.assign(k, 0.0);
  present_.assign(k, false);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    ++count[c];
    for (std::size_t j = 0; j < d; ++j) mean_[c * d + j] += x[i * d + j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] == 0) continue;
    present_[c] = true;
    log_prior_[c] = std::log(static_cast<double>(count[c]) / static_cast<double>(n));
    for (std::size_t j = 0; j < d; ++j) mean_[c * d + j] /= static_cast<double>(count[c]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    for (std::size_t j = 0; j < d; ++j) {
      const double delta = x[i * d + j] - mean_[c * d + j];
      var_[c * d + j] += delta * delta;
    }
  }
  // Smoothing is relative to the largest overall feature variance.
  double max_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += x[i * d + j];
    m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) v += (x[i * d + j] - m) * (x[i * d + j] - m);
    max_var = std::max(max_var, v / static_cast<double>(n));
  }
  const double epsilon = var_smoothing * max_var;
  for (std::size_t c = 0; c < k; ++c) {
    if (!present_[c]) continue;
    for (std::size_t j = 0; j < d; ++j) {
      double& v = var_[c * d + j];
      v = v / static_cast<double>(count[c]) + epsilon;
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw NumericFailure("degenerate variance for feature " + std::to_string(j));
      }
    }
  }
}

std::vector<int> GaussianNb::predict(std::span<const double> x) const {
  const std::size_t n = d_ == 0 ? 0 : x.size() / d_;
  const std::size_t k = log_prior_.size();
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (!present_[c]) continue;
      double ll = log_prior_[c];
      for (std::size_t j = 0; j < d_; ++j) {
        const double v = var_[c * d_ + j];
        const double delta = x[i * d_ + j] - mean_[c * d_ + j];
        ll -= 0.5 * (std::log(2.0 * M_PI * v) + delta * delta / v);
      }
      if (ll > best) {
        best = ll;
        arg = static_cast<int>(c);
      }
    }
    out[i] = arg;
  }
  return out;
}

}  // namespace ml

namespace {

double param(const ModelSpec& m, const std::string& name) {
  auto it = m.config.find(name);
  if (it == m.config.end()) {
    throw Error(ErrorCode::config_mismatch,
                m.algorithm + " requires hyperparameter '" + name + "'");
  }
  return it->second;
}

const std::string& category(const ModelSpec& m, const std::string& name) {
  for (const auto& [k, v] : m.assignment) {
    if (k == name) return v;
  }
  throw Error(ErrorCode::config_mismatch, m.algorithm + " requires categorical '" + name + "'");
}

ml::Criterion criterion_of(const ModelSpec& m) {
  const auto& c = category(m, "criterion");
  if (c == "gini") return ml::Criterion::gini;
  if (c == "entropy") return ml::Criterion::entropy;
  throw Error(ErrorCode::config_mismatch, "unknown criterion '" + c + "'");
}

int as_int(double v) { return static_cast<int>(std::lround(v)); }

}  // namespace

std::vector<int> train_predict(const ModelSpec& model, const Dataset& train, const Dataset& test,
                               std::uint64_t seed) {
  const auto& algo = model.algorithm;
  const int n_classes = train.n_classes();

  if (algo == "DecisionTree") {
    ml::TreeOptions opt;
    opt.criterion = criterion_of(model);
    opt.max_depth = as_int(param(model, "max_depth"));
    opt.min_samples_split = as_int(param(model, "min_samples_split"));
    ml::DecisionTree tree;
    std::vector<std::size_t> rows(train.n_rows);
    std::iota(rows.begin(), rows.end(), 0);
    Rng rng(seed);
    tree.fit(train, rows, opt, rng);
    std::vector<int> out(test.n_rows);
    for (std::size_t r = 0; r < test.n_rows; ++r) out[r] = tree.predict(test.row(r));
    return out;
  }
  if (algo == "RandomForest" || algo == "ExtraTrees") {
    ml::ForestOptions opt;
    opt.tree.criterion = criterion_of(model);
    opt.tree.max_depth = as_int(param(model, "max_depth"));
    opt.tree.max_features = param(model, "max_features");
    opt.n_trees = as_int(param(model, "n_trees"));
    const bool extra = algo == "ExtraTrees";
    opt.tree.random_thresholds = extra;
    opt.bootstrap = !extra;
    ml::Forest forest;
    forest.fit(train, opt, seed);
    return forest.predict(test);
  }

  ml::Standardizer scaler;
  scaler.fit(train);
  const auto train_x = scaler.transform(train);
  const auto test_x = scaler.transform(test);

  if (algo == "KNN") {
    const auto& w = category(model, "weights");
    const auto& m = category(model, "metric");
    if ((w != "uniform" && w != "distance") || (m != "euclidean" && m != "manhattan")) {
      throw Error(ErrorCode::config_mismatch, "unknown KNN categorical value");
    }
    return ml::knn_predict(train_x, train.labels, test_x, train.n_cols, n_classes,
                           as_int(param(model, "n_neighbors")),
                           w == "distance" ? ml::KnnWeights::distance : ml::KnnWeights::uniform,
                           m == "manhattan" ? ml::KnnMetric::manhattan : ml::KnnMetric::euclidean);
  }
  if (algo == "SGDLogistic") {
    ml::SgdOptions opt;
    opt.learning_rate = param(model, "learning_rate");
    opt.alpha = param(model, "alpha");
    opt.epochs = as_int(param(model, "epochs"));
    const auto& p = category(model, "penalty");
    if (p == "l1") {
      opt.penalty = ml::Penalty::l1;
    } else if (p == "l2") {
      opt.penalty = ml::Penalty::l2;
    } else if (p == "none") {
      opt.penalty = ml::Penalty::none;
    } else {
      throw Error(ErrorCode::config_mismatch, "unknown penalty '" + p + "'");
    }
    ml::SgdLogistic sgd;
    sgd.fit(train_x, train.labels, train.n_cols, n_classes, opt, seed);
    return sgd.predict(test_x);
  }
  if (algo == "GaussianNB") {
    ml::GaussianNb nb;
    nb.fit(train_x, train.labels, train.n_cols, n_classes, param(model, "var_smoothing"));
    return nb.predict(test_x);
  }
  throw Error(ErrorCode::unknown_target, "algorithm '" + algo + "' is not in the registry");
}

}  // namespace steer
