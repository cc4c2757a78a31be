#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "steer/classifiers.hpp"
#include "steer/error.hpp"
#include "steer/evaluation.hpp"
#include "steer/metrics.hpp"

using namespace steer;

namespace {

ModelSpec knn(int k, const char* weights = "uniform", const char* metric = "euclidean") {
  return {"KNN", {{"weights", weights}, {"metric", metric}}, {{"n_neighbors", k}}};
}

std::vector<ModelSpec> one_of_each() {
  return {
      knn(3, "distance", "manhattan"),
      {"DecisionTree", {{"criterion", "entropy"}}, {{"max_depth", 6}, {"min_samples_split", 4}}},
      {"RandomForest", {{"criterion", "gini"}}, {{"n_trees", 15}, {"max_features", 0.5}, {"max_depth", 8}}},
      {"ExtraTrees", {{"criterion", "entropy"}}, {{"n_trees", 15}, {"max_features", 0.7}, {"max_depth", 8}}},
      {"SGDLogistic", {{"penalty", "l1"}}, {{"learning_rate", 0.01}, {"alpha", 1e-4}, {"epochs", 20}}},
      {"GaussianNB", {}, {{"var_smoothing", 1e-9}}},
  };
}

// 1-D fixture split perfectly at x = 4.5, with a noise feature.
Dataset threshold_fixture() {
  std::string csv = "noise,x,label\n";
  for (int i = 0; i < 10; ++i) {
    csv += std::to_string((i * 7) % 5) + "," + std::to_string(i) + "," + (i < 5 ? "lo" : "hi") + "\n";
  }
  return load_csv(csv);
}

}  // namespace

TEST(Knn, OneNearestNeighbourIdentity) {
  const Dataset ds = make_blobs(60, 3, 1.0, 9);
  for (const char* m : {"euclidean", "manhattan"}) {
    EXPECT_EQ(train_predict(knn(1, "uniform", m), ds, ds, 0), ds.labels);
  }
}

TEST(Knn, VoteTieGoesToSmallestClassIndex) {
  const std::vector<double> train{0.0, 1.0};
  const std::vector<int> y{1, 0};
  const std::vector<double> test{0.5};
  EXPECT_EQ(ml::knn_predict(train, y, test, 1, 2, 2, ml::KnnWeights::uniform, ml::KnnMetric::euclidean),
            std::vector<int>{0});
  // Distance tie at k=1 resolves to the lowest row index (label 1 here).
  EXPECT_EQ(ml::knn_predict(train, y, test, 1, 2, 1, ml::KnnWeights::uniform, ml::KnnMetric::euclidean),
            std::vector<int>{1});
}

TEST(DecisionTree, PerfectSingleThresholdFixture) {
  const Dataset ds = threshold_fixture();
  // Oracle: exhaustive midpoint search over every feature finds a zero-error split.
  bool perfect_exists = false;
  for (std::size_t f = 0; f < ds.n_cols; ++f) {
    for (std::size_t a = 0; a < ds.n_rows; ++a) {
      const double t = ds.at(a, f) + 0.5;
      int errors_lo = 0, errors_hi = 0;
      for (std::size_t r = 0; r < ds.n_rows; ++r) {
        const int side = ds.at(r, f) <= t ? 0 : 1;
        errors_lo += side != ds.labels[r];
        errors_hi += side == ds.labels[r];
      }
      perfect_exists = perfect_exists || errors_lo == 0 || errors_hi == 0;
    }
  }
  ASSERT_TRUE(perfect_exists);
  const ModelSpec tree{"DecisionTree", {{"criterion", "gini"}}, {{"max_depth", 1}, {"min_samples_split", 2}}};
  const auto pred = train_predict(tree, ds, ds, 0);
  EXPECT_EQ(f1_score(ds.labels, pred, ds.positive_class, 2), 1.0);

  ml::DecisionTree t;
  std::vector<std::size_t> rows(ds.n_rows);
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng(0);
  t.fit(ds, rows, {}, rng);
  EXPECT_EQ(t.depth(), 1);
  EXPECT_EQ(t.node_count(), 3u);
}

TEST(GaussianNb, SeparatedBlobsMatchClosedFormBayes) {
  const Dataset ds = make_blobs(100, 4, 4.0, 21);
  // Closed-form Bayes rule for equal isotropic covariance and equal priors:
  // nearest true centre. "negative" sits at the origin, "positive" at sep/sqrt(d).
  const double offset = 4.0 / std::sqrt(4.0);
  std::vector<int> bayes(ds.n_rows);
  for (std::size_t r = 0; r < ds.n_rows; ++r) {
    double dist[2] = {0, 0};
    for (int c = 0; c < 2; ++c) {
      const double centre = ds.classes[static_cast<std::size_t>(c)] == "positive" ? offset : 0.0;
      for (std::size_t j = 0; j < ds.n_cols; ++j) dist[c] += (ds.at(r, j) - centre) * (ds.at(r, j) - centre);
    }
    bayes[r] = dist[0] <= dist[1] ? 0 : 1;
  }
  const double oracle = f1_score(ds.labels, bayes, ds.positive_class, 2);
  const double got = f1_score(ds.labels, train_predict(one_of_each()[5], ds, ds, 0), ds.positive_class, 2);
  EXPECT_GE(oracle, 0.99);
  EXPECT_GE(got, 0.99);
}

TEST(Classifiers, SeedDeterministicAndCorrectLength) {
  const Dataset ds = make_blobs(80, 3, 2.5, 2);
  std::vector<std::size_t> tr, te;
  for (std::size_t r = 0; r < ds.n_rows; ++r) (r % 4 ? tr : te).push_back(r);
  const Dataset train = take_rows(ds, tr), test = take_rows(ds, te);
  for (const auto& m : one_of_each()) {
    const auto a = train_predict(m, train, test, 42);
    EXPECT_EQ(a.size(), test.n_rows) << m.algorithm;
    EXPECT_EQ(a, train_predict(m, train, test, 42)) << m.algorithm;
    const double f1 = f1_score(test.labels, a, test.positive_class, 2);
    EXPECT_GE(f1, 0.7) << m.algorithm;
  }
}

TEST(Forest, SingleTreeWithoutBootstrapEqualsDecisionTree) {
  const Dataset ds = make_blobs(120, 4, 1.5, 8);
  ml::TreeOptions topt;
  topt.max_depth = 5;
  topt.max_features = 1.0;
  ml::ForestOptions fopt{topt, 1, false};
  ml::Forest forest;
  forest.fit(ds, fopt, 77);
  ml::DecisionTree tree;
  std::vector<std::size_t> rows(ds.n_rows);
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng(1234);
  tree.fit(ds, rows, topt, rng);
  const Dataset probe = make_blobs(50, 4, 1.5, 9);
  for (std::size_t r = 0; r < probe.n_rows; ++r) {
    EXPECT_EQ(forest.predict(probe.row(r)), tree.predict(probe.row(r)));
  }
}

TEST(Classifiers, BadModelsAreRejected) {
  const Dataset ds = make_blobs(20, 2, 3.0, 1);
  auto code = [&](const ModelSpec& m) {
    try {
      train_predict(m, ds, ds, 0);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io_error;
  };
  EXPECT_EQ(code({"SVM", {}, {}}), ErrorCode::unknown_target);
  EXPECT_EQ(code({"GaussianNB", {}, {}}), ErrorCode::config_mismatch);
  EXPECT_EQ(code({"KNN", {{"weights", "uniform"}}, {{"n_neighbors", 3}}}), ErrorCode::config_mismatch);
}

TEST(CrossVal, MajorityClassFoldScoresMatchFoldCompositionOracle) {
  std::string csv = "f,label\n";
  for (int i = 0; i < 22; ++i) csv += std::to_string(i % 3) + "," + (i % 2 ? "b" : "a") + "\n";
  const Dataset ds = load_csv(csv, "", std::string("a"));
  const FoldPlan plan = stratified_folds(ds, 4, 3);
  // KNN over every training row with uniform weights is the majority-class rule.
  const EvalResult res = evaluate_folds(ds, plan, knn(1000), 0);
  ASSERT_TRUE(res.ok) << res.error;
  ASSERT_EQ(res.fold_scores.size(), 4u);
  for (int f = 0; f < 4; ++f) {
    int train_counts[2] = {0, 0}, test_counts[2] = {0, 0};
    for (std::size_t r = 0; r < ds.n_rows; ++r) {
      (plan.assignment[r] == f ? test_counts : train_counts)[ds.labels[r]]++;
    }
    const int majority = train_counts[1] > train_counts[0] ? 1 : 0;
    const int pos = ds.positive_class;
    double expected = 0.0;
    if (majority == pos) {
      const int tp = test_counts[pos], fp = test_counts[1 - pos];
      expected = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp);
    }
    EXPECT_DOUBLE_EQ(res.fold_scores[f], expected) << "fold " << f;
  }
}

TEST(CrossVal, DeterministicMeanWithinFoldRange) {
  const Dataset ds = make_blobs(200, 5, 4.0, 1);
  for (const auto& m : one_of_each()) {
    const EvalResult a = cross_val_f1(ds, m, 10, 5);
    const EvalResult b = cross_val_f1(ds, m, 10, 5);
    ASSERT_TRUE(a.ok) << m.algorithm << ": " << a.error;
    EXPECT_EQ(a.fold_scores, b.fold_scores);
    EXPECT_EQ(a.fold_scores.size(), 10u);
    const auto [lo, hi] = std::minmax_element(a.fold_scores.begin(), a.fold_scores.end());
    EXPECT_GE(a.mean_score, *lo);
    EXPECT_LE(a.mean_score, *hi);
    EXPECT_NEAR(a.mean_score, std::accumulate(a.fold_scores.begin(), a.fold_scores.end(), 0.0) / 10, 1e-12);
  }
}

TEST(CrossVal, KnnFiveOnBlobsGolden) {
  const Dataset ds = make_blobs(200, 5, 4.0, 1);
  const EvalResult r = cross_val_f1(ds, knn(5), 10, 0);
  ASSERT_TRUE(r.ok);
  EXPECT_GE(r.mean_score, 0.95);
}

TEST(CrossVal, NumericFailureBecomesErrorWithFoldIndex) {
  std::string csv = "f,g,label\n";
  for (int i = 0; i < 12; ++i) csv += std::string("1,2,") + (i % 2 ? "a" : "b") + "\n";
  const Dataset ds = load_csv(csv);
  const EvalResult r = cross_val_f1(ds, one_of_each()[5], 3, 0);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.failed_fold, 0);
  EXPECT_FALSE(r.error.empty());
  EXPECT_TRUE(r.fold_scores.empty());
}
