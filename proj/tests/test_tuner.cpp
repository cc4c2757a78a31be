#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "steer/gp.hpp"
#include "steer/tuner.hpp"
#include "support.hpp"

using namespace steer;
using steer::testing::dense_solve;
using steer::testing::oracle_posterior;

namespace {

const HyperparameterSpec& spec_of(const Hyperpartition& hp, const std::string& name) { return *hp.tunable(name); }

}  // namespace

TEST(Normalize, AffineAndLogMaps) {
  const std::vector<HyperparameterSpec> specs = {
      {"a", ParamKind::real, 0, 10, Scale::linear, {}},
      {"b", ParamKind::real, 1e-4, 1e-1, Scale::log, {}},
  };
  const std::vector<Range> ranges = {{0, 10}, {1e-4, 1e-1}};
  auto x = normalize({{"a", 2.5}, {"b", 1e-3}}, specs, ranges);
  EXPECT_DOUBLE_EQ(x[0], 0.25);
  EXPECT_NEAR(x[1], 1.0 / 3.0, 1e-12);
  x = normalize({{"a", 0}, {"b", 1e-4}}, specs, ranges);
  EXPECT_EQ(x[0], 0.0);
  EXPECT_NEAR(x[1], 0.0, 1e-15);
  const Config back = denormalize(std::vector<double>{0.25, 1.0 / 3.0}, specs, ranges);
  EXPECT_NEAR(back.at("a"), 2.5, 1e-12);
  EXPECT_NEAR(back.at("b"), 1e-3, 1e-15);
}

TEST(Normalize, IntegerRoundTripUpToRounding) {
  const SearchSpace s = default_space();
  const auto* hp = s.find_hyperpartition("RandomForest:criterion=gini");
  const auto ranges = declared_ranges(*hp);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Config c = sample_uniform(*hp, s, seed);
    const Config back = denormalize(normalize(c, hp->tunables, ranges), hp->tunables, ranges);
    EXPECT_EQ(back.at("n_trees"), c.at("n_trees"));
    EXPECT_EQ(back.at("max_depth"), c.at("max_depth"));
    EXPECT_NEAR(back.at("max_features"), c.at("max_features"), 1e-12);
  }
}

TEST(Gp, ConstantTargetsGiveConstantMean) {
  const std::vector<std::vector<double>> x = {{0.1}, {0.5}, {0.9}};
  const std::vector<double> y = {0.7, 0.7, 0.7};
  const GpModel m = gp_fit(x, y);
  for (double p : {0.0, 0.3, 0.77, 1.0}) EXPECT_NEAR(gp_posterior(m, std::vector<double>{p}).mean, 0.7, 1e-12);
}

TEST(Gp, SinglePointMeanIsItself) {
  const GpModel m = gp_fit({{0.4, 0.2}}, std::vector<double>{0.83});
  EXPECT_DOUBLE_EQ(gp_posterior(m, std::vector<double>{0.4, 0.2}).mean, 0.83);
}

TEST(Gp, TwoAndThreePointFitsMatchDenseOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int n : {2, 3}) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<std::vector<double>> x(n, std::vector<double>(2));
      std::vector<double> y(n);
      for (int i = 0; i < n; ++i) {
        x[i] = {u(rng), u(rng)};
        y[i] = u(rng);
      }
      const GpModel m = gp_fit(x, y);
      const GpParams p = default_gp_params(2, y);
      EXPECT_DOUBLE_EQ(m.params.length_scale, 0.1 * std::sqrt(2.0));
      std::vector<std::vector<double>> probes = x;
      probes.push_back({u(rng), u(rng)});
      probes.push_back({0.5, 0.5});
      for (const auto& probe : probes) {
        const Posterior got = gp_posterior(m, probe);
        const Posterior want = oracle_posterior(x, y, p, probe);
        EXPECT_NEAR(got.mean, want.mean, 1e-8);
        EXPECT_NEAR(got.variance, std::max(want.variance, 0.0), 1e-8);
      }
    }
  }
}

TEST(Gp, PriorRecoveryFarFromData) {
  const std::vector<std::vector<double>> x = {{0.0, 0.0}, {0.05, 0.1}};
  const std::vector<double> y = {0.2, 0.9};
  const GpModel m = gp_fit(x, y);
  const Posterior far = gp_posterior(m, std::vector<double>{1.0, 1.0});
  EXPECT_NEAR(far.mean, 0.55, 1e-6);
  EXPECT_NEAR(far.variance, m.params.signal_variance, 1e-6);
}

TEST(Gp, VarianceAtTrainingInputsBoundedByNoise) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 25; ++i) {
    x.push_back({u(rng), u(rng), u(rng)});
    y.push_back(u(rng));
  }
  const GpModel m = gp_fit(x, y);
  for (const auto& xi : x) EXPECT_LE(gp_posterior(m, xi).variance, m.params.noise_variance + 1e-6);

  GpParams tiny = m.params;
  tiny.noise_variance = 1e-12;
  const GpModel sharp = gp_fit({{0.2}, {0.8}}, std::vector<double>{0.1, 0.9}, tiny);
  EXPECT_LT(gp_posterior(sharp, std::vector<double>{0.2}).variance, 1e-9);
}

TEST(Ei, ClosedForms) {
  EXPECT_NEAR(expected_improvement(0.5, 1.0, 0.5, 0.0), 0.398942, 1e-6);
  EXPECT_NEAR(expected_improvement(0.5, 1.0, 0.5, 0.0), 1.0 / std::sqrt(2 * M_PI), 1e-15);
  EXPECT_EQ(expected_improvement(0.4, 0.0, 0.5, 0.0), 0.0);
  EXPECT_EQ(expected_improvement(0.7, 0.0, 0.5, 0.0), 0.7 - 0.5);
  EXPECT_NEAR(expected_improvement(0.7, 0.0, 0.5, 0.0), 0.2, 1e-15);
}

TEST(Ei, NonNegativeAndMonotone) {
  const double best = 0.6, xi = 0.01;
  for (double var : {0.0, 1e-4, 0.01, 0.25, 1.0}) {
    double prev = -1;
    for (double mu = 0.0; mu <= 1.2; mu += 0.01) {
      const double ei = expected_improvement(mu, var, best, xi);
      EXPECT_GE(ei, 0.0);
      EXPECT_GE(ei, prev - 1e-15);
      prev = ei;
    }
  }
  for (double mu = 0.0; mu <= best + xi; mu += 0.05) {
    double prev = -1;
    for (double var = 0.0; var <= 1.0; var += 0.01) {
      const double ei = expected_improvement(mu, var, best, xi);
      EXPECT_GE(ei, prev - 1e-15);
      prev = ei;
    }
  }
}

TEST(Propose, ColdStartIsUniformSample) {
  const SearchSpace s = default_space();
  const auto* hp = s.find_hyperpartition("ExtraTrees:criterion=gini");
  TunerState st{hp->id, {}};
  const Proposal p = propose(st, *hp, s, 31);
  EXPECT_FALSE(p.used_gp);
  EXPECT_EQ(p.config, sample_uniform(*hp, s, 31));
}

TEST(Propose, NoTunablesIsEmpty) {
  SearchSpace s(std::vector<AlgorithmSpec>{{"Const", {}, {}}});
  TunerState st{s.hyperpartitions()[0].id, {}};
  EXPECT_TRUE(propose(st, s.hyperpartitions()[0], s, 1).config.empty());
}

TEST(Propose, QuadraticClosedLoopSeedSeven) {
  const SearchSpace s = steer::testing::unit_space();
  const auto& hp = s.hyperpartitions()[0];
  TunerState st{hp.id, {}};
  double best = -1;
  int gp_used = 0;
  for (int i = 0; i < 20; ++i) {
    const Proposal p = propose(st, hp, s, derive_seed(7, static_cast<std::uint64_t>(i)));
    gp_used += p.used_gp;
    const double x = p.config.at("x");
    const double score = 1 - (x - 0.3) * (x - 0.3);
    best = std::max(best, score);
    record_observation(st, hp, p.config, score);
  }
  EXPECT_EQ(gp_used, 17);
  EXPECT_GE(best, 0.99);
}

TEST(Propose, ContainedUnderRestrictionAndUsesAllHistory) {
  SearchSpace s = default_space();
  const std::string id = "ExtraTrees:criterion=entropy";
  const auto* hp0 = s.find_hyperpartition(id);
  TunerState st{id, {}};
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Config c = sample_uniform(*hp0, s, i);
    record_observation(st, *hp0, c, 0.5 + 0.4 * c.at("max_features"));
  }
  s = apply_delta(s, {DeltaKind::set_range, "ExtraTrees", "max_features", Range{0.7, 1.0}});
  const auto* hp = s.find_hyperpartition(id);
  int gp = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Proposal p = propose(st, *hp, s, seed);
    EXPECT_TRUE(contains(*hp, s, p.config));
    EXPECT_GE(p.config.at("max_features"), 0.7);
    gp += p.used_gp;
  }
  // Enough of the ten random observations landed in [0.7, 1.0] to leave cold start.
  std::size_t inside = 0;
  for (const auto& o : st.observations) inside += o.config.at("max_features") >= 0.7;
  if (inside >= 3) {
    EXPECT_EQ(gp, 40);
  } else {
    EXPECT_EQ(gp, 0);
  }
}

TEST(Propose, GpFailureFallsBackToUniform) {
  const SearchSpace s = steer::testing::unit_space();
  const auto& hp = s.hyperpartitions()[0];
  TunerState st{hp.id, {}};
  for (double x : {0.1, 0.2, 0.3}) record_observation(st, hp, {{"x", x}}, std::numeric_limits<double>::infinity());
  const Proposal p = propose(st, hp, s, 4);
  EXPECT_TRUE(p.fallback);
  EXPECT_FALSE(p.used_gp);
  EXPECT_TRUE(contains(hp, s, p.config));
}

TEST(Tuner, ObservationsNormalizedAgainstDeclaredRanges) {
  SearchSpace s = apply_delta(default_space(), {DeltaKind::set_range, "ExtraTrees", "max_features", Range{0.7, 1.0}});
  const auto* hp = s.find_hyperpartition("ExtraTrees:criterion=gini");
  TunerState st{hp->id, {}};
  record_observation(st, *hp, {{"n_trees", 5}, {"max_features", 0.55}, {"max_depth", 20}}, 0.9);
  const auto& x = st.observations[0].x;
  ASSERT_EQ(x.size(), 3u);
  EXPECT_NEAR(x[0], 0.0, 1e-12);
  EXPECT_NEAR(x[1], 0.5, 1e-12);
  EXPECT_NEAR(x[2], 1.0, 1e-12);
  EXPECT_EQ(active_ranges(*hp, s)[1], (Range{0.7, 1.0}));
  EXPECT_EQ(declared_ranges(*hp)[1], (Range{0.1, 1.0}));
  (void)spec_of;
}
