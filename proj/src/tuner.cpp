#include "steer/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "steer/classifiers.hpp"
#include "steer/gp.hpp"

namespace steer {

std::vector<Range> declared_ranges(const Hyperpartition& hp) {
  std::vector<Range> out;
  for (const auto& t : hp.tunables) out.push_back(t.bounds());
  return out;
}

std::vector<Range> active_ranges(const Hyperpartition& hp, const SearchSpace& space) {
  std::vector<Range> out;
  for (const auto& t : hp.tunables) out.push_back(space.active_range(hp.id, t));
  return out;
}

std::vector<double> normalize(const Config& config, std::span<const HyperparameterSpec> tunables,
                              std::span<const Range> ranges) {
  std::vector<double> x(tunables.size());
  for (std::size_t i = 0; i < tunables.size(); ++i) {
    const double v = config.at(tunables[i].name);
    const Range r = ranges[i];
    if (tunables[i].scale == Scale::log) {
      const double a = std::log10(r.lo), b = std::log10(r.hi);
      x[i] = (std::log10(v) - a) / (b - a);
    } else {
      x[i] = (v - r.lo) / (r.hi - r.lo);
    }
  }
  return x;
}

Config denormalize(std::span<const double> x, std::span<const HyperparameterSpec> tunables,
                   std::span<const Range> ranges) {
  Config config;
  for (std::size_t i = 0; i < tunables.size(); ++i) {
    const Range r = ranges[i];
    double v;
    if (tunables[i].scale == Scale::log) {
      const double a = std::log10(r.lo), b = std::log10(r.hi);
      v = std::pow(10.0, a + x[i] * (b - a));
    } else {
      v = r.lo + x[i] * (r.hi - r.lo);
    }
    if (tunables[i].kind == ParamKind::integer) v = std::round(v);
    config[tunables[i].name] = std::clamp(v, r.lo, r.hi);
  }
  return config;
}

void record_observation(TunerState& state, const Hyperpartition& hp, const Config& config,
                        double score) {
  if (state.hyperpartition_id.empty()) state.hyperpartition_id = hp.id;
  const auto full = declared_ranges(hp);
  state.observations.push_back({config, normalize(config, hp.tunables, full), score});
}

namespace {

bool inside(const Config& config, const Hyperpartition& hp, const SearchSpace& space) {
  for (const auto& t : hp.tunables) {
    auto it = config.find(t.name);
    if (it == config.end()) return false;
    const Range r = space.active_range(hp.id, t);
    if (it->second < r.lo || it->second > r.hi) return false;
  }
  return true;
}

}  // namespace

Proposal propose(const TunerState& state, const Hyperpartition& hp, const SearchSpace& space,
                 std::uint64_t seed, const TunerSettings& settings) {
  Proposal proposal;
  if (hp.tunables.empty()) return proposal;

  const auto usable = std::count_if(state.observations.begin(), state.observations.end(),
                                    [&](const Observation& o) { return inside(o.config, hp, space); });
  if (usable < settings.r_min) {
    proposal.config = sample_uniform(hp, space, seed);
    return proposal;
  }

  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& o : state.observations) {
    xs.push_back(o.x);
    ys.push_back(o.score);
    best = std::max(best, o.score);
  }

  GpModel model;
  try {
    model = gp_fit(xs, ys);
  } catch (const NumericFailure& e) {
    std::cerr << "warning: GP fit failed for " << hp.id << " (" << e.what()
              << "); falling back to uniform sampling\n";
    proposal.config = sample_uniform(hp, space, seed);
    proposal.fallback = true;
    return proposal;
  }

  const auto full = declared_ranges(hp);
  Rng rng(seed);
  double best_ei = -1.0;
  for (int i = 0; i < std::max(settings.n_candidates, 1); ++i) {
    Config candidate = sample_uniform(hp, space, rng);
    const auto x = normalize(candidate, hp.tunables, full);
    const auto post = gp_posterior(model, x);
    const double ei = expected_improvement(post.mean, post.variance, best, settings.xi);
    if (ei > best_ei) {
      best_ei = ei;
      proposal.config = std::move(candidate);
    }
  }
  proposal.used_gp = true;
  proposal.expected_improvement = best_ei;
  return proposal;
}

}  // namespace steer
