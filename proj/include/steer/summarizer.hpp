#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "steer/run_types.hpp"
#include "steer/search_space.hpp"

namespace steer {

inline constexpr int kScoreBins = 10;
inline constexpr int kValueBins = 20;

/// Uniform bins over [0,1], half-open except the closed final bin.
std::vector<long> histogram(const std::vector<double>& values, int bins = kScoreBins);

struct TopModel {
  int rank = 0;
  long trial_id = 0;
  std::string algorithm;
  std::string hyperpartition_id;
  double score = 0.0;
  bool operator==(const TopModel&) const = default;
};

struct Overview {
  std::optional<double> best_score;
  long n_trials = 0;
  long n_ok = 0;
  long n_errors = 0;
  double algorithm_coverage = 0.0;
  double hyperpartition_coverage = 0.0;
  std::vector<long> histogram;
  std::vector<TopModel> top_models;
  bool operator==(const Overview&) const = default;
};

struct AlgorithmSummary {
  std::string name;
  bool enabled = true;
  std::optional<double> best_score;
  long n_trials = 0;
  long n_ok = 0;
  long n_errors = 0;
  std::vector<long> histogram;
  double hyperpartition_coverage = 0.0;
  bool operator==(const AlgorithmSummary&) const = default;
};

struct SequencePoint {
  long trial_id = 0;
  double score = 0.0;
  bool operator==(const SequencePoint&) const = default;
};

struct HyperpartitionSummary {
  std::string id;
  std::string algorithm;
  bool enabled = true;
  long n_trials = 0;
  long n_ok = 0;
  long n_errors = 0;
  std::optional<double> best_score;
  std::vector<SequencePoint> sequence;
  bool operator==(const HyperpartitionSummary&) const = default;
};

struct ScatterPoint {
  double value = 0.0;
  double score = 0.0;
  long trial_id = 0;
  std::string hyperpartition_id;
  bool operator==(const ScatterPoint&) const = default;
};

struct ScatterSeries {
  std::string scope;
  std::string hyperparameter;
  ParamKind kind = ParamKind::real;
  Scale scale = Scale::linear;
  Range declared;
  std::vector<ScatterPoint> points;
  std::vector<long> value_histogram;
  bool operator==(const ScatterSeries&) const = default;
};

struct FocusSet {
  std::set<std::string> algorithms;
  std::set<std::string> hyperpartitions;
  bool operator==(const FocusSet&) const = default;
};

/// Coverage denominators count currently enabled entities; history of
/// disabled entities still shows in histograms and the leaderboard.
Overview overview(const std::vector<Trial>& trials, const SearchSpace& space, int top_k = 10);

/// Sorted by best score descending; untried algorithms last, alphabetical.
std::vector<AlgorithmSummary> algorithm_summaries(const std::vector<Trial>& trials,
                                                  const SearchSpace& space);

/// Throws Error(unknown_name) for an unknown algorithm.
std::vector<HyperpartitionSummary> hyperpartition_summaries(const std::vector<Trial>& trials,
                                                            const SearchSpace& space,
                                                            const std::string& algorithm);

/// `scope` is an algorithm name (merging its hyperpartitions) or a
/// hyperpartition id. Throws Error(unknown_name) when nothing in scope
/// carries the hyperparameter.
ScatterSeries scatter(const std::vector<Trial>& trials, const SearchSpace& space,
                      const std::string& scope, const std::string& hyperparameter);

FocusSet focus_filter(const std::vector<Trial>& trials, const SearchSpace& space, int top_k = 10);

nlohmann::json to_json(const Overview& o);
nlohmann::json to_json(const AlgorithmSummary& s);
nlohmann::json to_json(const HyperpartitionSummary& s);
nlohmann::json to_json(const ScatterSeries& s);
nlohmann::json to_json(const FocusSet& f);

/// Every summary of a run in one document (overview, per-algorithm, and
/// per-hyperpartition for each algorithm).
nlohmann::json full_summary(const std::vector<Trial>& trials, const SearchSpace& space,
                            int top_k = 10);

}  // namespace steer
