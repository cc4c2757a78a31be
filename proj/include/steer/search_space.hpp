#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "steer/rng.hpp"

namespace steer {

enum class ParamKind { integer, real };
enum class Scale { linear, log };

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Range&) const = default;
};

struct HyperparameterSpec {
  std::string name;
  ParamKind kind = ParamKind::real;
  double lower = 0.0;
  double upper = 1.0;
  Scale scale = Scale::linear;
  // categorical name -> required value; empty means "always applies"
  std::map<std::string, std::string> applies_when;

  Range bounds() const { return {lower, upper}; }
  bool operator==(const HyperparameterSpec&) const = default;
};

struct CategoricalSpec {
  std::string name;
  std::vector<std::string> values;
  bool operator==(const CategoricalSpec&) const = default;
};

struct AlgorithmSpec {
  std::string name;
  std::vector<CategoricalSpec> categoricals;
  std::vector<HyperparameterSpec> numerics;
  bool operator==(const AlgorithmSpec&) const = default;
};

/// Categorical assignment in declaration order.
using Assignment = std::vector<std::pair<std::string, std::string>>;

/// Numeric configuration: hyperparameter name -> value.
using Config = std::map<std::string, double>;

struct Hyperpartition {
  std::string id;
  std::string algorithm;
  Assignment assignment;
  std::vector<HyperparameterSpec> tunables;

  const HyperparameterSpec* tunable(const std::string& name) const;
  bool operator==(const Hyperpartition&) const = default;
};

/// `algorithm:cat1=v1,cat2=v2` in declaration order.
std::string hyperpartition_id(const std::string& algorithm, const Assignment& assignment);

/// Cartesian product of the categorical values, last categorical fastest.
std::vector<Hyperpartition> enumerate_hyperpartitions(const AlgorithmSpec& algorithm);

/// Immutable-by-convention snapshot of the hierarchical search space.
/// Mutation happens through apply_delta, which returns a new value.
class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<AlgorithmSpec> algorithms);

  const std::vector<AlgorithmSpec>& algorithms() const { return algorithms_; }
  const std::vector<Hyperpartition>& hyperpartitions() const { return hyperpartitions_; }

  const AlgorithmSpec* find_algorithm(const std::string& name) const;
  const Hyperpartition* find_hyperpartition(const std::string& id) const;
  std::vector<const Hyperpartition*> hyperpartitions_of(const std::string& algorithm) const;

  bool algorithm_enabled(const std::string& name) const;
  bool hyperpartition_flag(const std::string& id) const;
  /// Own flag and the owning algorithm's flag.
  bool effectively_enabled(const std::string& id) const;
  std::vector<std::string> enabled_algorithms() const;
  std::vector<const Hyperpartition*> enabled_hyperpartitions() const;

  /// Current active subrange; the full declared range unless restricted.
  Range active_range(const std::string& hp_id, const HyperparameterSpec& spec) const;

  const std::map<std::string, bool>& algorithm_flags() const { return algorithm_enabled_; }
  const std::map<std::string, bool>& hyperpartition_flags() const { return hyperpartition_enabled_; }
  const std::map<std::pair<std::string, std::string>, Range>& range_overrides() const {
    return ranges_;
  }

  void set_algorithm_enabled(const std::string& name, bool enabled);
  void set_hyperpartition_enabled(const std::string& id, bool enabled);
  /// Stores a restriction; storing the full declared range erases the override.
  void set_range_override(const std::string& hp_id, const std::string& name, Range range);
  void clear_range_override(const std::string& hp_id, const std::string& name);

  bool operator==(const SearchSpace& other) const;

 private:
  std::vector<AlgorithmSpec> algorithms_;
  std::vector<Hyperpartition> hyperpartitions_;
  std::map<std::string, std::size_t> hp_index_;
  std::map<std::string, bool> algorithm_enabled_;
  std::map<std::string, bool> hyperpartition_enabled_;
  std::map<std::pair<std::string, std::string>, Range> ranges_;
};

/// Built-in 6-algorithm, 14-hyperpartition space.
SearchSpace default_space();

struct Violation {
  std::string code;
  std::string message;
  std::string target;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(const std::string& code) const;
};

ValidationReport validate_space(const SearchSpace& space);

enum class DeltaKind {
  enable_algorithm,
  disable_algorithm,
  enable_hyperpartition,
  disable_hyperpartition,
  set_range,
  reset_range,
};

/// One in-situ edit. Range deltas target either a hyperpartition id or an
/// algorithm name (meaning every hyperpartition of it carrying the parameter).
struct SpaceDelta {
  DeltaKind kind = DeltaKind::enable_algorithm;
  std::string target;
  std::string hyperparameter;
  std::optional<Range> range;
  bool operator==(const SpaceDelta&) const = default;
};

/// Throws Error(unknown_target | empty_range | invalid_request).
SearchSpace apply_delta(const SearchSpace& space, const SpaceDelta& delta);
/// All-or-none application of a delta list.
SearchSpace apply_deltas(const SearchSpace& space, std::span<const SpaceDelta> deltas);

Config sample_uniform(const Hyperpartition& hp, const SearchSpace& space, std::uint64_t seed);
Config sample_uniform(const Hyperpartition& hp, const SearchSpace& space, Rng& rng);

/// Throws Error(config_mismatch) if names differ from the tunables.
bool contains(const Hyperpartition& hp, const SearchSpace& space, const Config& config);

std::string_view to_string(DeltaKind kind);
std::string_view to_string(ParamKind kind);
std::string_view to_string(Scale scale);

nlohmann::json to_json(const SearchSpace& space);
SearchSpace space_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SpaceDelta& delta);
SpaceDelta delta_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Hyperpartition& hp);

}  // namespace steer
