#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "steer/search_space.hpp"

namespace steer {

struct TunerSettings {
  int r_min = 3;
  int n_candidates = 1000;
  double xi = 0.01;
  bool operator==(const TunerSettings&) const = default;
};

/// One scored configuration, normalized against the full declared ranges.
struct Observation {
  Config config;
  std::vector<double> x;
  double score = 0.0;
  bool operator==(const Observation&) const = default;
};

struct TunerState {
  std::string hyperpartition_id;
  std::vector<Observation> observations;
  bool operator==(const TunerState&) const = default;
};

std::vector<Range> declared_ranges(const Hyperpartition& hp);
std::vector<Range> active_ranges(const Hyperpartition& hp, const SearchSpace& space);

/// Affine map onto [0,1] per tunable (log10-affine for log scales).
std::vector<double> normalize(const Config& config, std::span<const HyperparameterSpec> tunables,
                              std::span<const Range> ranges);
/// Inverse of normalize; integer kinds are rounded and clamped.
Config denormalize(std::span<const double> x, std::span<const HyperparameterSpec> tunables,
                   std::span<const Range> ranges);

void record_observation(TunerState& state, const Hyperpartition& hp, const Config& config,
                        double score);

struct Proposal {
  Config config;
  bool used_gp = false;
  bool fallback = false;  // GP fit failed; uniform sample returned
  double expected_improvement = 0.0;
};

/// Cold start (fewer than r_min observations inside the active ranges) samples
/// uniformly. Otherwise a GP fitted on all observations scores n_candidates
/// uniform draws from the active ranges by EI and returns the argmax.
Proposal propose(const TunerState& state, const Hyperpartition& hp, const SearchSpace& space,
                 std::uint64_t seed, const TunerSettings& settings = {});

}  // namespace steer
