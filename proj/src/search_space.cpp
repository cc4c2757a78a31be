#include "steer/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "steer/error.hpp"

namespace steer {

using nlohmann::json;

const HyperparameterSpec* Hyperpartition::tunable(const std::string& name) const {
  for (const auto& t : tunables) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::string hyperpartition_id(const std::string& algorithm, const Assignment& assignment) {
  std::string id = algorithm + ":";
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (i > 0) id += ',';
    id += assignment[i].first + '=' + assignment[i].second;
  }
  return id;
}

namespace {

bool predicate_holds(const HyperparameterSpec& spec, const Assignment& assignment) {
  for (const auto& [cat, value] : spec.applies_when) {
    auto it = std::find_if(assignment.begin(), assignment.end(),
                           [&](const auto& p) { return p.first == cat; });
    if (it == assignment.end() || it->second != value) return false;
  }
  return true;
}

}  // namespace

std::vector<Hyperpartition> enumerate_hyperpartitions(const AlgorithmSpec& algorithm) {
  std::vector<Hyperpartition> out;
  const auto& cats = algorithm.categoricals;
  for (const auto& c : cats) {
    if (c.values.empty()) return out;
  }
  // Mixed-radix counter, last digit fastest.
  std::vector<std::size_t> digit(cats.size(), 0);
  while (true) {
    Hyperpartition hp;
    hp.algorithm = algorithm.name;
    for (std::size_t i = 0; i < cats.size(); ++i) {
      hp.assignment.emplace_back(cats[i].name, cats[i].values[digit[i]]);
    }
    hp.id = hyperpartition_id(algorithm.name, hp.assignment);
    for (const auto& n : algorithm.numerics) {
      if (predicate_holds(n, hp.assignment)) hp.tunables.push_back(n);
    }
    out.push_back(std::move(hp));

    std::size_t pos = cats.size();
    while (pos > 0) {
      --pos;
      if (++digit[pos] < cats[pos].values.size()) break;
      digit[pos] = 0;
      if (pos == 0) return out;
    }
    if (cats.empty()) return out;
  }
}

SearchSpace::SearchSpace(std::vector<AlgorithmSpec> algorithms)
    : algorithms_(std::move(algorithms)) {
  for (const auto& a : algorithms_) {
    algorithm_enabled_[a.name] = true;
    for (auto& hp : enumerate_hyperpartitions(a)) {
      hyperpartition_enabled_[hp.id] = true;
      hp_index_[hp.id] = hyperpartitions_.size();
      hyperpartitions_.push_back(std::move(hp));
    }
  }
}

const AlgorithmSpec* SearchSpace::find_algorithm(const std::string& name) const {
  for (const auto& a : algorithms_) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const Hyperpartition* SearchSpace::find_hyperpartition(const std::string& id) const {
  auto it = hp_index_.find(id);
  return it == hp_index_.end() ? nullptr : &hyperpartitions_[it->second];
}

std::vector<const Hyperpartition*> SearchSpace::hyperpartitions_of(
    const std::string& algorithm) const {
  std::vector<const Hyperpartition*> out;
  for (const auto& hp : hyperpartitions_) {
    if (hp.algorithm == algorithm) out.push_back(&hp);
  }
  return out;
}

bool SearchSpace::algorithm_enabled(const std::string& name) const {
  auto it = algorithm_enabled_.find(name);
  return it != algorithm_enabled_.end() && it->second;
}

bool SearchSpace::hyperpartition_flag(const std::string& id) const {
  auto it = hyperpartition_enabled_.find(id);
  return it != hyperpartition_enabled_.end() && it->second;
}

bool SearchSpace::effectively_enabled(const std::string& id) const {
  const auto* hp = find_hyperpartition(id);
  return hp != nullptr && hyperpartition_flag(id) && algorithm_enabled(hp->algorithm);
}

std::vector<std::string> SearchSpace::enabled_algorithms() const {
  std::vector<std::string> out;
  for (const auto& a : algorithms_) {
    if (algorithm_enabled(a.name)) out.push_back(a.name);
  }
  return out;
}

std::vector<const Hyperpartition*> SearchSpace::enabled_hyperpartitions() const {
  std::vector<const Hyperpartition*> out;
  for (const auto& hp : hyperpartitions_) {
    if (effectively_enabled(hp.id)) out.push_back(&hp);
  }
  return out;
}

Range SearchSpace::active_range(const std::string& hp_id, const HyperparameterSpec& spec) const {
  auto it = ranges_.find({hp_id, spec.name});
  return it == ranges_.end() ? spec.bounds() : it->second;
}

void SearchSpace::set_algorithm_enabled(const std::string& name, bool enabled) {
  algorithm_enabled_[name] = enabled;
}

void SearchSpace::set_hyperpartition_enabled(const std::string& id, bool enabled) {
  hyperpartition_enabled_[id] = enabled;
}

void SearchSpace::set_range_override(const std::string& hp_id, const std::string& name,
                                     Range range) {
  if (const auto* hp = find_hyperpartition(hp_id)) {
    if (const auto* spec = hp->tunable(name); spec && spec->bounds() == range) {
      ranges_.erase({hp_id, name});
      return;
    }
  }
  ranges_[{hp_id, name}] = range;
}

void SearchSpace::clear_range_override(const std::string& hp_id, const std::string& name) {
  ranges_.erase({hp_id, name});
}

bool SearchSpace::operator==(const SearchSpace& other) const {
  return algorithms_ == other.algorithms_ && algorithm_enabled_ == other.algorithm_enabled_ &&
         hyperpartition_enabled_ == other.hyperpartition_enabled_ && ranges_ == other.ranges_;
}

SearchSpace default_space() {
  using K = ParamKind;
  using S = Scale;
  const CategoricalSpec criterion{"criterion", {"gini", "entropy"}};
  std::vector<AlgorithmSpec> algos;
  algos.push_back({"KNN",
                   {{"weights", {"uniform", "distance"}}, {"metric", {"euclidean", "manhattan"}}},
                   {{"n_neighbors", K::integer, 1, 30, S::linear, {}}}});
  algos.push_back({"DecisionTree",
                   {criterion},
                   {{"max_depth", K::integer, 1, 20, S::linear, {}},
                    {"min_samples_split", K::integer, 2, 20, S::linear, {}}}});
  const std::vector<HyperparameterSpec> forest{
      {"n_trees", K::integer, 5, 100, S::linear, {}},
      {"max_features", K::real, 0.1, 1.0, S::linear, {}},
      {"max_depth", K::integer, 1, 20, S::linear, {}}};
  algos.push_back({"RandomForest", {criterion}, forest});
  algos.push_back({"ExtraTrees", {criterion}, forest});
  algos.push_back({"SGDLogistic",
                   {{"penalty", {"l1", "l2", "none"}}},
                   {{"learning_rate", K::real, 1e-4, 1e-1, S::log, {}},
                    {"alpha", K::real, 1e-6, 1e-1, S::log, {}},
                    {"epochs", K::integer, 5, 100, S::linear, {}}}});
  algos.push_back({"GaussianNB", {}, {{"var_smoothing", K::real, 1e-12, 1e-3, S::log, {}}}});
  return SearchSpace(std::move(algos));
}

bool ValidationReport::has(const std::string& code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

namespace {

void validate_spec(const std::string& algo, const HyperparameterSpec& s,
                   const AlgorithmSpec& a, std::vector<Violation>& out) {
  const std::string where = algo + "." + s.name;
  if (!(s.lower < s.upper)) {
    out.push_back({"invalid_spec", "declared range is empty", where});
  }
  if (s.scale == Scale::log && !(s.lower > 0)) {
    out.push_back({"invalid_spec", "log-scale range must be positive", where});
  }
  if (s.kind == ParamKind::integer &&
      (s.lower != std::floor(s.lower) || s.upper != std::floor(s.upper) || s.upper - s.lower < 1)) {
    out.push_back({"invalid_spec", "integer range needs whole bounds at least 1 apart", where});
  }
  for (const auto& [cat, value] : s.applies_when) {
    auto it = std::find_if(a.categoricals.begin(), a.categoricals.end(),
                           [&](const CategoricalSpec& c) { return c.name == cat; });
    if (it == a.categoricals.end() ||
        std::find(it->values.begin(), it->values.end(), value) == it->values.end()) {
      out.push_back({"invalid_spec", "applies_when references unknown " + cat + "=" + value,
                     where});
    }
  }
}

}  // namespace

ValidationReport validate_space(const SearchSpace& space) {
  ValidationReport report;
  auto& out = report.violations;

  std::set<std::string> algo_names;
  for (const auto& a : space.algorithms()) {
    if (!algo_names.insert(a.name).second) {
      out.push_back({"invalid_spec", "duplicate algorithm name", a.name});
    }
    std::set<std::string> names;
    for (const auto& c : a.categoricals) {
      if (!names.insert(c.name).second) {
        out.push_back({"invalid_spec", "duplicate parameter name", a.name + "." + c.name});
      }
      if (c.values.empty()) {
        out.push_back({"invalid_spec", "categorical has no values", a.name + "." + c.name});
      }
      std::set<std::string> vals(c.values.begin(), c.values.end());
      if (vals.size() != c.values.size()) {
        out.push_back({"invalid_spec", "duplicate categorical value", a.name + "." + c.name});
      }
    }
    for (const auto& n : a.numerics) {
      if (!names.insert(n.name).second) {
        out.push_back({"invalid_spec", "duplicate parameter name", a.name + "." + n.name});
      }
      validate_spec(a.name, n, a, out);
    }
  }

  for (const auto& [name, flag] : space.algorithm_flags()) {
    if (!space.find_algorithm(name)) {
      out.push_back({"unknown_target", "unknown algorithm", name});
    }
  }
  for (const auto& [id, flag] : space.hyperpartition_flags()) {
    if (!space.find_hyperpartition(id)) {
      out.push_back({"unknown_target", "unknown hyperpartition", id});
    }
  }
  for (const auto& [key, range] : space.range_overrides()) {
    const auto& [hp_id, name] = key;
    const auto* hp = space.find_hyperpartition(hp_id);
    const auto* spec = hp ? hp->tunable(name) : nullptr;
    const std::string where = hp_id + "/" + name;
    if (!spec) {
      out.push_back({"unknown_target", "unknown hyperparameter target", where});
      continue;
    }
    if (!(range.lo < range.hi)) {
      out.push_back({"empty_range", "active range is empty", where});
    } else if (range.lo < spec->lower || range.hi > spec->upper) {
      out.push_back({"range_out_of_bounds", "active range exceeds declared bounds", where});
    }
  }

  if (space.enabled_hyperpartitions().empty()) {
    out.push_back({"no_enabled_hyperpartition", "no hyperpartition is enabled", ""});
  }
  return report;
}

namespace {

Range clip_range(const HyperparameterSpec& spec, Range requested, const std::string& where) {
  if (!(requested.lo < requested.hi)) {
    throw Error(ErrorCode::empty_range, "empty range for " + where);
  }
  Range r{std::max(requested.lo, spec.lower), std::min(requested.hi, spec.upper)};
  if (spec.kind == ParamKind::integer) {
    r.lo = std::ceil(r.lo);
    r.hi = std::floor(r.hi);
  }
  if (!(r.lo < r.hi)) {
    throw Error(ErrorCode::empty_range, "range for " + where + " is empty after clipping",
                json{{"declared", {spec.lower, spec.upper}}});
  }
  return r;
}

// Hyperpartitions a range delta applies to: an explicit id, or every
// hyperpartition of a named algorithm that carries the hyperparameter.
std::vector<const Hyperpartition*> range_targets(const SearchSpace& space,
                                                 const SpaceDelta& delta) {
  std::vector<const Hyperpartition*> out;
  if (const auto* hp = space.find_hyperpartition(delta.target)) {
    if (hp->tunable(delta.hyperparameter)) out.push_back(hp);
  } else if (space.find_algorithm(delta.target)) {
    for (const auto* h : space.hyperpartitions_of(delta.target)) {
      if (h->tunable(delta.hyperparameter)) out.push_back(h);
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::unknown_target,
                "no hyperparameter '" + delta.hyperparameter + "' under '" + delta.target + "'",
                json{{"target", delta.target}, {"hyperparameter", delta.hyperparameter}});
  }
  return out;
}

}  // namespace

SearchSpace apply_delta(const SearchSpace& space, const SpaceDelta& delta) {
  SearchSpace next = space;
  auto unknown = [&](const char* what) {
    return Error(ErrorCode::unknown_target, std::string("unknown ") + what + " '" + delta.target + "'",
                 json{{"target", delta.target}});
  };
  switch (delta.kind) {
    case DeltaKind::enable_algorithm:
    case DeltaKind::disable_algorithm:
      if (!space.find_algorithm(delta.target)) throw unknown("algorithm");
      next.set_algorithm_enabled(delta.target, delta.kind == DeltaKind::enable_algorithm);
      break;
    case DeltaKind::enable_hyperpartition:
    case DeltaKind::disable_hyperpartition:
      if (!space.find_hyperpartition(delta.target)) throw unknown("hyperpartition");
      next.set_hyperpartition_enabled(delta.target,
                                      delta.kind == DeltaKind::enable_hyperpartition);
      break;
    case DeltaKind::set_range: {
      if (!delta.range) {
        throw Error(ErrorCode::invalid_request, "set_range requires a range");
      }
      for (const auto* hp : range_targets(space, delta)) {
        const auto* spec = hp->tunable(delta.hyperparameter);
        next.set_range_override(hp->id, spec->name,
                                clip_range(*spec, *delta.range, hp->id + "/" + spec->name));
      }
      break;
    }
    case DeltaKind::reset_range:
      for (const auto* hp : range_targets(space, delta)) {
        next.clear_range_override(hp->id, delta.hyperparameter);
      }
      break;
  }
  return next;
}

SearchSpace apply_deltas(const SearchSpace& space, std::span<const SpaceDelta> deltas) {
  SearchSpace next = space;
  for (const auto& d : deltas) next = apply_delta(next, d);
  return next;
}

Config sample_uniform(const Hyperpartition& hp, const SearchSpace& space, Rng& rng) {
  Config config;
  for (const auto& spec : hp.tunables) {
    const Range r = space.active_range(hp.id, spec);
    const double u = uniform01(rng);
    double v;
    if (spec.scale == Scale::log) {
      const double a = std::log10(r.lo), b = std::log10(r.hi);
      v = std::pow(10.0, a + u * (b - a));
    } else {
      v = r.lo + u * (r.hi - r.lo);
    }
    if (spec.kind == ParamKind::integer) v = std::round(v);
    config[spec.name] = std::clamp(v, r.lo, r.hi);
  }
  return config;
}

Config sample_uniform(const Hyperpartition& hp, const SearchSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  return sample_uniform(hp, space, rng);
}

bool contains(const Hyperpartition& hp, const SearchSpace& space, const Config& config) {
  if (config.size() != hp.tunables.size()) {
    throw Error(ErrorCode::config_mismatch, "configuration does not match tunables of " + hp.id);
  }
  bool inside = true;
  for (const auto& spec : hp.tunables) {
    auto it = config.find(spec.name);
    if (it == config.end()) {
      throw Error(ErrorCode::config_mismatch, "missing hyperparameter '" + spec.name + "'",
                  json{{"hyperpartition", hp.id}, {"hyperparameter", spec.name}});
    }
    const Range r = space.active_range(hp.id, spec);
    if (!(it->second >= r.lo && it->second <= r.hi)) inside = false;
  }
  return inside;
}

std::string_view to_string(DeltaKind kind) {
  switch (kind) {
    case DeltaKind::enable_algorithm: return "enable_algorithm";
    case DeltaKind::disable_algorithm: return "disable_algorithm";
    case DeltaKind::enable_hyperpartition: return "enable_hyperpartition";
    case DeltaKind::disable_hyperpartition: return "disable_hyperpartition";
    case DeltaKind::set_range: return "set_range";
    case DeltaKind::reset_range: return "reset_range";
  }
  return "";
}

std::string_view to_string(ParamKind kind) {
  return kind == ParamKind::integer ? "integer" : "real";
}

std::string_view to_string(Scale scale) { return scale == Scale::log ? "log" : "linear"; }

namespace {

template <typename T>
T required(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::invalid_request, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::invalid_request, std::string("bad type for field '") + key + "'");
  }
}

Range range_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorCode::invalid_request, "range must be [lo, hi]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

json to_json(const SearchSpace& space) {
  json algos = json::array();
  for (const auto& a : space.algorithms()) {
    json cats = json::array();
    for (const auto& c : a.categoricals) cats.push_back({{"name", c.name}, {"values", c.values}});
    json nums = json::array();
    for (const auto& n : a.numerics) {
      json jn = {{"name", n.name},          {"kind", to_string(n.kind)}, {"lower", n.lower},
                 {"upper", n.upper},        {"scale", to_string(n.scale)}};
      if (!n.applies_when.empty()) jn["applies_when"] = n.applies_when;
      nums.push_back(std::move(jn));
    }
    algos.push_back({{"name", a.name}, {"categoricals", cats}, {"numerics", nums}});
  }
  json ranges = json::object();
  for (const auto& hp : space.hyperpartitions()) {
    json per = json::object();
    for (const auto& t : hp.tunables) {
      const Range r = space.active_range(hp.id, t);
      per[t.name] = {r.lo, r.hi};
    }
    ranges[hp.id] = std::move(per);
  }
  // Overrides on unknown targets survive serialization so validation can flag them.
  for (const auto& [key, r] : space.range_overrides()) {
    ranges[key.first][key.second] = {r.lo, r.hi};
  }
  return {{"algorithms", algos},
          {"algorithm_enabled", space.algorithm_flags()},
          {"hyperpartition_enabled", space.hyperpartition_flags()},
          {"active_ranges", ranges}};
}

SearchSpace space_from_json(const json& j) {
  std::vector<AlgorithmSpec> algos;
  for (const auto& ja : required<json>(j, "algorithms")) {
    AlgorithmSpec a;
    a.name = required<std::string>(ja, "name");
    if (ja.contains("categoricals")) {
      for (const auto& jc : ja.at("categoricals")) {
        a.categoricals.push_back({required<std::string>(jc, "name"),
                                  required<std::vector<std::string>>(jc, "values")});
      }
    }
    if (ja.contains("numerics")) {
      for (const auto& jn : ja.at("numerics")) {
        HyperparameterSpec s;
        s.name = required<std::string>(jn, "name");
        const auto kind = required<std::string>(jn, "kind");
        if (kind != "integer" && kind != "real") {
          throw Error(ErrorCode::invalid_request, "kind must be integer or real");
        }
        s.kind = kind == "integer" ? ParamKind::integer : ParamKind::real;
        s.lower = required<double>(jn, "lower");
        s.upper = required<double>(jn, "upper");
        const auto scale = jn.value("scale", std::string("linear"));
        if (scale != "linear" && scale != "log") {
          throw Error(ErrorCode::invalid_request, "scale must be linear or log");
        }
        s.scale = scale == "log" ? Scale::log : Scale::linear;
        if (jn.contains("applies_when")) {
          s.applies_when = jn.at("applies_when").get<std::map<std::string, std::string>>();
        }
        a.numerics.push_back(std::move(s));
      }
    }
    algos.push_back(std::move(a));
  }
  SearchSpace space(std::move(algos));
  if (j.contains("algorithm_enabled")) {
    for (const auto& [name, flag] : j.at("algorithm_enabled").items()) {
      space.set_algorithm_enabled(name, flag.get<bool>());
    }
  }
  if (j.contains("hyperpartition_enabled")) {
    for (const auto& [id, flag] : j.at("hyperpartition_enabled").items()) {
      space.set_hyperpartition_enabled(id, flag.get<bool>());
    }
  }
  if (j.contains("active_ranges")) {
    for (const auto& [id, per] : j.at("active_ranges").items()) {
      for (const auto& [name, r] : per.items()) {
        space.set_range_override(id, name, range_from_json(r));
      }
    }
  }
  return space;
}

json to_json(const SpaceDelta& delta) {
  json j = {{"kind", to_string(delta.kind)}, {"target", delta.target}};
  if (!delta.hyperparameter.empty()) j["hyperparameter"] = delta.hyperparameter;
  if (delta.range) j["range"] = {delta.range->lo, delta.range->hi};
  return j;
}

SpaceDelta delta_from_json(const json& j) {
  SpaceDelta d;
  const auto kind = required<std::string>(j, "kind");
  static const std::map<std::string, DeltaKind> kinds = {
      {"enable_algorithm", DeltaKind::enable_algorithm},
      {"disable_algorithm", DeltaKind::disable_algorithm},
      {"enable_hyperpartition", DeltaKind::enable_hyperpartition},
      {"disable_hyperpartition", DeltaKind::disable_hyperpartition},
      {"set_range", DeltaKind::set_range},
      {"reset_range", DeltaKind::reset_range}};
  auto it = kinds.find(kind);
  if (it == kinds.end()) throw Error(ErrorCode::invalid_request, "unknown delta kind '" + kind + "'");
  d.kind = it->second;
  d.target = required<std::string>(j, "target");
  const bool ranged = d.kind == DeltaKind::set_range || d.kind == DeltaKind::reset_range;
  if (ranged) d.hyperparameter = required<std::string>(j, "hyperparameter");
  if (d.kind == DeltaKind::set_range) {
    d.range = range_from_json(required<json>(j, "range"));
  } else if (j.contains("range")) {
    throw Error(ErrorCode::invalid_request, "only set_range carries a range");
  }
  return d;
}

json to_json(const Hyperpartition& hp) {
  json assignment = json::object();
  for (const auto& [k, v] : hp.assignment) assignment[k] = v;
  json tunables = json::array();
  for (const auto& t : hp.tunables) tunables.push_back(t.name);
  return {{"id", hp.id}, {"algorithm", hp.algorithm}, {"assignment", assignment},
          {"tunables", tunables}};
}

}  // namespace steer
