#include "steer/summarizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "steer/error.hpp"

namespace steer {

using nlohmann::json;

namespace {

// Position in [0,1] -> bin index with exact edge handling at i/bins.
int bin_of(double position, int bins) {
  if (!(position > 0.0)) return 0;
  if (position >= 1.0) return bins - 1;
  int i = std::min(static_cast<int>(position * bins), bins - 1);
  while (i + 1 < bins && position >= static_cast<double>(i + 1) / bins) ++i;
  while (i > 0 && position < static_cast<double>(i) / bins) --i;
  return i;
}

std::vector<TopModel> rank_models(const std::vector<Trial>& trials, int top_k) {
  std::vector<const Trial*> ok;
  for (const auto& t : trials) {
    if (t.ok) ok.push_back(&t);
  }
  std::stable_sort(ok.begin(), ok.end(), [](const Trial* a, const Trial* b) {
    return a->score > b->score || (a->score == b->score && a->trial_id < b->trial_id);
  });
  std::vector<TopModel> out;
  for (std::size_t i = 0; i < ok.size() && static_cast<int>(i) < top_k; ++i) {
    out.push_back({static_cast<int>(i + 1), ok[i]->trial_id, ok[i]->algorithm,
                   ok[i]->hyperpartition_id, ok[i]->score});
  }
  return out;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::vector<long> histogram(const std::vector<double>& values, int bins) {
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) ++counts[static_cast<std::size_t>(bin_of(v, bins))];
  return counts;
}

Overview overview(const std::vector<Trial>& trials, const SearchSpace& space, int top_k) {
  Overview o;
  o.n_trials = static_cast<long>(trials.size());
  std::vector<double> scores;
  std::set<std::string> tried_algos, tried_hps;
  for (const auto& t : trials) {
    if (!t.ok) {
      ++o.n_errors;
      continue;
    }
    ++o.n_ok;
    scores.push_back(t.score);
    if (!o.best_score || t.score > *o.best_score) o.best_score = t.score;
    tried_algos.insert(t.algorithm);
    tried_hps.insert(t.hyperpartition_id);
  }
  o.histogram = histogram(scores);

  const auto algos = space.enabled_algorithms();
  if (!algos.empty()) {
    const auto hit = std::count_if(algos.begin(), algos.end(),
                                   [&](const std::string& a) { return tried_algos.count(a) > 0; });
    o.algorithm_coverage = static_cast<double>(hit) / static_cast<double>(algos.size());
  }
  const auto hps = space.enabled_hyperpartitions();
  if (!hps.empty()) {
    const auto hit = std::count_if(hps.begin(), hps.end(), [&](const Hyperpartition* h) {
      return tried_hps.count(h->id) > 0;
    });
    o.hyperpartition_coverage = static_cast<double>(hit) / static_cast<double>(hps.size());
  }
  o.top_models = rank_models(trials, top_k);
  return o;
}

std::vector<AlgorithmSummary> algorithm_summaries(const std::vector<Trial>& trials,
                                                  const SearchSpace& space) {
  std::map<std::string, std::vector<double>> scores;
  std::map<std::string, AlgorithmSummary> by_name;
  std::map<std::string, std::set<std::string>> tried_hps;
  for (const auto& a : space.algorithms()) {
    auto& s = by_name[a.name];
    s.name = a.name;
    s.enabled = space.algorithm_enabled(a.name);
  }
  for (const auto& t : trials) {
    auto& s = by_name[t.algorithm];
    s.name = t.algorithm;
    ++s.n_trials;
    if (!t.ok) {
      ++s.n_errors;
      continue;
    }
    ++s.n_ok;
    scores[t.algorithm].push_back(t.score);
    if (!s.best_score || t.score > *s.best_score) s.best_score = t.score;
    tried_hps[t.algorithm].insert(t.hyperpartition_id);
  }
  std::vector<AlgorithmSummary> out;
  for (auto& [name, s] : by_name) {
    s.histogram = histogram(scores[name]);
    const auto hps = space.hyperpartitions_of(name);
    long enabled = 0, hit = 0;
    for (const auto* hp : hps) {
      if (!space.hyperpartition_flag(hp->id)) continue;
      ++enabled;
      hit += tried_hps[name].count(hp->id) > 0;
    }
    s.hyperpartition_coverage = enabled > 0 ? static_cast<double>(hit) / static_cast<double>(enabled) : 0.0;
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [](const AlgorithmSummary& a, const AlgorithmSummary& b) {
    if (a.best_score.has_value() != b.best_score.has_value()) return a.best_score.has_value();
    if (a.best_score && *a.best_score != *b.best_score) return *a.best_score > *b.best_score;
    return a.name < b.name;
  });
  return out;
}

std::vector<HyperpartitionSummary> hyperpartition_summaries(const std::vector<Trial>& trials,
                                                            const SearchSpace& space,
                                                            const std::string& algorithm) {
  if (!space.find_algorithm(algorithm)) {
    throw Error(ErrorCode::unknown_name, "unknown algorithm '" + algorithm + "'",
                json{{"algorithm", algorithm}});
  }
  std::vector<HyperpartitionSummary> out;
  std::map<std::string, std::size_t> index;
  for (const auto* hp : space.hyperpartitions_of(algorithm)) {
    HyperpartitionSummary s;
    s.id = hp->id;
    s.algorithm = algorithm;
    s.enabled = space.effectively_enabled(hp->id);
    index[hp->id] = out.size();
    out.push_back(std::move(s));
  }
  for (const auto& t : trials) {
    auto it = index.find(t.hyperpartition_id);
    if (it == index.end()) continue;
    auto& s = out[it->second];
    ++s.n_trials;
    if (!t.ok) {
      ++s.n_errors;
      continue;
    }
    ++s.n_ok;
    s.sequence.push_back({t.trial_id, t.score});
    if (!s.best_score || t.score > *s.best_score) s.best_score = t.score;
  }
  for (auto& s : out) {
    std::stable_sort(s.sequence.begin(), s.sequence.end(),
                     [](const SequencePoint& a, const SequencePoint& b) { return a.trial_id < b.trial_id; });
  }
  return out;
}

ScatterSeries scatter(const std::vector<Trial>& trials, const SearchSpace& space,
                      const std::string& scope, const std::string& hyperparameter) {
  std::vector<const Hyperpartition*> in_scope;
  if (space.find_algorithm(scope)) {
    in_scope = space.hyperpartitions_of(scope);
  } else if (const auto* hp = space.find_hyperpartition(scope)) {
    in_scope.push_back(hp);
  } else {
    throw Error(ErrorCode::unknown_name, "unknown scope '" + scope + "'", json{{"scope", scope}});
  }
  std::set<std::string> carriers;
  const HyperparameterSpec* spec = nullptr;
  for (const auto* hp : in_scope) {
    if (const auto* t = hp->tunable(hyperparameter)) {
      carriers.insert(hp->id);
      if (!spec) spec = t;
    }
  }
  if (!spec) {
    throw Error(ErrorCode::unknown_name,
                "no hyperparameter '" + hyperparameter + "' in scope '" + scope + "'",
                json{{"scope", scope}, {"hyperparameter", hyperparameter}});
  }

  ScatterSeries s;
  s.scope = scope;
  s.hyperparameter = hyperparameter;
  s.kind = spec->kind;
  s.scale = spec->scale;
  s.declared = spec->bounds();
  std::vector<double> positions;
  for (const auto& t : trials) {
    if (!t.ok || !carriers.count(t.hyperpartition_id)) continue;
    auto it = t.config.find(hyperparameter);
    if (it == t.config.end()) continue;
    s.points.push_back({it->second, t.score, t.trial_id, t.hyperpartition_id});
    double pos;
    if (spec->scale == Scale::log) {
      const double a = std::log10(spec->lower), b = std::log10(spec->upper);
      pos = (std::log10(it->second) - a) / (b - a);
    } else {
      pos = (it->second - spec->lower) / (spec->upper - spec->lower);
    }
    positions.push_back(pos);
  }
  s.value_histogram = histogram(positions, kValueBins);
  return s;
}

FocusSet focus_filter(const std::vector<Trial>& trials, const SearchSpace&, int top_k) {
  FocusSet f;
  for (const auto& m : rank_models(trials, top_k)) {
    f.algorithms.insert(m.algorithm);
    f.hyperpartitions.insert(m.hyperpartition_id);
  }
  return f;
}

json to_json(const Overview& o) {
  json top = json::array();
  for (const auto& m : o.top_models) {
    top.push_back({{"rank", m.rank},
                   {"trial_id", m.trial_id},
                   {"algorithm", m.algorithm},
                   {"hyperpartition_id", m.hyperpartition_id},
                   {"score", m.score}});
  }
  return {{"best_score", optional_json(o.best_score)},
          {"n_trials", o.n_trials},
          {"n_ok", o.n_ok},
          {"n_errors", o.n_errors},
          {"algorithm_coverage", o.algorithm_coverage},
          {"hyperpartition_coverage", o.hyperpartition_coverage},
          {"histogram", o.histogram},
          {"top_models", top}};
}

json to_json(const AlgorithmSummary& s) {
  return {{"name", s.name},
          {"enabled", s.enabled},
          {"best_score", optional_json(s.best_score)},
          {"n_trials", s.n_trials},
          {"n_ok", s.n_ok},
          {"n_errors", s.n_errors},
          {"histogram", s.histogram},
          {"hyperpartition_coverage", s.hyperpartition_coverage}};
}

json to_json(const HyperpartitionSummary& s) {
  json seq = json::array();
  for (const auto& p : s.sequence) seq.push_back({{"trial_id", p.trial_id}, {"score", p.score}});
  return {{"id", s.id},
          {"algorithm", s.algorithm},
          {"enabled", s.enabled},
          {"n_trials", s.n_trials},
          {"n_ok", s.n_ok},
          {"n_errors", s.n_errors},
          {"best_score", optional_json(s.best_score)},
          {"sequence", seq}};
}

json to_json(const ScatterSeries& s) {
  json pts = json::array();
  for (const auto& p : s.points) {
    pts.push_back({{"value", p.value},
                   {"score", p.score},
                   {"trial_id", p.trial_id},
                   {"hyperpartition_id", p.hyperpartition_id}});
  }
  return {{"scope", s.scope},
          {"hyperparameter", s.hyperparameter},
          {"kind", to_string(s.kind)},
          {"scale", to_string(s.scale)},
          {"declared_range", {s.declared.lo, s.declared.hi}},
          {"points", pts},
          {"value_histogram", s.value_histogram}};
}

json to_json(const FocusSet& f) {
  return {{"algorithms", f.algorithms}, {"hyperpartitions", f.hyperpartitions}};
}

json full_summary(const std::vector<Trial>& trials, const SearchSpace& space, int top_k) {
  json algos = json::array();
  json hps = json::object();
  for (const auto& s : algorithm_summaries(trials, space)) {
    algos.push_back(to_json(s));
    json list = json::array();
    for (const auto& h : hyperpartition_summaries(trials, space, s.name)) list.push_back(to_json(h));
    hps[s.name] = std::move(list);
  }
  return {{"overview", to_json(overview(trials, space, top_k))},
          {"algorithms", algos},
          {"hyperpartitions", hps},
          {"focus", to_json(focus_filter(trials, space, top_k))}};
}

}  // namespace steer
