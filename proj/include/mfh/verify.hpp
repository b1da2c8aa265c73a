#pragma once

// Named experiments with pass/fail criteria. Each experiment is a pipeline
// that turns a flat JSON config into named statistics; criteria compare
// statistics with targets.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace mfh {

inline constexpr const char* kLibraryVersion = "0.1.0";

struct Criterion {
  std::string id;
  std::string statistic;
  std::string comparator;  ///< within | le | ge | lt | gt
  double target = 0.0;
  double tol = 0.0;        ///< only for within: |value - target| <= tol
};

struct Experiment {
  std::string name;  ///< pipeline name in the registry
  nlohmann::json config;
  std::vector<Criterion> criteria;
  std::string headline;  ///< statistic reported by sweep
};

struct CriterionResult {
  Criterion criterion;
  double value = 0.0;
  bool pass = false;
};

struct VerdictReport {
  std::string name;
  std::vector<CriterionResult> results;
  bool pass = false;
  nlohmann::json config;
  std::string config_hash;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::map<std::string, double> statistics;

  /// Verdict JSON {name, criteria, provenance}. Wall time is excluded unless
  /// asked for, so reruns with one seed produce identical bytes.
  nlohmann::json to_json(bool include_wall_time = false) const;
  std::string table() const;
};

using Statistics = std::map<std::string, double>;
using Pipeline = std::function<Statistics(const nlohmann::json& config)>;

/// Registered pipeline names, sorted.
std::vector<std::string> pipeline_names();
const Pipeline& pipeline(const std::string& name);

/// The acceptance experiments in order (criteria 1..14).
std::vector<Experiment> acceptance_experiments();
/// An acceptance or auxiliary experiment by name.
Experiment find_experiment(const std::string& name);
/// Every named experiment (acceptance followed by auxiliary ones).
std::vector<Experiment> all_experiments();

VerdictReport run_experiment(const Experiment& e);

/// One row per value: `param,value,norm,stderr` where norm is the headline
/// statistic and stderr its `<headline>_stderr` companion (0 if absent).
std::string sweep(const std::string& param, const std::vector<double>& values, const Experiment& tmpl);

std::string config_hash(const nlohmann::json& config);

}  // namespace mfh
