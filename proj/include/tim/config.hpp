#pragma once

// Run configuration: a strict JSON document (unknown keys are rejected) that
// is echoed verbatim into every report.
//
//   {
//     "input": "data.csv",
//     "schema": {"age": "covariate_continuous", "smoker": "covariate_discrete",
//                "T": "treatment", "Y": "outcome", "id": "ignore"},
//     "coarsening": {"age": 6},
//     "binning": {"age": 10},
//     "normalize_continuous": true,
//     "reuse_controls": true,
//     "stratum_weighting": "unweighted",
//     "weight_controls_by_score": false,
//     "logistic": {"ridge_lambda": 1e-6, "tolerance": 1e-8, "max_iterations": 100},
//     "seed": 7,
//     "threads": 1,
//     "output_dir": "tim_out"
//   }

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include <json.hpp>

#include "tim/dataset.hpp"
#include "tim/error.hpp"
#include "tim/pipeline.hpp"

namespace tim {

// Used whenever no seed is given, so unseeded runs stay reproducible.
inline constexpr std::uint64_t kDefaultSeed = 7;

struct RunConfig {
  std::string input;
  Schema schema;
  std::map<std::string, int> coarsening;
  std::map<std::string, int> binning;
  bool normalize_continuous = true;
  bool reuse_controls = true;
  StratumWeighting stratum_weighting = StratumWeighting::Unweighted;
  bool weight_controls_by_score = false;
  LogisticOptions logistic;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
  std::string output_dir = "tim_out";
};

namespace detail {

template <typename T>
T get_as(const nlohmann::json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(std::string("config key '") + key + "' has the wrong type");
  }
}

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw SchemaError("unknown config key '" + key + "'" + where);
  }
}

inline std::map<std::string, int> bin_map(const nlohmann::json& j, const char* key) {
  if (!j.is_object()) throw SchemaError(std::string("config key '") + key + "' must be an object");
  std::map<std::string, int> out;
  for (const auto& [name, bins] : j.items()) {
    if (!bins.is_number_integer() || bins.get<int>() < 2) {
      throw SchemaError(std::string("config '") + key + "." + name + "' must be an integer >= 2");
    }
    out[name] = bins.get<int>();
  }
  return out;
}

}  // namespace detail

// Relative "input" paths are resolved against base_dir.
inline RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw SchemaError("config must be a JSON object");
  detail::reject_unknown(j,
                         {"input", "schema", "coarsening", "binning", "normalize_continuous", "reuse_controls",
                          "stratum_weighting", "weight_controls_by_score", "logistic", "seed", "threads",
                          "output_dir"},
                         "");
  RunConfig c;
  if (j.contains("input")) {
    std::filesystem::path p = detail::get_as<std::string>(j["input"], "input");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.input = p.string();
  }
  if (j.contains("schema")) {
    const auto& s = j["schema"];
    if (!s.is_object()) throw SchemaError("config key 'schema' must be an object");
    for (const auto& [name, role] : s.items()) {
      auto r = role.is_string() ? parse_role(role.get<std::string>()) : std::nullopt;
      if (!r) throw SchemaError("unknown role for column '" + name + "'");
      c.schema.roles[name] = *r;
    }
  }
  if (j.contains("coarsening")) c.coarsening = detail::bin_map(j["coarsening"], "coarsening");
  if (j.contains("binning")) c.binning = detail::bin_map(j["binning"], "binning");
  if (j.contains("normalize_continuous"))
    c.normalize_continuous = detail::get_as<bool>(j["normalize_continuous"], "normalize_continuous");
  if (j.contains("reuse_controls")) c.reuse_controls = detail::get_as<bool>(j["reuse_controls"], "reuse_controls");
  if (j.contains("stratum_weighting")) {
    const auto w = detail::get_as<std::string>(j["stratum_weighting"], "stratum_weighting");
    if (w == "unweighted") c.stratum_weighting = StratumWeighting::Unweighted;
    else if (w == "treated") c.stratum_weighting = StratumWeighting::Treated;
    else throw SchemaError("stratum_weighting must be \"unweighted\" or \"treated\"");
  }
  if (j.contains("weight_controls_by_score"))
    c.weight_controls_by_score = detail::get_as<bool>(j["weight_controls_by_score"], "weight_controls_by_score");
  if (j.contains("logistic")) {
    const auto& l = j["logistic"];
    if (!l.is_object()) throw SchemaError("config key 'logistic' must be an object");
    detail::reject_unknown(l, {"ridge_lambda", "tolerance", "max_iterations"}, " in 'logistic'");
    if (l.contains("ridge_lambda")) c.logistic.ridge_lambda = detail::get_as<double>(l["ridge_lambda"], "ridge_lambda");
    if (l.contains("tolerance")) c.logistic.tolerance = detail::get_as<double>(l["tolerance"], "tolerance");
    if (l.contains("max_iterations"))
      c.logistic.max_iterations = detail::get_as<int>(l["max_iterations"], "max_iterations");
    if (c.logistic.ridge_lambda < 0 || c.logistic.tolerance <= 0 || c.logistic.max_iterations < 1) {
      throw SchemaError("logistic options out of range");
    }
  }
  if (j.contains("seed")) c.seed = detail::get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("threads")) {
    c.threads = detail::get_as<unsigned>(j["threads"], "threads");
    if (c.threads < 1) throw SchemaError("threads must be >= 1");
  }
  if (j.contains("output_dir")) {
    std::filesystem::path p = detail::get_as<std::string>(j["output_dir"], "output_dir");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.output_dir = p.string();
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path());
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json schema = nlohmann::json::object();
  for (const auto& [name, role] : c.schema.roles) schema[name] = to_string(role);
  return {
      {"input", c.input},
      {"schema", schema},
      {"coarsening", c.coarsening},
      {"binning", c.binning},
      {"normalize_continuous", c.normalize_continuous},
      {"reuse_controls", c.reuse_controls},
      {"stratum_weighting", c.stratum_weighting == StratumWeighting::Treated ? "treated" : "unweighted"},
      {"weight_controls_by_score", c.weight_controls_by_score},
      {"logistic",
       {{"ridge_lambda", c.logistic.ridge_lambda},
        {"tolerance", c.logistic.tolerance},
        {"max_iterations", c.logistic.max_iterations}}},
      {"seed", c.seed},
      {"threads", c.threads},
      {"output_dir", c.output_dir},
  };
}

// Resolves column names in the config against a loaded dataset.
inline PipelineOptions pipeline_options(const RunConfig& c, const Dataset& ds) {
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < ds.k(); ++j) index[ds.column(j).name] = j;
  auto resolve = [&](const std::map<std::string, int>& bins, const char* what) {
    std::map<std::size_t, int> out;
    for (const auto& [name, b] : bins) {
      auto it = index.find(name);
      if (it == index.end()) throw SchemaError(std::string(what) + " names unknown covariate '" + name + "'");
      if (ds.kind(it->second) != CovariateKind::Continuous) {
        throw SchemaError(std::string(what) + " column '" + name + "' is not continuous");
      }
      out[it->second] = b;
    }
    return out;
  };
  PipelineOptions o;
  o.coarsening_bins = resolve(c.coarsening, "coarsening");
  o.imbalance_bins = resolve(c.binning, "binning");
  o.logistic = c.logistic;
  o.matching.reuse_controls = c.reuse_controls;
  o.refine.normalize_continuous = c.normalize_continuous;
  o.weighting = c.stratum_weighting;
  o.imbalance.weight_controls_by_score = c.weight_controls_by_score;
  return o;
}

}  // namespace tim
