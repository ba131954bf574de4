#pragma once

// JSON and CSV report writers. Every JSON report carries a schema version,
// the tool version, the config echo and the seed; wall-clock timings are kept
// under "timings" so the rest of the payload is reproducible.

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tim/config.hpp"
#include "tim/dataset.hpp"
#include "tim/discrete_distance.hpp"
#include "tim/pipeline.hpp"
#include "tim/simulate.hpp"

#ifndef TIM_VERSION
#define TIM_VERSION "0.1.0"
#endif

namespace tim {

inline constexpr int kReportSchemaVersion = 1;

using nlohmann::json;

inline json tool_json() { return {{"name", "tim"}, {"version", TIM_VERSION}}; }

inline json dataset_json(const Dataset& ds) {
  json cols = json::array();
  for (const auto& c : ds.columns()) {
    json col = {{"name", c.name}, {"kind", to_string(c.kind)}};
    if (c.kind == CovariateKind::Discrete) col["codebook"] = c.labels;
    cols.push_back(std::move(col));
  }
  return {{"n", ds.n()}, {"k", ds.k()}, {"n_treated", ds.n_treated()}, {"n_control", ds.n_control()},
          {"columns", std::move(cols)}};
}

inline json importance_json(const Dataset& ds, const ImportanceVector& iv) {
  std::vector<std::size_t> rank(iv.order.size());
  for (std::size_t r = 0; r < iv.order.size(); ++r) rank[iv.order[r]] = r + 1;
  json cols = json::array();
  for (std::size_t j = 0; j < ds.k(); ++j) {
    cols.push_back({{"column", ds.column(j).name},
                    {"beta_hat", iv.beta_hat[j]},
                    {"alpha_hat", iv.alpha_hat[j]},
                    {"theta_star", iv.theta_star[j]},
                    {"rank", rank[j]}});
  }
  return {{"columns", std::move(cols)}, {"order", iv.order}, {"warnings", iv.warnings}};
}

inline json binning_json(const Dataset& ds, const Binning& b) {
  json out = json::array();
  for (std::size_t j = 0; j < b.columns.size(); ++j) {
    const auto& c = b.columns[j];
    json col = {{"column", ds.column(j).name}, {"kind", to_string(c.kind)}, {"bins", c.cardinality}};
    if (c.kind == CovariateKind::Continuous) col["edges"] = c.edges;
    out.push_back(std::move(col));
  }
  return out;
}

inline std::vector<std::string> column_names(const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<std::string> names;
  names.reserve(idx.size());
  for (auto j : idx) names.push_back(ds.column(j).name);
  return names;
}

inline json stratum_json(const Dataset& ds, const Stratum& s) {
  return {{"id", s.id},
          {"iteration", s.iteration},
          {"matched_columns", column_names(ds, s.matched_columns)},
          {"signature", s.signature},
          {"dropped_columns", column_names(ds, s.dropped_columns)},
          {"treated_members", s.treated_members},
          {"control_members", s.control_members}};
}

inline json match_json(const Dataset& ds, const MatchResult& m, const std::vector<RefinedStratum>* refined = nullptr) {
  json strata = json::array();
  for (std::size_t s = 0; s < m.strata.size(); ++s) {
    json js = stratum_json(ds, m.strata[s]);
    if (refined) {
      const auto& r = (*refined)[s];
      js["control_distance"] = r.control_distance;
      js["inverse_score"] = r.inverse_score;
    }
    strata.push_back(std::move(js));
  }
  return {{"t_fraction", m.t_fraction},
          {"n_strata", m.strata.size()},
          {"matched_treated", m.matched_treated()},
          {"unmatched_treated", m.unmatched_treated},
          {"unmatched_controls", m.unmatched_controls.size()},
          {"strata", std::move(strata)}};
}

inline json timings_json(const Timings& t) {
  return {{"importance_seconds", t.importance}, {"coarsen_seconds", t.coarsen}, {"match_seconds", t.match},
          {"refine_seconds", t.refine},         {"estimate_seconds", t.estimate}, {"imbalance_seconds", t.imbalance},
          {"total_seconds", t.total}};
}

inline json report_header(const char* kind, const RunConfig& cfg) {
  return {{"schema_version", kReportSchemaVersion},
          {"report", kind},
          {"tool", tool_json()},
          {"seed", cfg.seed},
          {"config", to_json(cfg)}};
}

inline json make_match_report(const RunConfig& cfg, const Dataset& ds, const MatchStage& st, const Timings& t) {
  json r = report_header("match", cfg);
  r["dataset"] = dataset_json(ds);
  r["importance"] = importance_json(ds, st.importance);
  r["coarsening"] = binning_json(ds, st.view.binning);
  r["match"] = match_json(ds, st.match);
  r["timings"] = timings_json(t);
  return r;
}

inline json make_estimate_report(const RunConfig& cfg, const Dataset& ds, const TimResult& res) {
  json r = report_header("estimate", cfg);
  r["dataset"] = dataset_json(ds);
  r["importance"] = importance_json(ds, res.importance);
  r["coarsening"] = binning_json(ds, res.view.binning);
  r["match"] = match_json(ds, res.match, &res.refined);
  json per = json::array();
  for (const auto& s : res.estimate.per_stratum) {
    per.push_back({{"stratum_id", s.stratum_id},
                   {"cate", s.cate},
                   {"total_weight", s.total_weight},
                   {"n_treated", s.n_treated},
                   {"n_control", s.n_control}});
  }
  r["estimate"] = {{"overall_cate", res.estimate.overall},
                   {"naive_dim", res.estimate.naive_dim},
                   {"stratum_weighting",
                    cfg.stratum_weighting == StratumWeighting::Treated ? "treated" : "unweighted"},
                   {"t_fraction", res.match.t_fraction},
                   {"per_stratum", std::move(per)}};
  r["imbalance"] = {{"l1_pre", res.imbalance.l1_pre},
                    {"l1_post", res.imbalance.l1_post},
                    {"cells_occupied", res.imbalance.cells_occupied},
                    {"weighted_controls", cfg.weight_controls_by_score},
                    {"binning", binning_json(ds, res.imbalance.binning)}};
  r["warnings"] = res.warnings;
  r["timings"] = timings_json(res.timings);
  return r;
}

inline void write_per_stratum_csv(std::ostream& out, const CateEstimate& est, const std::vector<RefinedStratum>& refined) {
  out << "stratum_id,iteration,n_treated,n_control,total_weight,cate\n";
  out.precision(17);
  for (const auto& s : est.per_stratum) {
    out << s.stratum_id << ',' << refined[s.stratum_id].base.iteration << ',' << s.n_treated << ',' << s.n_control
        << ',' << s.total_weight << ',' << s.cate << '\n';
  }
}

// All pairwise Omega tables for the discrete covariates, for auditing.
inline json omega_dump_json(const Dataset& ds, const DiscreteDistanceModel& model) {
  json out = json::array();
  for (std::size_t j = 0; j < ds.k(); ++j) {
    if (ds.kind(j) != CovariateKind::Discrete) continue;
    const OmegaTable t = omega_table(model, j);
    json rows = json::array();
    for (int x = 0; x < t.levels; ++x) {
      std::vector<double> row(static_cast<std::size_t>(t.levels));
      for (int y = 0; y < t.levels; ++y) row[static_cast<std::size_t>(y)] = t(x, y);
      rows.push_back(row);
    }
    out.push_back({{"column", ds.column(j).name}, {"levels", ds.column(j).labels}, {"omega", std::move(rows)}});
  }
  return out;
}

inline json scenario_json(const ScenarioSpec& s) {
  return {{"scenario_id", s.scenario_id}, {"n", s.n},
          {"k_c", s.k_c},                 {"k_d", s.k_d},
          {"rho", s.rho},                 {"treat_coefs", s.treat_coefs},
          {"outcome_coefs", s.outcome_coefs}, {"treatment_effect", s.treatment_effect},
          {"noise_sigma", s.noise_sigma}, {"seed", s.seed}};
}

inline json summary_stat_json(const SummaryStat& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"lower_95_ci", s.lower_95}, {"upper_95_ci", s.upper_95}};
}

// Field names follow the published comparison tables: bias with its 95% CI,
// L1 of the matched sample, T_f; timing in its own block.
inline json benchmark_summary_json(const BenchmarkTable& t, unsigned threads) {
  const auto& s = t.summary;
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row = {{"replicate", r.replicate}, {"ok", r.ok}};
    if (r.ok) {
      row.update({{"cate", r.cate},
                  {"bias", r.bias},
                  {"naive_dim", r.naive_dim},
                  {"L1", r.l1_pre},
                  {"L1m", r.l1_post},
                  {"Tf", r.t_fraction},
                  {"n_treated", r.n_treated},
                  {"n_strata", r.n_strata}});
    } else {
      row["error"] = r.error;
    }
    rows.push_back(std::move(row));
  }
  std::vector<double> secs;
  for (const auto& r : t.rows) secs.push_back(r.seconds);
  return {{"schema_version", kReportSchemaVersion},
          {"report", "benchmark"},
          {"tool", tool_json()},
          {"seed", t.spec.seed},
          {"scenario", scenario_json(t.spec)},
          {"replicates", s.replicates},
          {"failed", s.failed},
          {"summary",
           {{"cate", summary_stat_json(s.cate)},
            {"bias", summary_stat_json(s.bias)},
            {"abs_bias", summary_stat_json(s.abs_bias)},
            {"naive_bias", summary_stat_json(s.naive_bias)},
            {"L1", summary_stat_json(s.l1_pre)},
            {"L1m", summary_stat_json(s.l1_post)},
            {"Tf", summary_stat_json(s.t_fraction)}}},
          {"rows", std::move(rows)},
          {"timings", {{"threads", threads}, {"mean_seconds", s.seconds.mean}, {"replicate_seconds", secs}}}};
}

inline void write_benchmark_csv(std::ostream& out, const BenchmarkTable& t) {
  out << "replicate,ok,cate,bias,naive_dim,L1,L1m,Tf,n_treated,n_strata,seconds,error\n";
  out.precision(17);
  for (const auto& r : t.rows) {
    out << r.replicate << ',' << (r.ok ? 1 : 0) << ',' << r.cate << ',' << r.bias << ',' << r.naive_dim << ','
        << r.l1_pre << ',' << r.l1_post << ',' << r.t_fraction << ',' << r.n_treated << ',' << r.n_strata << ','
        << r.seconds << ',' << detail::csv_quote(r.error) << '\n';
  }
}

}  // namespace tim
