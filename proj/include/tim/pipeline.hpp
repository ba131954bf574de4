#pragma once

// Full matching pipeline: importance -> coarsening -> iterative exact
// matching -> refinement -> CATE -> imbalance diagnostics.

#include <chrono>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "tim/dataset.hpp"
#include "tim/discrete_distance.hpp"
#include "tim/estimator.hpp"
#include "tim/imbalance.hpp"
#include "tim/importance.hpp"
#include "tim/matcher.hpp"
#include "tim/refine.hpp"

namespace tim {

struct PipelineOptions {
  std::map<std::size_t, int> coarsening_bins;  // column -> bins for match grouping
  std::map<std::size_t, int> imbalance_bins;   // column -> bins for the L1 histogram
  LogisticOptions logistic;
  MatchOptions matching;
  RefineOptions refine;
  StratumWeighting weighting = StratumWeighting::Unweighted;
  ImbalanceOptions imbalance;
  ImportanceMethod importance;  // empty: regression importance
};

struct Timings {
  double importance = 0.0;
  double coarsen = 0.0;
  double match = 0.0;
  double refine = 0.0;
  double estimate = 0.0;
  double imbalance = 0.0;
  double total = 0.0;
};

struct MatchStage {
  ImportanceVector importance;
  CoarsenedView view;
  MatchResult match;
};

struct TimResult {
  ImportanceVector importance;
  CoarsenedView view;
  MatchResult match;
  std::vector<RefinedStratum> refined;
  CateEstimate estimate;
  ImbalanceReport imbalance;
  std::vector<std::string> warnings;
  Timings timings;
};

namespace detail {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace detail

inline MatchStage run_match_stage(const Dataset& ds, const PipelineOptions& opt, Timings* timings = nullptr) {
  detail::Stopwatch sw;
  MatchStage st;
  st.importance = opt.importance ? opt.importance(ds) : regression_importance(ds, opt.logistic);
  const double t_imp = sw.lap();
  st.view = coarsen(ds, opt.coarsening_bins);
  const double t_coarse = sw.lap();
  st.match = run_matching(st.view, ds.treatment(), st.importance.order, opt.matching);
  const double t_match = sw.lap();
  if (timings) {
    timings->importance = t_imp;
    timings->coarsen = t_coarse;
    timings->match = t_match;
  }
  if (st.match.strata.empty()) throw EstimationError("no matched strata");
  return st;
}

inline TimResult run_tim(const Dataset& ds, const PipelineOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  TimResult r;
  MatchStage st = run_match_stage(ds, opt, &r.timings);
  r.importance = std::move(st.importance);
  r.view = std::move(st.view);
  r.match = std::move(st.match);
  r.warnings = r.importance.warnings;

  detail::Stopwatch sw;
  const DiscreteDistanceModel dmodel = build_model(discretize_for_distance(ds, r.view));
  for (const auto& w : dmodel.warnings()) r.warnings.push_back("discrete distance: " + w);
  r.refined = refine_all(r.match, ds, dmodel, opt.refine);
  r.timings.refine = sw.lap();

  r.estimate = estimate_cate(r.refined, ds.outcome(), ds.treatment(), opt.weighting);
  r.timings.estimate = sw.lap();

  const Binning binning = opt.imbalance_bins.empty() ? default_binning(ds) : make_binning(ds, opt.imbalance_bins);
  r.imbalance = imbalance_report(ds, r.refined, binning, opt.imbalance);
  r.timings.imbalance = sw.lap();
  r.timings.total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace tim
