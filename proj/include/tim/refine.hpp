#pragma once

// Per-stratum refinement over the dropped covariates: a mixed distance from
// each control to the stratum's treated units, turned into an inverse
// min-max score (1 for the closest control, 0 for the farthest).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "tim/dataset.hpp"
#include "tim/discrete_distance.hpp"
#include "tim/matcher.hpp"

namespace tim {

struct RefineOptions {
  // Min-max scale continuous columns to [0,1] before squaring differences so
  // the continuous and Omega terms share a scale. Off uses raw values.
  bool normalize_continuous = true;
};

struct RefinedStratum {
  Stratum base;
  // Aligned with base.control_members.
  std::vector<double> continuous_distance;
  std::vector<double> discrete_distance;
  std::vector<double> control_distance;  // continuous + discrete
  std::vector<double> inverse_score;
};

// Everything refinement needs from the dataset, computed once and shared
// read-only across strata.
struct DistanceContext {
  std::vector<CovariateKind> kinds;
  std::vector<std::vector<double>> continuous;  // per column; empty for discrete
  std::vector<std::vector<std::int32_t>> codes;  // per column; empty for continuous
  std::vector<OmegaTable> omega;                 // per column; empty for continuous
};

inline DistanceContext make_distance_context(const Dataset& ds, const DiscreteDistanceModel& dmodel,
                                             const RefineOptions& options = {}) {
  if (dmodel.k_total() != ds.k()) throw SchemaError("discrete model was not built from this dataset");
  DistanceContext ctx;
  ctx.kinds.resize(ds.k());
  ctx.continuous.resize(ds.k());
  ctx.codes.resize(ds.k());
  ctx.omega.resize(ds.k());
  for (std::size_t j = 0; j < ds.k(); ++j) {
    ctx.kinds[j] = ds.kind(j);
    if (ds.kind(j) == CovariateKind::Continuous) {
      ctx.continuous[j] = options.normalize_continuous ? ds.normalized(j) : ds.column(j).values;
    } else {
      ctx.codes[j].resize(ds.n());
      for (std::size_t i = 0; i < ds.n(); ++i) ctx.codes[j][i] = ds.code(i, j);
      ctx.omega[j] = omega_table(dmodel, j);
    }
  }
  return ctx;
}

// I = 1 - (d - min) / (max - min); all ones when the distances do not vary.
inline std::vector<double> inverse_min_max(const std::vector<double>& distance) {
  std::vector<double> score(distance.size(), 1.0);
  if (distance.empty()) return score;
  const auto [lo, hi] = std::minmax_element(distance.begin(), distance.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return score;
  for (std::size_t i = 0; i < distance.size(); ++i) {
    score[i] = std::clamp(1.0 - (distance[i] - *lo) / range, 0.0, 1.0);
  }
  return score;
}

// A control's distance is the mean over the stratum's treated units of
//   sum_{dropped continuous c} (x_t - x_j)^2 + sum_{dropped discrete d} Omega(x_t, x_j)^2.
// Both terms are evaluated from per-column treated summaries, so the cost is
// linear in the stratum size.
inline RefinedStratum refine_stratum(const Stratum& s, const DistanceContext& ctx) {
  RefinedStratum r;
  r.base = s;
  const std::size_t mc = s.control_members.size();
  const double mt = static_cast<double>(s.treated_members.size());
  r.continuous_distance.assign(mc, 0.0);
  r.discrete_distance.assign(mc, 0.0);

  for (std::size_t col : s.dropped_columns) {
    if (ctx.kinds[col] == CovariateKind::Continuous) {
      const auto& x = ctx.continuous[col];
      double mean = 0.0;
      for (auto t : s.treated_members) mean += x[t];
      mean /= mt;
      double var = 0.0;
      for (auto t : s.treated_members) var += (x[t] - mean) * (x[t] - mean);
      var /= mt;
      for (std::size_t j = 0; j < mc; ++j) {
        const double d = x[s.control_members[j]] - mean;
        r.continuous_distance[j] += d * d + var;
      }
    } else {
      const auto& code = ctx.codes[col];
      const auto& om = ctx.omega[col];
      std::vector<double> share(static_cast<std::size_t>(om.levels), 0.0);
      for (auto t : s.treated_members) share[static_cast<std::size_t>(code[t])] += 1.0;
      for (auto& v : share) v /= mt;
      // Mean squared Omega from each level to the treated units.
      std::vector<double> to_treated(static_cast<std::size_t>(om.levels), 0.0);
      for (int y = 0; y < om.levels; ++y) {
        double acc = 0.0;
        for (int x = 0; x < om.levels; ++x) {
          if (share[static_cast<std::size_t>(x)] > 0.0) acc += share[static_cast<std::size_t>(x)] * om(x, y) * om(x, y);
        }
        to_treated[static_cast<std::size_t>(y)] = acc;
      }
      for (std::size_t j = 0; j < mc; ++j) {
        r.discrete_distance[j] += to_treated[static_cast<std::size_t>(code[s.control_members[j]])];
      }
    }
  }

  r.control_distance.resize(mc);
  for (std::size_t j = 0; j < mc; ++j) r.control_distance[j] = r.continuous_distance[j] + r.discrete_distance[j];
  r.inverse_score = s.dropped_columns.empty() ? std::vector<double>(mc, 1.0) : inverse_min_max(r.control_distance);
  return r;
}

inline RefinedStratum refine_stratum(const Stratum& s, const Dataset& ds, const DiscreteDistanceModel& dmodel,
                                     const RefineOptions& options = {}) {
  return refine_stratum(s, make_distance_context(ds, dmodel, options));
}

inline std::vector<RefinedStratum> refine_all(const MatchResult& match, const Dataset& ds,
                                              const DiscreteDistanceModel& dmodel, const RefineOptions& options = {}) {
  const DistanceContext ctx = make_distance_context(ds, dmodel, options);
  std::vector<RefinedStratum> out;
  out.reserve(match.strata.size());
  for (const auto& s : match.strata) out.push_back(refine_stratum(s, ctx));
  return out;
}

}  // namespace tim
