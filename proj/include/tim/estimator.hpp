#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "tim/error.hpp"
#include "tim/refine.hpp"

namespace tim {

enum class StratumWeighting {
  Unweighted,  // plain mean of stratum CATEs (default)
  Treated,     // weight each stratum by its treated count (ATT-style)
};

struct StratumEstimate {
  std::size_t stratum_id = 0;
  double cate = 0.0;
  double total_weight = 0.0;  // sum of inverse scores
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
};

struct CateEstimate {
  std::vector<StratumEstimate> per_stratum;  // sorted by stratum id
  double overall = 0.0;
  double naive_dim = 0.0;
};

// Unadjusted difference in mean outcomes, treated minus control.
inline double naive_difference_in_means(const std::vector<double>& outcome,
                                        const std::vector<std::uint8_t>& treatment) {
  double st = 0, sc = 0;
  std::size_t nt = 0, nc = 0;
  for (std::size_t i = 0; i < outcome.size(); ++i) {
    if (treatment[i]) {
      st += outcome[i];
      ++nt;
    } else {
      sc += outcome[i];
      ++nc;
    }
  }
  if (nt == 0 || nc == 0) throw DegenerateDataError("difference in means needs both groups");
  return st / static_cast<double>(nt) - sc / static_cast<double>(nc);
}

// Stratum CATE: sum_j I_j (mean treated Y - Y_j) / sum_j I_j over controls j.
inline StratumEstimate estimate_stratum(const RefinedStratum& r, const std::vector<double>& outcome) {
  const auto& s = r.base;
  if (s.treated_members.empty() || s.control_members.empty()) {
    throw EstimationError("stratum " + std::to_string(s.id) + " lacks a treated or control unit");
  }
  double yt = 0.0;
  for (auto i : s.treated_members) yt += outcome.at(i);
  yt /= static_cast<double>(s.treated_members.size());

  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < s.control_members.size(); ++j) {
    const double w = r.inverse_score.at(j);
    num += w * (yt - outcome.at(s.control_members[j]));
    den += w;
  }
  if (!(den > 0.0)) {
    num = 0.0;
    for (auto c : s.control_members) num += yt - outcome.at(c);
    den = static_cast<double>(s.control_members.size());
  }
  return {s.id, num / den, den, s.treated_members.size(), s.control_members.size()};
}

inline CateEstimate estimate_cate(const std::vector<RefinedStratum>& refined, const std::vector<double>& outcome,
                                  const std::vector<std::uint8_t>& treatment,
                                  StratumWeighting weighting = StratumWeighting::Unweighted) {
  if (refined.empty()) throw EstimationError("no matched strata");
  CateEstimate est;
  est.per_stratum.reserve(refined.size());
  for (const auto& r : refined) est.per_stratum.push_back(estimate_stratum(r, outcome));
  std::sort(est.per_stratum.begin(), est.per_stratum.end(),
            [](const StratumEstimate& a, const StratumEstimate& b) { return a.stratum_id < b.stratum_id; });

  double num = 0.0, den = 0.0;
  for (const auto& s : est.per_stratum) {
    const double w = weighting == StratumWeighting::Treated ? static_cast<double>(s.n_treated) : 1.0;
    num += w * s.cate;
    den += w;
  }
  est.overall = num / den;
  est.naive_dim = naive_difference_in_means(outcome, treatment);
  return est;
}

}  // namespace tim
