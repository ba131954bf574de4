#pragma once

// Multivariate L1 imbalance over a shared multidimensional histogram:
//   L1(f, g) = 1/2 * sum_cells |f_cell - g_cell|
// with f, g the relative frequencies of the two groups. Only occupied cells
// are stored, keyed by the tuple of per-column bin codes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <unordered_map>
#include <vector>

#include "tim/dataset.hpp"
#include "tim/error.hpp"
#include "tim/matcher.hpp"
#include "tim/refine.hpp"

namespace tim {

// Sturges equal-width bins on the pooled sample for continuous columns, one
// bin per level for discrete columns. Freeze it and reuse it post-match.
inline Binning default_binning(const Dataset& ds) { return make_binning(ds); }

namespace detail {

struct CellCounts {
  std::int64_t treated = 0;
  std::int64_t control = 0;
  double treated_w = 0.0;
  double control_w = 0.0;
};

using CellMap = std::unordered_map<std::vector<std::int32_t>, CellCounts, CodeKeyHash>;

inline std::vector<std::int32_t> cell_of(const CodeMatrix& codes, std::size_t row) {
  std::vector<std::int32_t> key(codes.cols());
  for (std::size_t j = 0; j < codes.cols(); ++j) key[j] = codes(row, j);
  return key;
}

}  // namespace detail

// Unweighted L1 from code tuples. Evaluated in integers as
//   sum |c_T * n_C - c_C * n_T| / (2 n_T n_C)
// so the result does not depend on cell iteration order.
inline double l1_from_codes(const CodeMatrix& codes, std::span<const std::size_t> group_a,
                            std::span<const std::size_t> group_b) {
  if (group_a.empty() || group_b.empty()) throw DegenerateDataError("L1 imbalance needs two non-empty groups");
  detail::CellMap cells;
  for (auto i : group_a) ++cells[detail::cell_of(codes, i)].treated;
  for (auto i : group_b) ++cells[detail::cell_of(codes, i)].control;
  const auto na = static_cast<std::int64_t>(group_a.size());
  const auto nb = static_cast<std::int64_t>(group_b.size());
  std::int64_t total = 0;
  for (const auto& [key, c] : cells) total += std::llabs(c.treated * nb - c.control * na);
  return static_cast<double>(total) / (2.0 * static_cast<double>(na) * static_cast<double>(nb));
}

// Weighted variant: each unit contributes its weight instead of 1.
inline double l1_from_codes_weighted(const CodeMatrix& codes, std::span<const std::size_t> group_a,
                                     std::span<const double> weight_a, std::span<const std::size_t> group_b,
                                     std::span<const double> weight_b) {
  if (group_a.empty() || group_b.empty()) throw DegenerateDataError("L1 imbalance needs two non-empty groups");
  detail::CellMap cells;
  double wa = 0.0, wb = 0.0;
  for (std::size_t p = 0; p < group_a.size(); ++p) {
    cells[detail::cell_of(codes, group_a[p])].treated_w += weight_a[p];
    wa += weight_a[p];
  }
  for (std::size_t p = 0; p < group_b.size(); ++p) {
    cells[detail::cell_of(codes, group_b[p])].control_w += weight_b[p];
    wb += weight_b[p];
  }
  if (!(wa > 0.0) || !(wb > 0.0)) throw DegenerateDataError("L1 imbalance needs positive group weight");
  // Sum in a fixed order for reproducibility.
  std::vector<std::pair<std::vector<std::int32_t>, detail::CellCounts>> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  double total = 0.0;
  for (const auto& [key, c] : sorted) total += std::abs(c.treated_w / wa - c.control_w / wb);
  return 0.5 * total;
}

inline double compute_l1(const Dataset& ds, std::span<const std::size_t> treated_rows,
                         std::span<const std::size_t> control_rows, const Binning& binning) {
  return l1_from_codes(apply_binning(ds, binning), treated_rows, control_rows);
}

inline std::size_t occupied_cells(const CodeMatrix& codes) {
  detail::CellMap cells;
  for (std::size_t i = 0; i < codes.rows(); ++i) ++cells[detail::cell_of(codes, i)].treated;
  return cells.size();
}

struct ImbalanceOptions {
  // Weight matched controls by their inverse scores. Exploratory; the
  // reported L1 of the matched sample is unweighted by default.
  bool weight_controls_by_score = false;
};

struct ImbalanceReport {
  double l1_pre = 0.0;
  double l1_post = 0.0;
  std::size_t cells_occupied = 0;
  Binning binning;
};

// Matched treated and matched controls pooled across strata; a control
// reused by several strata counts once (or, weighted, with its summed score).
inline ImbalanceReport imbalance_report(const Dataset& ds, const std::vector<RefinedStratum>& refined, const Binning& binning,
                                        const ImbalanceOptions& options = {}) {
  ImbalanceReport rep;
  rep.binning = binning;
  const CodeMatrix codes = apply_binning(ds, binning);
  const auto treated = ds.treated_indices();
  const auto controls = ds.control_indices();
  rep.l1_pre = l1_from_codes(codes, treated, controls);
  rep.cells_occupied = occupied_cells(codes);

  std::vector<double> control_weight(ds.n(), 0.0);
  std::vector<bool> is_matched(ds.n(), false);
  for (const auto& r : refined) {
    for (auto t : r.base.treated_members) is_matched[t] = true;
    for (std::size_t j = 0; j < r.base.control_members.size(); ++j) {
      is_matched[r.base.control_members[j]] = true;
      control_weight[r.base.control_members[j]] += r.inverse_score[j];
    }
  }
  std::vector<std::size_t> mt, mc;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (!is_matched[i]) continue;
    (ds.treated(i) ? mt : mc).push_back(i);
  }
  if (!options.weight_controls_by_score) {
    rep.l1_post = l1_from_codes(codes, mt, mc);
  } else {
    std::vector<double> wt(mt.size(), 1.0), wc;
    wc.reserve(mc.size());
    for (auto c : mc) wc.push_back(control_weight[c]);
    rep.l1_post = l1_from_codes_weighted(codes, mt, wt, mc, wc);
  }
  return rep;
}

}  // namespace tim
