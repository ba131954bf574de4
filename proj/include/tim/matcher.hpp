#pragma once

// Importance-ordered iterative exact matching on coarsened codes.
//
// Iteration u groups the still-unmatched treated units together with the
// control pool on the k - u most important columns. Every group holding at
// least one treated and one control unit becomes a stratum and its treated
// units leave the pool. The least important remaining column is then dropped
// and grouping repeats, down to zero columns.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "tim/dataset.hpp"
#include "tim/error.hpp"

namespace tim {

struct Stratum {
  std::size_t id = 0;
  std::vector<std::size_t> matched_columns;  // ascending column index
  std::vector<std::int32_t> signature;       // codes on matched_columns
  std::vector<std::size_t> dropped_columns;  // in drop order
  std::vector<std::size_t> treated_members;  // ascending row index
  std::vector<std::size_t> control_members;  // ascending row index
  std::size_t iteration = 0;                 // number of dropped columns
};

struct MatchResult {
  std::vector<Stratum> strata;
  std::vector<std::size_t> unmatched_treated;
  std::vector<std::size_t> unmatched_controls;  // controls in no stratum
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  double t_fraction = 0.0;

  std::size_t matched_treated() const noexcept { return n_treated - unmatched_treated.size(); }
};

struct MatchOptions {
  // When true a control stays in the pool after joining a stratum, so later
  // iterations may reuse it (it still joins at most one stratum per
  // iteration). When false matched controls are consumed.
  bool reuse_controls = true;
};

namespace detail {

struct CodeKeyHash {
  std::size_t operator()(const std::vector<std::int32_t>& key) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto c : key) {
      h ^= static_cast<std::uint32_t>(c);
      h *= 1099511628211ULL;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

inline MatchResult run_matching(const CoarsenedView& view, const std::vector<std::uint8_t>& treatment,
                                const std::vector<std::size_t>& order, const MatchOptions& options = {}) {
  const std::size_t n = view.n();
  const std::size_t k = view.k();
  if (treatment.size() != n) throw SchemaError("treatment vector does not align with coarsened view");
  {
    std::vector<bool> seen(k, false);
    if (order.size() != k) throw SchemaError("importance order is not a permutation of the columns");
    for (auto c : order) {
      if (c >= k || seen[c]) throw SchemaError("importance order is not a permutation of the columns");
      seen[c] = true;
    }
  }

  MatchResult result;
  std::vector<bool> in_pool(n, true);
  std::vector<bool> control_used(n, false);
  std::size_t treated_left = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (treatment[i]) ++treated_left;
  }
  result.n_treated = treated_left;
  result.n_control = n - treated_left;

  std::vector<std::size_t> active(order.begin(), order.end());
  std::vector<std::size_t> dropped;

  struct Group {
    std::vector<std::int32_t> key;
    std::vector<std::size_t> treated, controls;
  };

  for (std::size_t u = 0; treated_left > 0; ++u) {
    std::vector<std::size_t> cols = active;
    std::sort(cols.begin(), cols.end());

    std::unordered_map<std::vector<std::int32_t>, std::size_t, detail::CodeKeyHash> index;
    std::vector<Group> groups;
    std::vector<std::int32_t> key(cols.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_pool[i]) continue;
      for (std::size_t c = 0; c < cols.size(); ++c) key[c] = view.code(i, cols[c]);
      auto [it, inserted] = index.try_emplace(key, groups.size());
      if (inserted) groups.push_back({key, {}, {}});
      auto& g = groups[it->second];
      (treatment[i] ? g.treated : g.controls).push_back(i);
    }
    // Signature order makes stratum ids independent of hashing.
    std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) { return a.key < b.key; });

    for (auto& g : groups) {
      if (g.treated.empty() || g.controls.empty()) continue;
      Stratum s;
      s.id = result.strata.size();
      s.matched_columns = cols;
      s.signature = std::move(g.key);
      s.dropped_columns = dropped;
      s.iteration = u;
      for (auto i : g.treated) in_pool[i] = false;
      for (auto i : g.controls) {
        control_used[i] = true;
        if (!options.reuse_controls) in_pool[i] = false;
      }
      treated_left -= g.treated.size();
      s.treated_members = std::move(g.treated);
      s.control_members = std::move(g.controls);
      result.strata.push_back(std::move(s));
    }

    if (treated_left == 0 || active.empty()) break;
    dropped.push_back(active.back());
    active.pop_back();
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (treatment[i] && in_pool[i]) result.unmatched_treated.push_back(i);
    if (!treatment[i] && !control_used[i]) result.unmatched_controls.push_back(i);
  }
  result.t_fraction = result.n_treated == 0
                          ? 0.0
                          : static_cast<double>(result.matched_treated()) / static_cast<double>(result.n_treated);
  return result;
}

}  // namespace tim
