#pragma once

// Distribution-aware distance between two values of a discrete attribute,
// learned from co-occurrence with every other attribute of the (fully
// discretised) dataset.
//
// For target attribute A_i with values x, y and co-attribute A_j:
//   delta_ij(x, y) = max_w [P(w | x) + P(not w | y)] - 1
// where w ranges over subsets of A_j's values. The maximiser is
// w = {v : P(v|x) >= P(v|y)}, giving sum_v max(P(v|x) - P(v|y), 0).
//   Omega(x, y) = 1/(k-1) * sum_{j != i} delta_ij(x, y)

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tim/dataset.hpp"
#include "tim/error.hpp"

namespace tim {

class DiscreteDistanceModel {
 public:
  // Row-normalised P(co-value | target-value) for one ordered attribute pair.
  struct Conditional {
    int target_levels = 0;
    int co_levels = 0;
    std::vector<double> prob;  // target_levels x co_levels, row-major

    double operator()(int x, int v) const { return prob[static_cast<std::size_t>(x) * co_levels + v]; }
  };

  std::size_t k_total() const noexcept { return levels_.size(); }
  int levels(std::size_t attr) const { return levels_.at(attr); }
  const std::vector<int>& attribute_levels() const noexcept { return levels_; }

  // Number of rows holding each value of an attribute.
  const std::vector<std::size_t>& support(std::size_t attr) const { return support_.at(attr); }

  const Conditional& conditional(std::size_t target, std::size_t co) const {
    if (target == co || target >= k_total() || co >= k_total()) {
      throw SchemaError("invalid attribute pair for conditional table");
    }
    return tables_[target * k_total() + co];
  }

  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  friend DiscreteDistanceModel build_model(const CodeMatrix& codes);

 private:
  std::vector<int> levels_;
  std::vector<std::vector<std::size_t>> support_;
  std::vector<Conditional> tables_;  // k*k, diagonal unused
  std::vector<std::string> warnings_;
};

// Pairwise conditional frequency tables over the pooled dataset. A target
// value that never occurs gets a uniform conditional.
inline DiscreteDistanceModel build_model(const CodeMatrix& codes) {
  if (codes.cols() == 0 || codes.rows() == 0) throw SchemaError("discrete model needs a non-empty matrix");
  const std::size_t k = codes.cols();
  const std::size_t n = codes.rows();

  DiscreteDistanceModel m;
  m.levels_.resize(k);
  m.support_.resize(k);
  for (std::size_t a = 0; a < k; ++a) {
    int levels = codes.cardinality.size() == k ? codes.cardinality[a] : 0;
    for (auto c : codes.columns[a]) {
      if (c < 0) throw SchemaError("negative code in discrete matrix");
      levels = std::max(levels, c + 1);
    }
    m.levels_[a] = std::max(levels, 1);
    m.support_[a].assign(static_cast<std::size_t>(m.levels_[a]), 0);
    for (auto c : codes.columns[a]) ++m.support_[a][static_cast<std::size_t>(c)];
    for (int x = 0; x < m.levels_[a]; ++x) {
      if (m.support_[a][static_cast<std::size_t>(x)] == 0) {
        m.warnings_.push_back("attribute " + std::to_string(a) + " value " + std::to_string(x) +
                              " never occurs; its conditionals are taken as uniform");
      }
    }
  }

  if (k == 1) m.warnings_.push_back("single attribute: Omega falls back to the indicator distance");

  m.tables_.resize(k * k);
  std::vector<std::size_t> counts;
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t c = 0; c < k; ++c) {
      if (t == c) continue;
      auto& tab = m.tables_[t * k + c];
      tab.target_levels = m.levels_[t];
      tab.co_levels = m.levels_[c];
      counts.assign(static_cast<std::size_t>(tab.target_levels) * tab.co_levels, 0);
      const auto& tc = codes.columns[t];
      const auto& cc = codes.columns[c];
      for (std::size_t i = 0; i < n; ++i) {
        ++counts[static_cast<std::size_t>(tc[i]) * tab.co_levels + cc[i]];
      }
      tab.prob.resize(counts.size());
      for (int x = 0; x < tab.target_levels; ++x) {
        const std::size_t s = m.support_[t][static_cast<std::size_t>(x)];
        for (int v = 0; v < tab.co_levels; ++v) {
          const std::size_t cell = static_cast<std::size_t>(x) * tab.co_levels + v;
          tab.prob[cell] = s == 0 ? 1.0 / tab.co_levels
                                  : static_cast<double>(counts[cell]) / static_cast<double>(s);
        }
      }
    }
  }
  return m;
}

inline double delta_ij(const DiscreteDistanceModel& model, std::size_t target, std::size_t co, int x,
                       int y) {
  const int lv = model.levels(target);
  if (x < 0 || y < 0 || x >= lv || y >= lv) {
    throw SchemaError("code out of range for attribute " + std::to_string(target));
  }
  if (x == y) return 0.0;
  const auto& tab = model.conditional(target, co);
  // Both rows sum to one, so sum_v max(p - q, 0) = 1/2 sum_v |p - q|; the
  // absolute form is bitwise symmetric in (x, y).
  double d = 0.0;
  for (int v = 0; v < tab.co_levels; ++v) d += std::abs(tab(x, v) - tab(y, v));
  return std::clamp(0.5 * d, 0.0, 1.0);
}

// With a single attribute there is nothing to contrast against; the
// indicator distance is used instead.
inline double omega(const DiscreteDistanceModel& model, std::size_t target, int x, int y) {
  const std::size_t k = model.k_total();
  if (target >= k) throw SchemaError("attribute index out of range");
  if (k == 1) {
    const int lv = model.levels(target);
    if (x < 0 || y < 0 || x >= lv || y >= lv) throw SchemaError("code out of range");
    return x == y ? 0.0 : 1.0;
  }
  if (x == y) {
    delta_ij(model, target, target == 0 ? 1 : 0, x, y);  // range check
    return 0.0;
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j != target) sum += delta_ij(model, target, j, x, y);
  }
  return std::clamp(sum / static_cast<double>(k - 1), 0.0, 1.0);
}

// Dense levels x levels table of Omega for one attribute.
struct OmegaTable {
  int levels = 0;
  std::vector<double> values;

  double operator()(int x, int y) const { return values[static_cast<std::size_t>(x) * levels + y]; }
};

inline OmegaTable omega_table(const DiscreteDistanceModel& model, std::size_t target) {
  OmegaTable t;
  t.levels = model.levels(target);
  t.values.assign(static_cast<std::size_t>(t.levels) * t.levels, 0.0);
  for (int x = 0; x < t.levels; ++x) {
    for (int y = x + 1; y < t.levels; ++y) {
      const double d = omega(model, target, x, y);
      t.values[static_cast<std::size_t>(x) * t.levels + y] = d;
      t.values[static_cast<std::size_t>(y) * t.levels + x] = d;
    }
  }
  return t;
}

}  // namespace tim
