#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "support.hpp"
#include "tim/discrete_distance.hpp"

using namespace tim;
using tim::test::code_matrix;

namespace {

// Oracle: P(v | x) by direct counting, then the maximum over every subset w
// of the co-attribute's values of P(w|x) + P(not w|y) - 1.
double brute_delta(const CodeMatrix& m, std::size_t target, std::size_t co, int x, int y) {
  const int lv = m.cardinality[co];
  auto cond = [&](int value) {
    std::vector<double> p(static_cast<std::size_t>(lv), 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (m(i, target) != value) continue;
      ++count;
      p[static_cast<std::size_t>(m(i, co))] += 1.0;
    }
    for (auto& v : p) v = count ? v / static_cast<double>(count) : 1.0 / lv;
    return p;
  };
  const auto px = cond(x), py = cond(y);
  double best = -1.0;
  for (unsigned mask = 0; mask < (1u << lv); ++mask) {
    double in_x = 0.0, out_y = 0.0;
    for (int v = 0; v < lv; ++v) {
      if (mask & (1u << v)) in_x += px[static_cast<std::size_t>(v)];
      else out_y += py[static_cast<std::size_t>(v)];
    }
    best = std::max(best, in_x + out_y - 1.0);
  }
  return best;
}

CodeMatrix random_matrix(std::mt19937_64& rng, std::size_t max_rows, std::size_t max_attrs, int max_levels) {
  std::uniform_int_distribution<std::size_t> rows(2, max_rows), attrs(2, max_attrs);
  std::uniform_int_distribution<int> levels(2, max_levels);
  const std::size_t n = rows(rng), k = attrs(rng);
  CodeMatrix m;
  for (std::size_t a = 0; a < k; ++a) {
    const int lv = levels(rng);
    std::uniform_int_distribution<int> code(0, lv - 1);
    std::vector<std::int32_t> col(n);
    for (auto& c : col) c = code(rng);
    m.columns.push_back(col);
    m.cardinality.push_back(lv);
  }
  return m;
}

}  // namespace

TEST(DiscreteModel, PerfectlyCorrelatedColumns) {
  const auto m = build_model(code_matrix({{0, 1, 1, 0, 1}, {0, 1, 1, 0, 1}}));
  const auto& c = m.conditional(0, 1);
  EXPECT_EQ(c(1, 1), 1.0);
  EXPECT_EQ(c(1, 0), 0.0);
  EXPECT_EQ(c(0, 0), 1.0);
  EXPECT_EQ(delta_ij(m, 0, 1, 0, 1), 1.0);
  EXPECT_EQ(omega(m, 0, 0, 1), 1.0);
}

TEST(DiscreteModel, IndependentColumnsNearHalf) {
  std::mt19937_64 rng(17);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::int32_t> a(10000), b(10000);
  for (auto& v : a) v = coin(rng);
  for (auto& v : b) v = coin(rng);
  const auto m = build_model(code_matrix({a, b}));
  for (std::size_t t : {0u, 1u}) {
    const auto& c = m.conditional(t, 1 - t);
    for (int x = 0; x < 2; ++x)
      for (int v = 0; v < 2; ++v) EXPECT_NEAR(c(x, v), 0.5, 0.03);
  }
  EXPECT_LT(omega(m, 0, 0, 1), 0.03);
}

TEST(DiscreteModel, PairTableCountAndRowSums) {
  std::mt19937_64 rng(1);
  const CodeMatrix cm = random_matrix(rng, 30, 3, 4);
  const auto m = build_model(cm);
  std::size_t tables = 0;
  for (std::size_t t = 0; t < m.k_total(); ++t) {
    for (std::size_t c = 0; c < m.k_total(); ++c) {
      if (t == c) {
        EXPECT_THROW(m.conditional(t, c), SchemaError);
        continue;
      }
      ++tables;
      const auto& tab = m.conditional(t, c);
      for (int x = 0; x < tab.target_levels; ++x) {
        double s = 0.0;
        for (int v = 0; v < tab.co_levels; ++v) s += tab(x, v);
        EXPECT_NEAR(s, 1.0, 1e-9);
      }
    }
  }
  EXPECT_EQ(tables, m.k_total() * (m.k_total() - 1));
}

TEST(DiscreteModel, ThreeColumnsSixTables) {
  const auto m = build_model(code_matrix({{0, 1, 0}, {1, 1, 0}, {0, 0, 1}}));
  EXPECT_EQ(m.k_total(), 3u);
  int tables = 0;
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t c = 0; c < 3; ++c)
      if (t != c) tables += m.conditional(t, c).prob.size() > 0;
  EXPECT_EQ(tables, 6);
}

TEST(Delta, IdentityAndDisjoint) {
  const auto m = build_model(code_matrix({{0, 0, 1, 1}, {0, 0, 1, 1}, {0, 1, 0, 1}}));
  EXPECT_EQ(delta_ij(m, 0, 1, 1, 1), 0.0);
  EXPECT_EQ(delta_ij(m, 0, 1, 0, 1), 1.0);
  EXPECT_EQ(delta_ij(m, 0, 2, 0, 1), 0.0);
  EXPECT_DOUBLE_EQ(omega(m, 0, 0, 1), 0.5);
  EXPECT_THROW(delta_ij(m, 0, 1, 0, 2), SchemaError);
  EXPECT_THROW(omega(m, 0, -1, 0), SchemaError);
}

TEST(Delta, ClosedFormMatchesSubsetEnumeration) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const CodeMatrix cm = random_matrix(rng, 30, 4, 4);
    const auto m = build_model(cm);
    for (std::size_t t = 0; t < cm.cols(); ++t) {
      for (std::size_t c = 0; c < cm.cols(); ++c) {
        if (t == c) continue;
        for (int x = 0; x < cm.cardinality[t]; ++x)
          for (int y = 0; y < cm.cardinality[t]; ++y)
            ASSERT_NEAR(delta_ij(m, t, c, x, y), brute_delta(cm, t, c, x, y), 1e-12);
      }
    }
  }
}

TEST(Omega, SymmetryIdentityRange) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const CodeMatrix cm = random_matrix(rng, 30, 4, 4);
    const auto m = build_model(cm);
    for (std::size_t t = 0; t < cm.cols(); ++t) {
      for (int x = 0; x < cm.cardinality[t]; ++x) {
        EXPECT_EQ(omega(m, t, x, x), 0.0);
        for (int y = 0; y < cm.cardinality[t]; ++y) {
          const double o = omega(m, t, x, y);
          EXPECT_EQ(o, omega(m, t, y, x));
          EXPECT_GE(o, 0.0);
          EXPECT_LE(o, 1.0);
        }
      }
    }
  }
}

TEST(Omega, AveragesOverCoAttributes) {
  std::mt19937_64 rng(8);
  const CodeMatrix cm = random_matrix(rng, 25, 4, 3);
  const auto m = build_model(cm);
  const std::size_t k = cm.cols();
  for (int x = 0; x < cm.cardinality[0]; ++x) {
    for (int y = 0; y < cm.cardinality[0]; ++y) {
      double s = 0.0;
      for (std::size_t j = 1; j < k; ++j) s += brute_delta(cm, 0, j, x, y);
      EXPECT_NEAR(omega(m, 0, x, y), s / static_cast<double>(k - 1), 1e-12);
    }
  }
}

TEST(Omega, SingleAttributeIndicatorFallback) {
  const auto m = build_model(code_matrix({{0, 1, 2, 1}}));
  ASSERT_FALSE(m.warnings().empty());
  EXPECT_EQ(omega(m, 0, 0, 2), 1.0);
  EXPECT_EQ(omega(m, 0, 1, 1), 0.0);
}

TEST(Omega, ZeroSupportValueIsUniformAndWarned) {
  CodeMatrix cm = code_matrix({{0, 0, 2, 2}, {0, 1, 1, 0}});
  cm.cardinality[0] = 3;  // value 1 never occurs
  const auto m = build_model(cm);
  EXPECT_FALSE(m.warnings().empty());
  const auto& c = m.conditional(0, 1);
  EXPECT_EQ(c(1, 0), 0.5);
  EXPECT_EQ(c(1, 1), 0.5);
}

TEST(Omega, TableMatchesPointwise) {
  std::mt19937_64 rng(9);
  const CodeMatrix cm = random_matrix(rng, 30, 3, 4);
  const auto m = build_model(cm);
  for (std::size_t t = 0; t < cm.cols(); ++t) {
    const OmegaTable tab = omega_table(m, t);
    for (int x = 0; x < tab.levels; ++x)
      for (int y = 0; y < tab.levels; ++y) EXPECT_EQ(tab(x, y), omega(m, t, x, y));
  }
}

TEST(DiscreteModel, RowOrderIndependent) {
  std::mt19937_64 rng(10);
  CodeMatrix cm = random_matrix(rng, 30, 3, 3);
  const auto m1 = build_model(cm);
  std::vector<std::size_t> perm(cm.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  CodeMatrix shuffled = cm;
  for (std::size_t a = 0; a < cm.cols(); ++a)
    for (std::size_t i = 0; i < cm.rows(); ++i) shuffled.columns[a][i] = cm.columns[a][perm[i]];
  const auto m2 = build_model(shuffled);
  for (std::size_t t = 0; t < cm.cols(); ++t)
    for (std::size_t c = 0; c < cm.cols(); ++c)
      if (t != c) EXPECT_EQ(m1.conditional(t, c).prob, m2.conditional(t, c).prob);
}
