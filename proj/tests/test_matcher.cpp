#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "support.hpp"
#include "tim/pipeline.hpp"
#include "tim/simulate.hpp"

using namespace tim;

namespace {

CoarsenedView view_of(const std::vector<std::vector<std::int32_t>>& columns) {
  CoarsenedView v;
  v.codes = test::code_matrix(columns);
  return v;
}

void check_invariants(const CoarsenedView& view, const std::vector<std::uint8_t>& t, const MatchResult& r,
                      bool reuse) {
  const std::size_t k = view.k();
  std::set<std::size_t> seen_treated;
  std::map<std::size_t, std::set<std::size_t>> controls_by_iteration;
  std::set<std::size_t> all_controls;
  std::size_t matched = 0;
  std::size_t last_iteration = 0;
  for (const auto& s : r.strata) {
    ASSERT_FALSE(s.treated_members.empty());
    ASSERT_FALSE(s.control_members.empty());
    EXPECT_GE(s.iteration, last_iteration);
    last_iteration = s.iteration;
    EXPECT_EQ(s.dropped_columns.size(), s.iteration);
    EXPECT_EQ(s.matched_columns.size() + s.dropped_columns.size(), k);
    std::set<std::size_t> cols(s.matched_columns.begin(), s.matched_columns.end());
    for (auto d : s.dropped_columns) EXPECT_TRUE(cols.insert(d).second);
    EXPECT_EQ(cols.size(), k);
    for (auto i : s.treated_members) {
      EXPECT_TRUE(t[i]);
      EXPECT_TRUE(seen_treated.insert(i).second) << "treated unit in two strata";
    }
    for (auto i : s.control_members) {
      EXPECT_FALSE(t[i]);
      EXPECT_TRUE(controls_by_iteration[s.iteration].insert(i).second);
      if (!reuse) {
        EXPECT_TRUE(all_controls.insert(i).second) << "control consumed twice";
      }
    }
    // Exactness on the matched columns.
    std::vector<std::size_t> members = s.treated_members;
    members.insert(members.end(), s.control_members.begin(), s.control_members.end());
    for (auto i : members)
      for (std::size_t c = 0; c < s.matched_columns.size(); ++c)
        EXPECT_EQ(view.code(i, s.matched_columns[c]), s.signature[c]);
    matched += s.treated_members.size();
  }
  EXPECT_EQ(matched + r.unmatched_treated.size(), r.n_treated);
  EXPECT_GE(r.t_fraction, 0.0);
  EXPECT_LE(r.t_fraction, 1.0);
}

}  // namespace

TEST(Matcher, ExactDuplicate) {
  const auto v = view_of({{1, 1}, {2, 2}});
  const MatchResult r = run_matching(v, {1, 0}, {0, 1});
  ASSERT_EQ(r.strata.size(), 1u);
  EXPECT_EQ(r.strata[0].iteration, 0u);
  EXPECT_TRUE(r.strata[0].dropped_columns.empty());
  EXPECT_EQ(r.t_fraction, 1.0);
}

TEST(Matcher, ForcedSingleDrop) {
  // Treated (1,2) vs control (1,3), column 1 least important.
  const auto v = view_of({{1, 1}, {2, 3}});
  const MatchResult r = run_matching(v, {1, 0}, {0, 1});
  ASSERT_EQ(r.strata.size(), 1u);
  EXPECT_EQ(r.strata[0].iteration, 1u);
  EXPECT_EQ(r.strata[0].matched_columns, std::vector<std::size_t>{0});
  EXPECT_EQ(r.strata[0].dropped_columns, std::vector<std::size_t>{1});
  EXPECT_EQ(r.t_fraction, 1.0);
}

TEST(Matcher, DropOrderFollowsImportance) {
  // Column 0 least important now: the pair agrees on column 1 only.
  const auto v = view_of({{1, 2}, {5, 5}});
  const MatchResult r = run_matching(v, {1, 0}, {1, 0});
  ASSERT_EQ(r.strata.size(), 1u);
  EXPECT_EQ(r.strata[0].dropped_columns, std::vector<std::size_t>{0});
  EXPECT_EQ(r.strata[0].signature, std::vector<std::int32_t>{5});
}

TEST(Matcher, ZeroColumnsCatchesEveryone) {
  const auto v = view_of({{0, 1, 2, 3}, {0, 1, 2, 3}});
  const MatchResult r = run_matching(v, {1, 0, 1, 0}, {0, 1});
  ASSERT_EQ(r.strata.size(), 1u);
  EXPECT_EQ(r.strata[0].iteration, 2u);
  EXPECT_TRUE(r.strata[0].matched_columns.empty());
  EXPECT_EQ(r.t_fraction, 1.0);
}

TEST(Matcher, WithoutReuseCanExhaustControls) {
  // Both treated sit in different cells; the only control is taken by the
  // first, so the second stays unmatched.
  const auto v = view_of({{0, 1, 0}});
  MatchOptions opt;
  opt.reuse_controls = false;
  const MatchResult r = run_matching(v, {1, 1, 0}, {0}, opt);
  ASSERT_EQ(r.strata.size(), 1u);
  EXPECT_EQ(r.unmatched_treated, std::vector<std::size_t>{1});
  EXPECT_DOUBLE_EQ(r.t_fraction, 0.5);
  EXPECT_TRUE(r.unmatched_controls.empty());

  const MatchResult reuse = run_matching(v, {1, 1, 0}, {0});
  EXPECT_EQ(reuse.t_fraction, 1.0);
  ASSERT_EQ(reuse.strata.size(), 2u);
  EXPECT_EQ(reuse.strata[1].control_members, std::vector<std::size_t>{2});
}

TEST(Matcher, AllExactTwinsStayAtIterationZero) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> code(0, 3);
  std::vector<std::vector<std::int32_t>> cols(3);
  std::vector<std::uint8_t> t;
  for (int unit = 0; unit < 40; ++unit) {
    std::array<int, 3> c{code(rng), code(rng), code(rng)};
    for (int copy = 0; copy < 2; ++copy) {
      for (int j = 0; j < 3; ++j) cols[j].push_back(c[j]);
      t.push_back(copy == 0);
    }
  }
  const auto v = view_of(cols);
  for (bool reuse : {true, false}) {
    MatchOptions opt;
    opt.reuse_controls = reuse;
    const MatchResult r = run_matching(v, t, {2, 0, 1}, opt);
    for (const auto& s : r.strata) EXPECT_EQ(s.iteration, 0u);
    EXPECT_EQ(r.t_fraction, 1.0);
  }
}

TEST(Matcher, InvariantsOnRandomViews) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<std::size_t> nk(1, 5), nn(4, 60);
    const std::size_t k = nk(rng), n = nn(rng);
    std::uniform_int_distribution<int> code(0, 2);
    std::bernoulli_distribution coin(0.4);
    std::vector<std::vector<std::int32_t>> cols(k, std::vector<std::int32_t>(n));
    for (auto& c : cols)
      for (auto& v : c) v = code(rng);
    std::vector<std::uint8_t> t(n);
    for (auto& v : t) v = coin(rng);
    t[0] = 1;
    t[1] = 0;
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto v = view_of(cols);
    for (bool reuse : {true, false}) {
      MatchOptions opt;
      opt.reuse_controls = reuse;
      const MatchResult r = run_matching(v, t, order, opt);
      check_invariants(v, t, r, reuse);
      if (reuse) {
        EXPECT_EQ(r.t_fraction, 1.0);
      }
      // Deterministic.
      const MatchResult again = run_matching(v, t, order, opt);
      ASSERT_EQ(again.strata.size(), r.strata.size());
      for (std::size_t s = 0; s < r.strata.size(); ++s) {
        EXPECT_EQ(again.strata[s].treated_members, r.strata[s].treated_members);
        EXPECT_EQ(again.strata[s].control_members, r.strata[s].control_members);
      }
    }
  }
}

TEST(Matcher, RejectsBadOrder) {
  const auto v = view_of({{0, 1}, {0, 1}});
  EXPECT_THROW(run_matching(v, {1, 0}, {0, 0}), SchemaError);
  EXPECT_THROW(run_matching(v, {1, 0}, {0}), SchemaError);
  EXPECT_THROW(run_matching(v, {1, 0, 1}, {0, 1}), SchemaError);
}

TEST(Matcher, Scenario1AFullMatch) {
  for (std::size_t rep = 0; rep < 5; ++rep) {
    const Dataset ds = generate(*scenario_preset("1A"), rep).dataset;
    const MatchStage st = run_match_stage(ds, {});
    check_invariants(st.view, ds.treatment(), st.match, true);
    EXPECT_EQ(st.match.t_fraction, 1.0);
  }
}

TEST(Matcher, EqualImportanceTieBreakDropsHighestIndexFirst) {
  const ImportanceVector iv = compute_theta_star({1, 1, 1}, {1, 1, 1});
  EXPECT_EQ(iv.order, (std::vector<std::size_t>{0, 1, 2}));
  // Treated (0,0,1) vs control (0,0,2): column 2 goes first.
  const auto v = view_of({{0, 0}, {0, 0}, {1, 2}});
  const MatchResult r = run_matching(v, {1, 0}, iv.order);
  ASSERT_EQ(r.strata.size(), 1u);
  EXPECT_EQ(r.strata[0].dropped_columns, std::vector<std::size_t>{2});
}
