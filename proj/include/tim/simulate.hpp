#pragma once

// Synthetic observational studies with known treatment effect, plus a
// replicate harness that runs the full pipeline over many seeded datasets.
//
// Continuous block: equicorrelated standard normals,
//   x_j = sqrt(rho) z_0 + sqrt(1 - rho) z_j.
// Discrete columns: p ~ Uniform(0.3, 0.7), then x ~ Bernoulli(p), drawn
// independently per observation and per column.
// T ~ Bernoulli(expit(x' a)),  Y = TE * T + x' b + eps,  eps ~ N(0, sigma).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "tim/dataset.hpp"
#include "tim/error.hpp"
#include "tim/pipeline.hpp"

namespace tim {

struct ScenarioSpec {
  std::string scenario_id = "custom";
  std::size_t n = 500;
  std::size_t k_c = 5;
  std::size_t k_d = 3;
  double rho = 0.0;
  std::vector<double> treat_coefs;    // length k_c + k_d, continuous first
  std::vector<double> outcome_coefs;  // length k_c + k_d, continuous first
  double treatment_effect = 1.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 7;

  std::size_t k() const noexcept { return k_c + k_d; }

  void validate() const {
    if (n < 10) throw ValidationError("simulation needs n >= 10");
    if (k() == 0) throw ValidationError("simulation needs at least one covariate");
    if (treat_coefs.size() != k() || outcome_coefs.size() != k()) {
      throw ValidationError("coefficient vectors must have length k_c + k_d");
    }
    if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("correlation must lie in [0, 1)");
    if (!(noise_sigma >= 0.0)) throw ValidationError("noise scale must be non-negative");
  }
};

namespace detail {

inline std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline std::vector<double> repeat(double v, std::size_t count) { return std::vector<double>(count, v); }

}  // namespace detail

// Presets "1A" .. "6B": scenario 1-3 use n = 500 with 5 continuous and 3
// binary covariates, 4-6 use n = 4000 with 10 and 6. Suffix A is rho = 0,
// B is rho = 0.5.
inline std::optional<ScenarioSpec> scenario_preset(const std::string& id) {
  if (id.size() != 2 || id[0] < '1' || id[0] > '6' || (id[1] != 'A' && id[1] != 'B')) return std::nullopt;
  using detail::concat;
  using detail::repeat;
  ScenarioSpec s;
  s.scenario_id = id;
  s.rho = id[1] == 'B' ? 0.5 : 0.0;
  const int number = id[0] - '0';
  if (number <= 3) {
    s.n = 500;
    s.k_c = 5;
    s.k_d = 3;
  } else {
    s.n = 4000;
    s.k_c = 10;
    s.k_d = 6;
  }
  switch (number) {
    case 1:
      s.treat_coefs = s.outcome_coefs = repeat(0.8, 8);
      break;
    case 2:
      s.treat_coefs = s.outcome_coefs = {0.8, 0.8, 0.5, 0.5, 0.2, 0.8, 0.5, 0.2};
      break;
    case 3:
      s.treat_coefs = {0.8, 0.8, 0.5, 0.5, 0.8, 0.8, 0.5, 0.8};
      s.outcome_coefs = {0.8, 0.8, 0.5, 0.5, 0.2, 0.8, 0.5, 0.2};
      break;
    case 4:
      s.treat_coefs = s.outcome_coefs = repeat(0.8, 16);
      break;
    case 5:
      s.treat_coefs = s.outcome_coefs =
          concat(concat(concat(repeat(0.8, 4), repeat(0.5, 4)), repeat(0.2, 2)),
                 concat(concat(repeat(0.8, 2), repeat(0.5, 2)), repeat(0.2, 2)));
      break;
    case 6:
      s.treat_coefs = concat(concat(concat(repeat(0.8, 4), repeat(0.5, 4)), repeat(0.8, 2)),
                             concat(concat(repeat(0.8, 2), repeat(0.5, 2)), repeat(0.8, 2)));
      s.outcome_coefs = concat(concat(concat(repeat(0.8, 4), repeat(0.5, 4)), repeat(0.2, 2)),
                               concat(concat(repeat(0.8, 2), repeat(0.5, 2)), repeat(0.2, 2)));
      break;
  }
  return s;
}

inline double expit(double x) { return detail::expit(x); }

// Independent stream for (master seed, replicate index).
inline std::mt19937_64 replicate_engine(std::uint64_t seed, std::uint64_t replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32),
                    0x54494du};
  return std::mt19937_64(seq);
}

struct SimulatedData {
  Dataset dataset;
  double true_te = 0.0;
};

inline SimulatedData generate(const ScenarioSpec& spec, std::uint64_t replicate = 0) {
  spec.validate();
  auto rng = replicate_engine(spec.seed, replicate);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> prob(0.3, 0.7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t n = spec.n, kc = spec.k_c, k = spec.k();
  std::vector<std::vector<double>> x(k, std::vector<double>(n));
  std::vector<std::uint8_t> t(n);
  std::vector<double> y(n);
  const double shared = std::sqrt(spec.rho);
  const double own = std::sqrt(1.0 - spec.rho);
  for (std::size_t i = 0; i < n; ++i) {
    const double z0 = normal(rng);
    for (std::size_t j = 0; j < kc; ++j) x[j][i] = shared * z0 + own * normal(rng);
    for (std::size_t j = kc; j < k; ++j) {
      const double p = prob(rng);
      x[j][i] = unit(rng) < p ? 1.0 : 0.0;
    }
    double treat_index = 0.0, outcome_index = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      treat_index += spec.treat_coefs[j] * x[j][i];
      outcome_index += spec.outcome_coefs[j] * x[j][i];
    }
    t[i] = unit(rng) < expit(treat_index) ? 1 : 0;
    y[i] = spec.treatment_effect * t[i] + outcome_index + spec.noise_sigma * normal(rng);
  }

  std::vector<Column> columns;
  for (std::size_t j = 0; j < k; ++j) {
    Column c;
    if (j < kc) {
      c.name = "xc" + std::to_string(j + 1);
      c.kind = CovariateKind::Continuous;
      c.values = std::move(x[j]);
    } else {
      // Codes by first appearance, exactly as CSV ingestion assigns them.
      c.name = "xd" + std::to_string(j - kc + 1);
      c.kind = CovariateKind::Discrete;
      c.values.resize(n);
      int code_of[2] = {-1, -1};
      for (std::size_t i = 0; i < n; ++i) {
        const int v = static_cast<int>(x[j][i]);
        if (code_of[v] < 0) {
          code_of[v] = static_cast<int>(c.labels.size());
          c.labels.push_back(std::to_string(v));
        }
        c.values[i] = code_of[v];
      }
    }
    columns.push_back(std::move(c));
  }
  return {Dataset::create(std::move(columns), std::move(t), std::move(y)), spec.treatment_effect};
}

// Schema matching the columns written by write_csv for a simulated dataset.
inline Schema simulated_schema(const ScenarioSpec& spec) {
  Schema s;
  for (std::size_t j = 0; j < spec.k_c; ++j) s.roles["xc" + std::to_string(j + 1)] = ColumnRole::CovariateContinuous;
  for (std::size_t j = 0; j < spec.k_d; ++j) s.roles["xd" + std::to_string(j + 1)] = ColumnRole::CovariateDiscrete;
  s.roles["T"] = ColumnRole::Treatment;
  s.roles["Y"] = ColumnRole::Outcome;
  return s;
}

struct ReplicateRow {
  std::size_t replicate = 0;
  bool ok = false;
  std::string error;
  std::size_t n_treated = 0;
  std::size_t n_strata = 0;
  double cate = 0.0;
  double bias = 0.0;
  double naive_dim = 0.0;
  double naive_bias = 0.0;
  double l1_pre = 0.0;
  double l1_post = 0.0;
  double t_fraction = 0.0;
  double seconds = 0.0;
};

struct SummaryStat {
  double mean = 0.0;
  double sd = 0.0;
  double lower_95 = 0.0;
  double upper_95 = 0.0;
};

// Mean and 95% normal-approximation interval for the mean.
inline SummaryStat summarize(const std::vector<double>& v) {
  SummaryStat s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  const double half = 1.959963984540054 * s.sd / std::sqrt(static_cast<double>(v.size()));
  s.lower_95 = s.mean - half;
  s.upper_95 = s.mean + half;
  return s;
}

struct BenchmarkSummary {
  std::size_t replicates = 0;
  std::size_t failed = 0;
  SummaryStat cate, bias, abs_bias, naive_bias, l1_pre, l1_post, t_fraction, seconds;
};

struct BenchmarkTable {
  ScenarioSpec spec;
  std::vector<ReplicateRow> rows;
  BenchmarkSummary summary;
};

inline ReplicateRow run_replicate(const ScenarioSpec& spec, std::size_t replicate, const PipelineOptions& opt) {
  ReplicateRow row;
  row.replicate = replicate;
  const auto start = std::chrono::steady_clock::now();
  try {
    const SimulatedData sim = generate(spec, replicate);
    const TimResult r = run_tim(sim.dataset, opt);
    row.ok = true;
    row.n_treated = sim.dataset.n_treated();
    row.n_strata = r.match.strata.size();
    row.cate = r.estimate.overall;
    row.bias = r.estimate.overall - sim.true_te;
    row.naive_dim = r.estimate.naive_dim;
    row.naive_bias = r.estimate.naive_dim - sim.true_te;
    row.l1_pre = r.imbalance.l1_pre;
    row.l1_post = r.imbalance.l1_post;
    row.t_fraction = r.match.t_fraction;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

// Replicates are distributed over `threads` workers; each replicate owns its
// RNG stream, so results do not depend on the thread count.
inline BenchmarkTable run_benchmark(const ScenarioSpec& spec, std::size_t replicates, const PipelineOptions& opt = {},
                                    unsigned threads = 1) {
  if (replicates < 1) throw ValidationError("benchmark needs at least one replicate");
  spec.validate();
  BenchmarkTable table;
  table.spec = spec;
  table.rows.resize(replicates);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(replicates)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < replicates; r = next++) table.rows[r] = run_replicate(spec, r, opt);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<double> cate, bias, abs_bias, naive, pre, post, tf, secs;
  for (const auto& row : table.rows) {
    secs.push_back(row.seconds);
    if (!row.ok) {
      ++table.summary.failed;
      continue;
    }
    cate.push_back(row.cate);
    bias.push_back(row.bias);
    abs_bias.push_back(std::abs(row.bias));
    naive.push_back(row.naive_bias);
    pre.push_back(row.l1_pre);
    post.push_back(row.l1_post);
    tf.push_back(row.t_fraction);
  }
  auto& s = table.summary;
  s.replicates = replicates;
  s.cate = summarize(cate);
  s.bias = summarize(bias);
  s.abs_bias = summarize(abs_bias);
  s.naive_bias = summarize(naive);
  s.l1_pre = summarize(pre);
  s.l1_post = summarize(post);
  s.t_fraction = summarize(tf);
  s.seconds = summarize(secs);
  return table;
}

}  // namespace tim
