// tim: command-line front end.
//
//   tim match     --config run.json [--out dir]
//   tim estimate  --config run.json [--out dir] [--dump-omega]
//   tim imbalance --config run.json [--out dir]
//   tim simulate  --scenario 1A [--seed 7] [--n 500] [--out dir]
//   tim benchmark --scenario 1A [--reps 100] [--seed 7] [--threads 4] [--out dir]
//
// Exit codes: 0 ok, 2 user/validation error, 3 degenerate data, 4 internal.

#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tim/config.hpp"
#include "tim/report.hpp"
#include "tim/simulate.hpp"

namespace fs = std::filesystem;
using namespace tim;

namespace {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level log_level() {
  const char* env = std::getenv("TIM_LOG");
  if (!env) return Level::Warn;
  const std::string v = env;
  if (v == "error" || v == "off") return Level::Error;
  if (v == "info") return Level::Info;
  if (v == "debug" || v == "trace") return Level::Debug;
  return Level::Warn;
}

void log(Level lvl, const std::string& msg) {
  static const Level threshold = log_level();
  if (lvl > threshold) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "tim: " << names[static_cast<int>(lvl)] << ": " << msg << '\n';
}

struct Common {
  std::string config;
  std::string input;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool with_config) {
  if (with_config) {
    cmd->add_option("--config", c.config, "run configuration (JSON)")->required();
    cmd->add_option("--input", c.input, "override the config's input CSV");
  }
  cmd->add_option("--seed", c.seed, "random seed (default 7)");
  cmd->add_option("--threads", c.threads, "worker thread cap")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output directory");
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = load_config(c.config);
  if (!c.input.empty()) cfg.input = c.input;
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (cfg.input.empty()) throw SchemaError("no input CSV given (config 'input' or --input)");
  cfg.schema.check();
  return cfg;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p = dir.empty() ? fs::path("tim_out") : fs::path(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw SchemaError("cannot create output directory '" + p.string() + "': " + ec.message());
  return p;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path.string() + "'");
  out << text;
  log(Level::Info, "wrote " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

Dataset load_input(const RunConfig& cfg) {
  log(Level::Info, "loading " + cfg.input);
  Dataset ds = load_csv(cfg.input, cfg.schema);
  log(Level::Info, "n=" + std::to_string(ds.n()) + " k=" + std::to_string(ds.k()) +
                       " treated=" + std::to_string(ds.n_treated()));
  return ds;
}

int cmd_match(const Common& c) {
  const RunConfig cfg = resolve_config(c);
  const Dataset ds = load_input(cfg);
  const PipelineOptions opt = pipeline_options(cfg, ds);
  const auto start = std::chrono::steady_clock::now();
  Timings t;
  const MatchStage st = run_match_stage(ds, opt, &t);
  t.total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& w : st.importance.warnings) log(Level::Warn, w);
  const fs::path out = prepare_out(cfg.output_dir);
  write_json(out / "match_report.json", make_match_report(cfg, ds, st, t));
  std::cout << "T_f=" << st.match.t_fraction << " strata=" << st.match.strata.size() << '\n';
  return 0;
}

int cmd_estimate(const Common& c, bool dump_omega) {
  const RunConfig cfg = resolve_config(c);
  const Dataset ds = load_input(cfg);
  const PipelineOptions opt = pipeline_options(cfg, ds);
  const TimResult res = run_tim(ds, opt);
  for (const auto& w : res.warnings) log(Level::Warn, w);
  const fs::path out = prepare_out(cfg.output_dir);
  write_json(out / "estimate_report.json", make_estimate_report(cfg, ds, res));
  {
    std::ostringstream csv;
    write_per_stratum_csv(csv, res.estimate, res.refined);
    write_file(out / "strata.csv", csv.str());
  }
  if (dump_omega) {
    const DiscreteDistanceModel model = build_model(discretize_for_distance(ds, res.view));
    write_json(out / "omega.json", omega_dump_json(ds, model));
  }
  std::cout.precision(10);
  std::cout << "CATE=" << res.estimate.overall << " T_f=" << res.match.t_fraction << " L1=" << res.imbalance.l1_pre
            << " L1m=" << res.imbalance.l1_post << '\n';
  return 0;
}

int cmd_imbalance(const Common& c) {
  const RunConfig cfg = resolve_config(c);
  const Dataset ds = load_input(cfg);
  const PipelineOptions opt = pipeline_options(cfg, ds);
  const Binning binning = opt.imbalance_bins.empty() ? default_binning(ds) : make_binning(ds, opt.imbalance_bins);
  const CodeMatrix codes = apply_binning(ds, binning);
  const double l1 = l1_from_codes(codes, ds.treated_indices(), ds.control_indices());
  nlohmann::json r = report_header("imbalance", cfg);
  r["dataset"] = dataset_json(ds);
  r["imbalance"] = {{"l1", l1}, {"cells_occupied", occupied_cells(codes)}, {"binning", binning_json(ds, binning)}};
  const fs::path out = prepare_out(cfg.output_dir);
  write_json(out / "imbalance_report.json", r);
  std::cout << "L1=" << l1 << '\n';
  return 0;
}

ScenarioSpec scenario_or_throw(const std::string& id, const Common& c) {
  auto spec = scenario_preset(id);
  if (!spec) throw ValidationError("unknown scenario '" + id + "' (expected 1A..6B)");
  spec->seed = c.seed.value_or(kDefaultSeed);
  return *spec;
}

int cmd_simulate(const Common& c, const std::string& scenario, std::optional<std::size_t> n) {
  ScenarioSpec spec = scenario_or_throw(scenario, c);
  if (n) spec.n = *n;
  const SimulatedData sim = generate(spec);
  const fs::path out = prepare_out(c.out.empty() ? "tim_sim" : c.out);
  const std::string name = "scenario_" + spec.scenario_id + ".csv";
  {
    std::ostringstream csv;
    write_csv(csv, sim.dataset);
    write_file(out / name, csv.str());
  }
  RunConfig cfg;
  cfg.input = name;
  cfg.schema = simulated_schema(spec);
  cfg.seed = spec.seed;
  cfg.output_dir = "results";
  nlohmann::json j = to_json(cfg);
  write_json(out / "config.json", j);
  write_json(out / "scenario.json", scenario_json(spec));
  std::cout << (out / name).string() << '\n';
  return 0;
}

int cmd_benchmark(const Common& c, const std::string& scenario, std::size_t reps) {
  const ScenarioSpec spec = scenario_or_throw(scenario, c);
  const unsigned threads = c.threads.value_or(1);
  const BenchmarkTable table = run_benchmark(spec, reps, PipelineOptions{}, threads);
  for (const auto& r : table.rows) {
    if (!r.ok) log(Level::Warn, "replicate " + std::to_string(r.replicate) + " failed: " + r.error);
  }
  const fs::path out = prepare_out(c.out.empty() ? "tim_bench" : c.out);
  write_json(out / "benchmark_summary.json", benchmark_summary_json(table, threads));
  std::ostringstream csv;
  write_benchmark_csv(csv, table);
  write_file(out / "benchmark_rows.csv", csv.str());
  const auto& s = table.summary;
  std::cout.precision(6);
  std::cout << "scenario=" << spec.scenario_id << " reps=" << s.replicates << " failed=" << s.failed
            << " bias=" << s.bias.mean << " L1=" << s.l1_pre.mean << " L1m=" << s.l1_post.mean
            << " Tf=" << s.t_fraction.mean << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tim: two-stage interpretable matching for treatment-effect estimation"};
  app.set_version_flag("--version", std::string(TIM_VERSION));
  app.require_subcommand(1);

  Common common;
  bool dump_omega = false;
  std::string scenario;
  std::optional<std::size_t> sim_n;
  std::size_t reps = 100;

  auto* match = app.add_subcommand("match", "importance, coarsening and iterative exact matching");
  add_common(match, common, true);
  auto* estimate = app.add_subcommand("estimate", "full pipeline: matching, refinement, CATE, L1");
  add_common(estimate, common, true);
  estimate->add_flag("--dump-omega", dump_omega, "also write the discrete distance tables");
  auto* imbalance = app.add_subcommand("imbalance", "pre-match L1 imbalance of a dataset");
  add_common(imbalance, common, true);
  auto* simulate = app.add_subcommand("simulate", "generate one synthetic scenario dataset");
  add_common(simulate, common, false);
  simulate->add_option("--scenario", scenario, "scenario id, 1A..6B")->required();
  simulate->add_option("--n", sim_n, "override the sample size");
  auto* bench = app.add_subcommand("benchmark", "Monte-Carlo replicates of a scenario");
  add_common(bench, common, false);
  bench->add_option("--scenario", scenario, "scenario id, 1A..6B")->required();
  bench->add_option("--reps", reps, "number of replicates")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*match) return cmd_match(common);
    if (*estimate) return cmd_estimate(common, dump_omega);
    if (*imbalance) return cmd_imbalance(common);
    if (*simulate) return cmd_simulate(common, scenario, sim_n);
    if (*bench) return cmd_benchmark(common, scenario, reps);
  } catch (const tim::DegenerateDataError& e) {
    log(Level::Error, e.what());
    return 3;
  } catch (const tim::ValidationError& e) {
    log(Level::Error, e.what());
    return 2;
  } catch (const tim::SchemaError& e) {
    log(Level::Error, e.what());
    return 2;
  } catch (const std::exception& e) {
    log(Level::Error, std::string("internal error: ") + e.what());
    return 4;
  } catch (...) {
    log(Level::Error, "internal error");
    return 4;
  }
  return 4;
}
