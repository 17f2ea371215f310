// Command-line front end: solve, evaluate, simulate and the two sweeps.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "ehn/config.hpp"
#include "ehn/csv.hpp"
#include "ehn/experiments.hpp"
#include "ehn/simulator.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kConfig = 2, kInfeasible = 3, kSolver = 4 };

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> slots;
  std::string policy;  // "", "optimal", "static" or a path
  bool trace = false;
};

struct Context {
  ehn::ExperimentConfig cfg;
  fs::path out;
};

Context prepare(const Options& o) {
  Context ctx{ehn::load_config(o.config), {}};
  if (o.seed) ctx.cfg.seed = *o.seed;
  if (o.slots) ctx.cfg.slots = *o.slots;
  if (ctx.cfg.warmup_slots >= ctx.cfg.slots)
    throw ehn::ConfigError("warmup (" + std::to_string(ctx.cfg.warmup_slots) +
                               ") must be smaller than slots",
                           0, "slots");
  ctx.out = o.out ? fs::path(*o.out) : fs::path(ctx.cfg.out_dir);
  fs::create_directories(ctx.out);
  return ctx;
}

void note(const std::string& msg) { std::cerr << msg << "\n"; }

int status_exit(const ehn::SolveReport& r) {
  switch (r.status) {
    case ehn::SolveStatus::Optimal:
      return kOk;
    case ehn::SolveStatus::Infeasible:
      return kInfeasible;
    case ehn::SolveStatus::SolverError:
      return kSolver;
  }
  return kSolver;
}

// Policies selected by --policy; the optimal one requires a solve.
struct Selected {
  std::vector<std::pair<std::string, ehn::Policy>> policies;
  int exit_code = kOk;
};

Selected select_policies(const Options& o, const ehn::TransitionModel& model) {
  Selected sel;
  const bool want_optimal = o.policy.empty() || o.policy == "optimal";
  const bool want_static = o.policy.empty() || o.policy == "static";
  if (!want_optimal && !want_static) {
    sel.policies.emplace_back("file", ehn::csv::read_policy(o.policy, model.state_space()));
    return sel;
  }
  if (want_optimal) {
    auto point = ehn::solve_point(model);
    if (point.policy) {
      sel.policies.emplace_back("optimal", std::move(*point.policy));
    } else {
      note("optimal policy unavailable: " + ehn::to_string(point.report.status) +
           (point.report.message.empty() ? "" : " (" + point.report.message + ")"));
      sel.exit_code = status_exit(point.report);
    }
  }
  if (want_static) sel.policies.emplace_back("static", ehn::static_policy(model.num_states()));
  return sel;
}

int run_solve(const Options& o) {
  const Context ctx = prepare(o);
  const auto model = ehn::build_model(ctx.cfg.model);
  const auto t0 = std::chrono::steady_clock::now();
  const auto point = ehn::solve_point(model);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ehn::csv::write_table(ctx.out / "report.csv", ehn::csv::report_table(point.report));
  if (point.policy) {
    ehn::csv::write_table(ctx.out / "policy.csv",
                          ehn::csv::policy_table(model.state_space(), *point.policy));
    ehn::csv::write_table(
        ctx.out / ("policy_e" + std::to_string(ctx.cfg.slice_energy) + ".csv"),
        ehn::csv::policy_table(model.state_space(), *point.policy, ctx.cfg.slice_energy));
  } else {
    fs::remove(ctx.out / "policy.csv");
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "solve: %s, objective %.9g, %zu pivots, %.2f s",
                ehn::to_string(point.report.status).c_str(), point.report.objective,
                point.report.iterations, secs);
  note(buf);
  if (!point.report.message.empty()) note("solver: " + point.report.message);
  return status_exit(point.report);
}

int run_evaluate(const Options& o) {
  const Context ctx = prepare(o);
  const auto model = ehn::build_model(ctx.cfg.model);
  const Selected sel = select_policies(o, model);
  std::vector<std::pair<std::string, ehn::Metrics>> rows;
  for (const auto& [label, policy] : sel.policies)
    rows.emplace_back(label, ehn::evaluate_policy(model, policy));
  ehn::csv::write_table(ctx.out / "metrics.csv", ehn::csv::metrics_table(rows));
  return sel.exit_code;
}

int run_simulate(const Options& o) {
  const Context ctx = prepare(o);
  const auto model = ehn::build_model(ctx.cfg.model);
  const Selected sel = select_policies(o, model);
  ehn::SimConfig sim;
  sim.slots = ctx.cfg.slots;
  sim.warmup_slots = ctx.cfg.warmup_slots;
  sim.seed = ctx.cfg.seed;
  sim.keep_trace = o.trace;
  std::vector<std::pair<std::string, ehn::SimTrace>> rows;
  for (const auto& [label, policy] : sel.policies) {
    auto trace = ehn::simulate(model, policy, sim);
    if (o.trace) {
      ehn::csv::write_table(ctx.out / ("trace_" + label + ".csv"),
                            ehn::csv::trace_table(trace.records));
      trace.records.clear();
    }
    rows.emplace_back(label, std::move(trace));
  }
  ehn::csv::write_table(ctx.out / "sim_metrics.csv", ehn::csv::sim_metrics_table(rows, sim));
  return sel.exit_code;
}

int run_sweep_weight(const Options& o) {
  const Context ctx = prepare(o);
  const auto rows = ehn::sweep_weight(ctx.cfg.model, ctx.cfg.sweep_weights);
  ehn::csv::write_table(ctx.out / "weight_sweep.csv", ehn::csv::weight_sweep_table(rows));
  for (const auto& r : rows)
    if (!r.point.report.message.empty())
      note("w_hp " + ehn::csv::format_number(r.w_hp) + ": " + r.point.report.message);
  return kOk;
}

int run_sweep_arrival(const Options& o) {
  const Context ctx = prepare(o);
  const auto rows = ehn::sweep_arrival(ctx.cfg.model, ctx.cfg.sweep_rates);
  ehn::csv::write_table(ctx.out / "arrival_sweep.csv", ehn::csv::arrival_sweep_table(rows));
  for (const auto& r : rows)
    if (!r.optimal.report.message.empty())
      note("rate " + ehn::csv::format_number(r.rate) + ": " + r.optimal.report.message);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal operation of an RF energy harvesting node"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (overrides out_dir)");
  };
  const auto run_controls = [&o](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "simulation seed");
    sub->add_option("--slots", o.slots, "simulated slots");
  };
  const auto policy_opt = [&o](CLI::App* sub) {
    sub->add_option("--policy", o.policy,
                    "policy CSV path, 'optimal' or 'static' (default: optimal and static)");
  };

  auto* solve = app.add_subcommand("solve", "solve the constrained problem; write policy and report");
  common(solve);
  auto* evaluate = app.add_subcommand("evaluate", "analytic metrics of a policy");
  common(evaluate);
  policy_opt(evaluate);
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo metrics of a policy");
  common(simulate);
  run_controls(simulate);
  policy_opt(simulate);
  simulate->add_flag("--trace", o.trace, "also write per-slot trace_<policy>.csv");
  auto* sweep_w = app.add_subcommand("sweep-weight", "solve and evaluate over HP weights");
  common(sweep_w);
  auto* sweep_a = app.add_subcommand("sweep-arrival", "optimal vs static over arrival rates");
  common(sweep_a);
  for (auto* sub : {solve, evaluate, sweep_w, sweep_a}) run_controls(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (solve->parsed()) return run_solve(o);
    if (evaluate->parsed()) return run_evaluate(o);
    if (simulate->parsed()) return run_simulate(o);
    if (sweep_w->parsed()) return run_sweep_weight(o);
    if (sweep_a->parsed()) return run_sweep_arrival(o);
  } catch (const ehn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ehn::ModelError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
