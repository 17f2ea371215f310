// Acceptance run: one PASS/FAIL line per criterion.
//
//   ehn_acceptance [--out DIR] [--expect-fail N]...
//
// A criterion listed with --expect-fail prints "FAIL (expected)" and does not
// change the exit status; an unexpected failure exits 1.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "ehn/cmdp.hpp"
#include "ehn/csv.hpp"
#include "ehn/evaluate.hpp"
#include "ehn/experiments.hpp"
#include "ehn/simulator.hpp"
#include "oracles.hpp"
#include "random_params.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace ehn;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& why) {
    if (!ok) {
      pass = false;
      detail << " [" << why << "]";
    }
  }
};

const ExperimentConfig& shipped() { return test::shipped_config(); }

// Sweep results are shared between criteria 1, 2 and 5.
struct Sweeps {
  std::vector<ArrivalRow> arrival;
  std::vector<WeightRow> weight;
  SolvedPoint base;
  double arrival_secs = 0.0;
};

const Sweeps& sweeps() {
  static const Sweeps s = [] {
    Sweeps out;
    const auto t0 = Clock::now();
    out.arrival = sweep_arrival(shipped().model, shipped().sweep_rates);
    out.arrival_secs = seconds_since(t0);
    out.weight = sweep_weight(shipped().model, shipped().sweep_weights);
    out.base = solve_point(shipped().model);
    return out;
  }();
  return s;
}

void constraint_satisfaction(Outcome& o) {
  const auto& s = sweeps();
  std::vector<const ArrivalRow*> feasible;
  double worst = 0.0;
  for (const auto& row : s.arrival) {
    if (row.optimal.report.status == SolveStatus::SolverError)
      o.require(false, "solver error at rate " + num(row.rate));
    if (!row.optimal.metrics) continue;
    feasible.push_back(&row);
    worst = std::max(worst, row.optimal.metrics->loss_hp);
    o.require(row.optimal.metrics->loss_hp <= 0.1 + 1e-6, "loss_hp above limit at rate " + num(row.rate));
  }
  o.require(feasible.size() >= 2, "fewer than two feasible rates");
  // The two highest feasible rates.
  for (std::size_t k = feasible.size() >= 2 ? feasible.size() - 2 : 0; k < feasible.size(); ++k) {
    const auto& st = feasible[k]->static_metrics;
    if (st) o.detail << "; static loss_hp@" << num(feasible[k]->rate) << " = " << num(st->loss_hp);
    o.require(st.has_value() && st->loss_hp > 0.1,
              "static loss_hp not above limit at rate " + num(feasible[k]->rate));
  }
  o.require(s.arrival_secs < 300.0, "sweep slower than 5 min");
  o.detail << "; feasible " << feasible.size() << "/" << s.arrival.size() << ", max optimal loss_hp "
           << num(worst) << ", sweep " << num(s.arrival_secs) << " s";
}

void weight_tradeoff(Outcome& o) {
  const auto& rows = sweeps().weight;
  std::vector<const Metrics*> m;
  for (const auto& r : rows) {
    o.require(r.point.metrics.has_value(), "no solution at w_hp " + num(r.w_hp));
    if (r.point.metrics) m.push_back(&*r.point.metrics);
  }
  if (m.size() != rows.size() || m.size() < 2) return;
  for (std::size_t i = 1; i < m.size(); ++i) {
    o.require(m[i]->throughput_hp >= m[i - 1]->throughput_hp - 2e-6,
              "thr_hp drops at w_hp " + num(rows[i].w_hp));
    o.require(m[i]->throughput_lp <= m[i - 1]->throughput_lp + 2e-6,
              "thr_lp rises at w_hp " + num(rows[i].w_hp));
  }
  const auto& lo = *m.front();
  const auto& hi = *m.back();
  o.require(lo.delay_lp && hi.delay_lp && *hi.delay_lp > *lo.delay_lp, "delay_lp not up at endpoints");
  o.require(lo.delay_hp && hi.delay_hp && *hi.delay_hp < *lo.delay_hp, "delay_hp not down at endpoints");
  o.detail << "; thr_hp " << num(lo.throughput_hp) << "->" << num(hi.throughput_hp) << ", thr_lp "
           << num(lo.throughput_lp) << "->" << num(hi.throughput_lp);
  if (lo.delay_lp && hi.delay_lp && lo.delay_hp && hi.delay_hp)
    o.detail << ", delay_lp " << num(*lo.delay_lp) << "->" << num(*hi.delay_lp) << ", delay_hp "
             << num(*lo.delay_hp) << "->" << num(*hi.delay_hp);
}

void oracle_equivalence(Outcome& o) {
  auto p = oracle::tiny_params();
  p.loss_limit_lp.reset();
  p.loss_limit_hp.reset();
  const auto t0 = Clock::now();
  const auto model = build_model(p);
  o.require(model.num_states() == 12, "tiny instance is not 12 states");
  const auto sol = solve_cmdp(model);
  const double rvi = relative_value_iteration(model, {p.weight_lp, p.weight_hp});
  const double secs = seconds_since(t0);
  o.require(sol.report.status == SolveStatus::Optimal, "LP not optimal");
  const double gap = std::abs(sol.report.objective - rvi);
  o.require(gap <= 1e-6, "LP and RVI differ");
  o.require(secs < 1.0, "slower than 1 s");
  o.detail << "; LP " << num(sol.report.objective) << ", RVI " << num(rvi) << ", |diff| " << num(gap)
           << ", " << num(secs) << " s";
}

void analytic_empirical(Outcome& o) {
  const auto model = build_model(shipped().model);
  const auto& base = sweeps().base;
  o.require(base.policy.has_value(), "no optimal policy");
  if (!base.policy) return;
  SimConfig cfg;
  cfg.slots = 1'000'000;
  cfg.warmup_slots = 10'000;
  cfg.seed = shipped().seed;
  const std::vector<std::pair<std::string, Policy>> policies{
      {"optimal", *base.policy}, {"static", static_policy(model.num_states())}};
  for (const auto& [label, pi] : policies) {
    const auto an = evaluate_policy(model, pi);
    const auto t0 = Clock::now();
    const auto sim = simulate(model, pi, cfg).metrics;
    const double secs = seconds_since(t0);
    o.require(secs < 30.0, label + " run slower than 30 s");
    const auto check = [&](const std::string& name, const Estimate& e, double want) {
      const double diff = std::abs(e.mean - want);
      const double rel = want != 0.0 ? diff / std::abs(want) : diff;
      const bool se_ok = diff <= 3.0 * e.std_error;
      const bool rel_ok = rel <= 0.01;
      o.detail << "; " << label << " " << name << " sim " << num(e.mean) << " (SE " << num(e.std_error)
               << ") vs " << num(want) << ", rel " << num(rel);
      o.require(se_ok, "outside 3 SE");
      o.require(rel_ok, "outside 1%");
    };
    for (TrafficClass c : {TrafficClass::LP, TrafficClass::HP}) {
      const std::string cls(to_string(c));
      check("thr_" + cls, sim.throughput(c), an.throughput(c));
      check("loss_" + cls, sim.loss(c), an.loss(c));
    }
    o.detail << "; " << label << " " << num(secs) << " s";
  }
}

void measure_validity(Outcome& o) {
  const auto& s = sweeps();
  std::size_t solved = 0;
  double worst_total = 0.0, worst_flow = 0.0;
  const auto visit = [&](const SolvedPoint& p) {
    if (!p.report.feasible()) return;
    ++solved;
    worst_total = std::max(worst_total, std::abs(p.measure_total - 1.0));
    worst_flow = std::max(worst_flow, p.flow_residual);
  };
  for (const auto& r : s.arrival) visit(r.optimal);
  for (const auto& r : s.weight) visit(r.point);
  visit(s.base);
  o.require(solved > 0, "nothing solved");
  o.require(worst_total <= 1e-8, "sum of x off by more than 1e-8");
  o.require(worst_flow <= 1e-8, "flow residual above 1e-8");
  o.detail << "; " << solved << " instances, max |sum-1| " << num(worst_total) << ", max flow residual "
           << num(worst_flow);
}

void model_soundness(Outcome& o) {
  const auto model = build_model(shipped().model);
  std::size_t bad_rows = 0;
  for (std::size_t r = 0; r < model.num_rows(); ++r) {
    double total = 0.0;
    for (const auto& a : model.kernel().row(r)) {
      total += a.prob;
      if (a.prob < 0.0 || a.next >= model.num_states()) ++bad_rows;
    }
    if (std::abs(total - 1.0) > 1e-12) ++bad_rows;
  }
  o.require(bad_rows == 0, "non-stochastic rows");

  std::mt19937_64 rng(2024);
  std::size_t sampled = 0, violations = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto p = test::random_params(rng);
    const StateSpace space(p);
    std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
    for (int k = 0; k < 30; ++k, ++sampled) {
      const State s = space.state(pick(rng));
      const auto a = kAllActions[std::uniform_int_distribution<int>(0, 2)(rng)];
      const bool feasible = transmit_feasible(p, s, a);
      std::set<int> allowed;
      if (a == Action::Harvest) {
        for (const auto& h : p.harvest) allowed.insert(std::min(s.e + h.units, p.e_max));
      } else {
        allowed.insert(feasible ? s.e - p.k_tx : s.e);
      }
      for (const auto& [n, pr] : transition(p, s, a)) {
        if (!space.contains(n) || pr < 0.0 || !allowed.count(n.e)) ++violations;
        if (n.q_lp < s.q_lp - 1 || n.q_hp < s.q_hp - 1) ++violations;
      }
      if (reward(p, s, a) > 0.0 && !feasible) ++violations;
    }
  }
  o.require(sampled >= 10'000, "fewer than 1e4 samples");
  o.require(violations == 0, "property violations");
  o.detail << "; " << model.num_rows() << " rows, " << bad_rows << " bad; " << sampled
           << " sampled transitions, " << violations << " violations";
}

void policy_structure(Outcome& o, const fs::path& out) {
  const auto& base = sweeps().base;
  o.require(base.policy.has_value(), "no optimal policy");
  if (!base.policy) return;
  const auto model = build_model(shipped().model);
  const int e = shipped().slice_energy;
  fs::create_directories(out);
  const auto path = out / ("policy_e" + std::to_string(e) + ".csv");
  csv::write_table(path, csv::policy_table(model.state_space(), *base.policy, e));
  const auto s = model.state_space().index({e, 0, 0});
  const double h = base.policy->prob(s, Action::Harvest);
  o.require(h >= 0.5, "harvest probability below 0.5");
  const auto reach = model.reachable_from(model.state_space().index(kStartState));
  const bool reachable = std::binary_search(reach.begin(), reach.end(), static_cast<std::uint32_t>(s));
  o.detail << "; p_harvest(e=" << e << ",0,0) = " << num(h)
           << (reachable ? "" : " (state unreachable; fallback rule)") << "; heatmap " << path.string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string out = "acceptance_out";
  std::vector<int> expect_fail;
  app.add_option("--out", out, "directory for emitted CSVs");
  app.add_option("--expect-fail", expect_fail, "criterion numbers known to fail");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"constraint satisfaction", constraint_satisfaction},
      {"weight tradeoff", weight_tradeoff},
      {"oracle equivalence", oracle_equivalence},
      {"analytic-empirical agreement", analytic_empirical},
      {"occupation-measure validity", measure_validity},
      {"model soundness", model_soundness},
      {"policy structure (qualitative)", [&](Outcome& o) { policy_structure(o, out); }},
  };

  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const bool expected = std::find(expect_fail.begin(), expect_fail.end(), id) != expect_fail.end();
    std::string verdict = o.pass ? "PASS" : "FAIL";
    if (!o.pass && expected) verdict = "FAIL (expected)";
    if (o.pass && expected) verdict = "PASS (was expected to fail)";
    if (!o.pass && !expected) ++unexpected;
    std::cout << verdict << " " << id << " " << criteria[i].first << o.detail.str() << std::endl;
  }
  return unexpected == 0 ? 0 : 1;
}
