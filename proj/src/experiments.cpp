#include "ehn/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <future>
#include <thread>

#include "ehn/simulator.hpp"

namespace ehn {

namespace {

// Runs fn(i) for i in [0, n) on a small worker pool; results keep index order.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, unsigned threads, Fn fn) {
  std::vector<T> out(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  for (unsigned w = 0; w < threads; ++w) {
    workers.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
    }));
  }
  for (auto& f : workers) f.get();
  return out;
}

SolvedPoint failed_point(const std::string& what) {
  SolvedPoint p;
  p.report.status = SolveStatus::SolverError;
  p.report.message = what;
  return p;
}

}  // namespace

ModelParams with_hp_weight(ModelParams p, double w_hp) {
  p.weight_hp = w_hp;
  p.weight_lp = 1.0 - w_hp;
  return p;
}

ModelParams with_arrival_rate(ModelParams p, double rate) {
  p.arrival_lp = {1.0 - rate, rate};
  p.arrival_hp = {1.0 - rate, rate};
  if (rate == 0.0) {
    p.arrival_lp = {1.0};
    p.arrival_hp = {1.0};
    p.loss_limit_lp.reset();
    p.loss_limit_hp.reset();
  }
  return p;
}

SolvedPoint solve_point(const TransitionModel& model) {
  SolvedPoint out;
  const CmdpSolution sol = solve_cmdp(model);
  out.report = sol.report;
  if (!sol.report.feasible()) return out;
  out.flow_residual = sol.measure.flow_residual(model);
  out.measure_total = sol.measure.total();
  out.policy = extract_policy(sol.measure, model);
  out.metrics = evaluate_policy(model, *out.policy);
  return out;
}

SolvedPoint solve_point(const ModelParams& params) { return solve_point(build_model(params)); }

std::vector<WeightRow> sweep_weight(const ModelParams& base, std::span<const double> w_hp,
                                    unsigned threads) {
  return parallel_map<WeightRow>(w_hp.size(), threads, [&](std::size_t i) {
    WeightRow row;
    row.w_hp = w_hp[i];
    try {
      row.point = solve_point(with_hp_weight(base, w_hp[i]));
    } catch (const std::exception& e) {
      row.point = failed_point(e.what());
    }
    return row;
  });
}

std::vector<ArrivalRow> sweep_arrival(const ModelParams& base, std::span<const double> rates,
                                      unsigned threads) {
  return parallel_map<ArrivalRow>(rates.size(), threads, [&](std::size_t i) {
    ArrivalRow row;
    row.rate = rates[i];
    try {
      const TransitionModel model = build_model(with_arrival_rate(base, rates[i]));
      row.static_metrics = evaluate_policy(model, static_policy(model.num_states()));
      row.optimal = solve_point(model);
    } catch (const std::exception& e) {
      row.optimal = failed_point(e.what());
    }
    return row;
  });
}

}  // namespace ehn
