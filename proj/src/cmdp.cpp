#include "ehn/cmdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace ehn {

Policy::Policy(std::vector<std::array<double, kNumActions>> probs) : probs_(std::move(probs)) {}

void Policy::validate() const {
  for (std::size_t s = 0; s < probs_.size(); ++s) {
    double total = 0.0;
    for (double p : probs_[s]) {
      if (!(p >= 0.0 && p <= 1.0)) {
        std::ostringstream msg;
        msg << "policy row " << s << " has a probability outside [0,1]";
        throw ModelError(msg.str());
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "policy row " << s << " sums to " << total;
      throw ModelError(msg.str());
    }
  }
}

CmdpProgram build_lp(const TransitionModel& model, const LossLimits& limits,
                     const BuildOptions& options) {
  const std::size_t n = model.num_states();
  const std::size_t nvars = n * kNumActions;

  CmdpProgram out;
  out.num_states = n;
  auto& prog = out.program;
  prog.num_vars = nvars;
  prog.objective.assign(model.rewards().begin(), model.rewards().end());

  // Flow balance: sum_a x(s',a) - sum_{s,a} P(s'|s,a) x(s,a) = 0.
  std::vector<std::vector<lp::Term>> flow(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (Action a : kAllActions) {
      const auto var = static_cast<std::uint32_t>(TransitionModel::row_index(s, a));
      flow[s].push_back({var, 1.0});
      for (const Atom& atom : model.next(s, a)) flow[atom.next].push_back({var, -atom.prob});
    }
  }
  for (std::size_t s = 0; s < n; ++s) {
    auto& terms = flow[s];
    std::sort(terms.begin(), terms.end(),
              [](const lp::Term& x, const lp::Term& y) { return x.var < y.var; });
    std::vector<lp::Term> merged;
    for (const auto& t : terms) {
      if (!merged.empty() && merged.back().var == t.var)
        merged.back().coef += t.coef;
      else
        merged.push_back(t);
    }
    std::erase_if(merged, [](const lp::Term& t) { return t.coef == 0.0; });
    prog.constraints.push_back({std::move(merged), lp::Sense::Equal, 0.0, "flow"});
  }
  out.flow_rows = n;

  lp::Constraint norm{{}, lp::Sense::Equal, 1.0, "normalization"};
  norm.terms.reserve(nvars);
  for (std::size_t j = 0; j < nvars; ++j) norm.terms.push_back({static_cast<std::uint32_t>(j), 1.0});
  prog.constraints.push_back(std::move(norm));

  for (TrafficClass c : {TrafficClass::LP, TrafficClass::HP}) {
    const auto& limit = c == TrafficClass::LP ? limits.lp : limits.hp;
    if (!limit) continue;
    lp::Constraint row{{}, lp::Sense::LessEqual, *limit, "loss_" + std::string(to_string(c))};
    for (std::size_t s = 0; s < n; ++s) {
      const double cost = model.cost(s, c);
      if (cost == 0.0) continue;
      for (Action a : kAllActions)
        row.terms.push_back({static_cast<std::uint32_t>(TransitionModel::row_index(s, a)), cost});
    }
    (c == TrafficClass::LP ? out.loss_row_lp : out.loss_row_hp) = prog.constraints.size();
    prog.constraints.push_back(std::move(row));
  }

  if (options.restrict_to_reachable) {
    prog.pinned_zero.assign(nvars, 1);
    const auto start = model.state_space().index(options.start);
    for (std::uint32_t s : model.reachable_from(start))
      for (Action a : kAllActions) prog.pinned_zero[TransitionModel::row_index(s, a)] = 0;
  }
  return out;
}

OccupationMeasure::OccupationMeasure(std::size_t num_states, std::vector<double> x)
    : num_states_(num_states), x_(std::move(x)) {
  if (x_.size() != num_states_ * kNumActions)
    throw std::invalid_argument("occupation measure has the wrong length");
}

double OccupationMeasure::state_mass(std::size_t s) const {
  return x_[s * kNumActions] + x_[s * kNumActions + 1] + x_[s * kNumActions + 2];
}

double OccupationMeasure::total() const {
  double t = 0.0;
  for (double v : x_) t += v;
  return t;
}

double OccupationMeasure::flow_residual(const TransitionModel& model) const {
  std::vector<double> balance(num_states_, 0.0);
  for (std::size_t s = 0; s < num_states_; ++s) {
    balance[s] += state_mass(s);
    for (Action a : kAllActions) {
      const double xa = at(s, a);
      if (xa == 0.0) continue;
      for (const Atom& atom : model.next(s, a)) balance[atom.next] -= xa * atom.prob;
    }
  }
  double worst = 0.0;
  for (double b : balance) worst = std::max(worst, std::abs(b));
  return worst;
}

double OccupationMeasure::expected_reward(const TransitionModel& model) const {
  double r = 0.0;
  for (std::size_t j = 0; j < x_.size(); ++j) r += x_[j] * model.rewards()[j];
  return r;
}

double OccupationMeasure::expected_cost(const TransitionModel& model, TrafficClass c) const {
  double v = 0.0;
  for (std::size_t s = 0; s < num_states_; ++s) v += state_mass(s) * model.cost(s, c);
  return v;
}

double OccupationMeasure::delivery_rate(const TransitionModel& model, TrafficClass c) const {
  double v = 0.0;
  for (std::size_t s = 0; s < num_states_; ++s)
    for (Action a : kAllActions) v += at(s, a) * model.delivery(s, a, c);
  return v;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::SolverError:
      return "solver_error";
  }
  return "unknown";
}

namespace {

// Lowest value the loss row can take over all stationary measures. Phase 1
// stalls on very degenerate infeasible programs (a limit of 0, say), so an
// unattainable limit is detected here instead.
lp::Solution min_loss(const CmdpProgram& program, std::size_t row, const lp::SimplexOptions& options) {
  lp::LinearProgram aux = program.program;
  std::fill(aux.objective.begin(), aux.objective.end(), 0.0);
  for (const auto& t : aux.constraints[row].terms) aux.objective[t.var] -= t.coef;
  std::vector<lp::Constraint> kept;
  for (std::size_t i = 0; i < aux.constraints.size(); ++i)
    if (i != program.loss_row_lp && i != program.loss_row_hp) kept.push_back(std::move(aux.constraints[i]));
  aux.constraints = std::move(kept);
  return lp::solve(aux, options);
}

}  // namespace

CmdpSolution solve_lp(const TransitionModel& model, const CmdpProgram& program,
                      const lp::SimplexOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  CmdpSolution out;
  auto& rep = out.report;
  const auto zero_measure = [&] {
    return OccupationMeasure(program.num_states,
                             std::vector<double>(program.num_states * kNumActions, 0.0));
  };

  std::size_t spent = 0;
  for (const auto& row : {program.loss_row_lp, program.loss_row_hp}) {
    if (!row) continue;
    const auto& c = program.program.constraints[*row];
    const lp::Solution low = min_loss(program, *row, options);
    spent += low.iterations;
    if (low.status != lp::Status::Optimal) continue;  // inconclusive; the main solve decides
    if (-low.objective > c.rhs + 1e-10) {
      rep.status = SolveStatus::Infeasible;
      rep.iterations = spent;
      rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      char buf[160];
      std::snprintf(buf, sizeof buf, "lowest attainable %s is %.9g, above the limit %.9g", c.name.c_str(),
                    -low.objective, c.rhs);
      rep.message = buf;
      out.measure = zero_measure();
      return out;
    }
  }

  const lp::Solution sol = lp::solve(program.program, options);
  const auto t1 = std::chrono::steady_clock::now();

  rep.iterations = spent + sol.iterations;
  rep.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  rep.message = sol.message;
  switch (sol.status) {
    case lp::Status::Optimal:
      rep.status = SolveStatus::Optimal;
      break;
    case lp::Status::Infeasible:
      rep.status = SolveStatus::Infeasible;
      break;
    default:
      rep.status = SolveStatus::SolverError;
      break;
  }
  if (rep.status != SolveStatus::Optimal) {
    out.measure = zero_measure();
    return out;
  }
  out.measure = OccupationMeasure(program.num_states, sol.x);
  rep.objective = out.measure.expected_reward(model);
  rep.constraint_lp = out.measure.expected_cost(model, TrafficClass::LP);
  rep.constraint_hp = out.measure.expected_cost(model, TrafficClass::HP);
  return out;
}

CmdpSolution solve_cmdp(const TransitionModel& model, const BuildOptions& options) {
  return solve_lp(model, build_lp(model, LossLimits::from(model.params()), options));
}

Policy extract_policy(const OccupationMeasure& x, const TransitionModel& model) {
  const std::size_t n = model.num_states();
  if (x.num_states() != n) throw std::invalid_argument("occupation measure does not match model");

  constexpr std::size_t kFar = std::numeric_limits<std::size_t>::max();
  std::vector<std::array<double, kNumActions>> probs(n, {1.0, 0.0, 0.0});
  std::vector<std::size_t> dist(n, kFar);
  for (std::size_t s = 0; s < n; ++s) {
    const double mass = x.state_mass(s);
    if (mass <= kZeroOccupancy) continue;
    dist[s] = 0;
    for (Action a : kAllActions) probs[s][action_index(a)] = std::max(x.at(s, a), 0.0) / mass;
  }

  // Hop distance to the occupied set, one layer at a time so that the
  // recorded action always has a successor exactly one layer closer.
  std::vector<std::uint8_t> steer(n, 0);
  for (std::size_t layer = 0;; ++layer) {
    std::vector<std::pair<std::size_t, std::uint8_t>> settled;
    for (std::size_t s = 0; s < n; ++s) {
      if (dist[s] != kFar) continue;
      for (Action a : kAllActions) {
        const auto row = model.next(s, a);
        const bool hits = std::any_of(row.begin(), row.end(),
                                      [&](const Atom& at) { return dist[at.next] == layer; });
        if (hits) {
          settled.push_back({s, static_cast<std::uint8_t>(action_index(a))});
          break;
        }
      }
    }
    if (settled.empty()) break;
    for (const auto& [s, a] : settled) {
      dist[s] = layer + 1;
      steer[s] = a;
    }
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (dist[s] == 0 || dist[s] == kFar) continue;
    probs[s] = {0.0, 0.0, 0.0};
    probs[s][steer[s]] = 1.0;
  }
  return Policy(std::move(probs));
}

}  // namespace ehn
