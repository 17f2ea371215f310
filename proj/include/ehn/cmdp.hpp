#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ehn/lp.hpp"
#include "ehn/model.hpp"

namespace ehn {

/// Stationary randomized policy: one distribution over the three actions
/// per state, in state-index order.
class Policy {
 public:
  Policy() = default;
  explicit Policy(std::vector<std::array<double, kNumActions>> probs);

  std::size_t num_states() const { return probs_.size(); }
  const std::array<double, kNumActions>& operator[](std::size_t s) const { return probs_[s]; }
  double prob(std::size_t s, Action a) const { return probs_[s][action_index(a)]; }
  std::span<const std::array<double, kNumActions>> rows() const { return probs_; }

  // Throws ModelError unless every row is a distribution within 1e-12.
  void validate() const;

  bool operator==(const Policy&) const = default;

 private:
  std::vector<std::array<double, kNumActions>> probs_;
};

struct LossLimits {
  std::optional<double> lp;
  std::optional<double> hp;

  static LossLimits from(const ModelParams& p) { return {p.loss_limit_lp, p.loss_limit_hp}; }
};

/// Occupation-measure LP plus the bookkeeping needed to read it back.
/// Column `s * 3 + action_index(a)` is x(s, a).
struct CmdpProgram {
  lp::LinearProgram program;
  std::size_t num_states = 0;
  std::size_t flow_rows = 0;
  std::optional<std::size_t> loss_row_lp;
  std::optional<std::size_t> loss_row_hp;
};

struct BuildOptions {
  // Pin x(s, .) = 0 for states the node can never visit from the cold
  // start, so the optimum lives on a class the node actually reaches.
  bool restrict_to_reachable = true;
  State start = kStartState;
};

CmdpProgram build_lp(const TransitionModel& model, const LossLimits& limits,
                     const BuildOptions& options = {});

class OccupationMeasure {
 public:
  OccupationMeasure() = default;
  OccupationMeasure(std::size_t num_states, std::vector<double> x);

  std::size_t num_states() const { return num_states_; }
  double at(std::size_t s, Action a) const { return x_[TransitionModel::row_index(s, a)]; }
  double state_mass(std::size_t s) const;
  std::span<const double> values() const { return x_; }

  double total() const;
  // max over s' of |sum_a x(s',a) - sum_{s,a} x(s,a) P(s'|s,a)|
  double flow_residual(const TransitionModel& model) const;
  double expected_reward(const TransitionModel& model) const;
  double expected_cost(const TransitionModel& model, TrafficClass c) const;
  double delivery_rate(const TransitionModel& model, TrafficClass c) const;

 private:
  std::size_t num_states_ = 0;
  std::vector<double> x_;
};

enum class SolveStatus { Optimal, Infeasible, SolverError };

std::string to_string(SolveStatus s);

struct SolveReport {
  SolveStatus status = SolveStatus::SolverError;
  double objective = 0.0;      // weighted throughput per slot
  double constraint_lp = 0.0;  // average LP loss term
  double constraint_hp = 0.0;  // average HP loss term
  std::size_t iterations = 0;
  double wall_seconds = 0.0;
  std::string message;

  bool feasible() const { return status == SolveStatus::Optimal; }
};

struct CmdpSolution {
  OccupationMeasure measure;
  SolveReport report;
};

/// Each finite loss limit is first checked against the lowest attainable
/// loss (a separate LP); an unattainable limit is reported as infeasible
/// without solving the main program.
CmdpSolution solve_lp(const TransitionModel& model, const CmdpProgram& program,
                      const lp::SimplexOptions& options = {});

/// Convenience: build_lp + solve_lp with the model's own loss limits.
CmdpSolution solve_cmdp(const TransitionModel& model, const BuildOptions& options = {});

/// pi(a|s) = x(s,a) / sum_a' x(s,a') on states with occupancy above 1e-12.
/// Every other state gets a deterministic action that moves it toward the
/// occupied set: the action whose successors include a state with the
/// smallest hop distance to that set, Harvest first on ties. States that
/// cannot reach the set harvest.
Policy extract_policy(const OccupationMeasure& x, const TransitionModel& model);

inline constexpr double kZeroOccupancy = 1e-12;

}  // namespace ehn
