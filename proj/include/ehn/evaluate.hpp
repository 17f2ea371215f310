#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ehn/cmdp.hpp"
#include "ehn/model.hpp"

namespace ehn {

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Long-run performance of a stationary policy.
///
/// `loss_*` is the time average of the per-slot loss term (the quantity the
/// constraint bounds). `drop_*` is the fraction of arriving packets that are
/// actually discarded on overflow. Delays are mean sojourn times in slots by
/// Little's law and are empty when no packets are admitted.
struct Metrics {
  double throughput_lp = 0.0;
  double throughput_hp = 0.0;
  double loss_lp = 0.0;
  double loss_hp = 0.0;
  double drop_lp = 0.0;
  double drop_hp = 0.0;
  std::optional<double> delay_lp;
  std::optional<double> delay_hp;
  double objective = 0.0;

  double throughput(TrafficClass c) const {
    return c == TrafficClass::LP ? throughput_lp : throughput_hp;
  }
  double loss(TrafficClass c) const { return c == TrafficClass::LP ? loss_lp : loss_hp; }
  double drop(TrafficClass c) const { return c == TrafficClass::LP ? drop_lp : drop_hp; }
  const std::optional<double>& delay(TrafficClass c) const {
    return c == TrafficClass::LP ? delay_lp : delay_hp;
  }

  bool operator==(const Metrics&) const = default;
};

struct StationaryOptions {
  double residual_tol = 1e-13;
  std::size_t max_power_iterations = 20000;
  std::size_t dense_fallback_limit = 2000;
};

struct StationaryResult {
  std::vector<double> distribution;
  double residual = 0.0;  // max |dP - d|
  std::size_t iterations = 0;
  bool dense = false;
};

/// Markov chain induced by a policy: row s is sum_a pi(a|s) P(.|s,a).
SparseRows induced_chain(const TransitionModel& model, const Policy& policy);

/// Long-run distribution of the chain started in `start`. Lazy power
/// iteration first; if that stalls and the reachable part is small, the
/// balance equations are solved directly.
StationaryResult stationary_distribution(const SparseRows& chain, std::size_t start,
                                         const StationaryOptions& options = {});

StationaryResult stationary_distribution(const TransitionModel& model, const Policy& policy,
                                         const StationaryOptions& options = {});

Metrics evaluate_policy(const TransitionModel& model, const Policy& policy,
                        const StationaryOptions& options = {});

/// Metrics from an already computed long-run state distribution.
Metrics metrics_from_distribution(const TransitionModel& model, const Policy& policy,
                                  std::span<const double> distribution);

struct RviOptions {
  double span_tol = 1e-9;
  double laziness = 0.5;  // P -> (1-laziness) P + laziness I, removes periodicity
  std::size_t max_iterations = 2000000;
};

struct Weights {
  double lp = 0.0;
  double hp = 0.0;
};

/// Optimal average reward per step of a finite MDP given as
/// `actions_per_state` consecutive rows per state. Assumes every state can
/// reach every recurrent class it competes with (weakly communicating).
double average_reward_gain(const SparseRows& kernel, std::size_t actions_per_state,
                           std::span<const double> row_rewards, const RviOptions& options = {});

/// Unconstrained gain of the node model under the given weights,
/// restricted to states reachable from the cold start.
double relative_value_iteration(const TransitionModel& model, const Weights& weights,
                                const RviOptions& options = {});

}  // namespace ehn
