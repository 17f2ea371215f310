#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ehn/cmdp.hpp"
#include "ehn/model.hpp"

namespace ehn {

struct SimConfig {
  std::uint64_t slots = 1'000'000;
  std::uint64_t seed = 1;
  std::uint64_t warmup_slots = 10'000;
  std::size_t batches = 100;  // batch means for standard errors
  bool keep_trace = false;

  void validate() const;
};

// Name of the random engine; stored in every simulation output.
inline constexpr const char* kGeneratorName = "mt19937_64";

struct SlotRecord {
  std::uint64_t slot = 0;
  State state;
  Action action = Action::Harvest;
  bool tx_success = false;
  int arrivals_lp = 0;
  int arrivals_hp = 0;
  int drops_lp = 0;
  int drops_hp = 0;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct ClassCounts {
  std::uint64_t arrived = 0;
  std::uint64_t dropped = 0;
  std::uint64_t admitted = 0;
  std::uint64_t delivered = 0;
};

/// Empirical counterparts of `Metrics`, each with a batch-means standard
/// error. `loss_*` averages the per-slot loss term over visited states;
/// `drop_*` is dropped / arrived.
struct SimMetrics {
  Estimate throughput_lp, throughput_hp;
  Estimate loss_lp, loss_hp;
  Estimate drop_lp, drop_hp;
  std::optional<Estimate> delay_lp, delay_hp;
  Estimate objective;
  ClassCounts counts_lp, counts_hp;
  std::uint64_t measured_slots = 0;

  const Estimate& throughput(TrafficClass c) const {
    return c == TrafficClass::LP ? throughput_lp : throughput_hp;
  }
  const Estimate& loss(TrafficClass c) const { return c == TrafficClass::LP ? loss_lp : loss_hp; }
  const Estimate& drop(TrafficClass c) const { return c == TrafficClass::LP ? drop_lp : drop_hp; }
  const std::optional<Estimate>& delay(TrafficClass c) const {
    return c == TrafficClass::LP ? delay_lp : delay_hp;
  }
};

struct SimTrace {
  std::vector<SlotRecord> records;  // all slots, warmup included, when kept
  SimMetrics metrics;
  std::string generator = kGeneratorName;
  std::uint64_t seed = 0;
};

/// Monte-Carlo run from the cold-start state. Each slot consumes exactly
/// four uniforms in the order: action, harvest/departure outcome, LP
/// arrivals, HP arrivals.
SimTrace simulate(const TransitionModel& model, const Policy& policy, const SimConfig& cfg);

/// Chooses each of the three actions with probability 1/3 in every state.
Policy static_policy(std::size_t num_states);

}  // namespace ehn
