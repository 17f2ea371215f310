#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ehn {

// Raised when a parameter set or config violates the model's preconditions.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a caller hands the model an out-of-range state.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Canonical ordering; file formats and LP columns depend on it.
enum class Action : std::uint8_t { Harvest = 0, TxLP = 1, TxHP = 2 };

inline constexpr std::size_t kNumActions = 3;
inline constexpr std::array<Action, kNumActions> kAllActions{Action::Harvest, Action::TxLP,
                                                             Action::TxHP};

constexpr std::size_t action_index(Action a) { return static_cast<std::size_t>(a); }
std::string_view to_string(Action a);

enum class TrafficClass : std::uint8_t { LP = 0, HP = 1 };

std::string_view to_string(TrafficClass c);

struct HarvestOutcome {
  int units = 0;
  double prob = 0.0;

  bool operator==(const HarvestOutcome&) const = default;
};

/// All parameters of the single-node model.
///
/// Arrival lists are indexed by packet count: `arrival_lp[a]` is the
/// probability that exactly `a` LP packets arrive in one slot. A loss
/// limit of `std::nullopt` means the class has no loss constraint.
struct ModelParams {
  int e_max = 0;
  int q_lp_max = 0;
  int q_hp_max = 0;
  int k_tx = 0;
  double mu = 0.0;
  std::vector<HarvestOutcome> harvest;
  std::vector<double> arrival_lp;
  std::vector<double> arrival_hp;
  double weight_lp = 0.0;
  double weight_hp = 0.0;
  std::optional<double> loss_limit_lp;
  std::optional<double> loss_limit_hp;

  // Throws ModelError naming the first violated invariant.
  void validate() const;

  const std::vector<double>& arrivals(TrafficClass c) const {
    return c == TrafficClass::LP ? arrival_lp : arrival_hp;
  }
  int capacity(TrafficClass c) const { return c == TrafficClass::LP ? q_lp_max : q_hp_max; }
  double weight(TrafficClass c) const { return c == TrafficClass::LP ? weight_lp : weight_hp; }
  const std::optional<double>& loss_limit(TrafficClass c) const {
    return c == TrafficClass::LP ? loss_limit_lp : loss_limit_hp;
  }
  double mean_arrival(TrafficClass c) const;

  bool operator==(const ModelParams&) const = default;
};

struct State {
  int e = 0;
  int q_lp = 0;
  int q_hp = 0;

  int queue(TrafficClass c) const { return c == TrafficClass::LP ? q_lp : q_hp; }
  auto operator<=>(const State&) const = default;
};

/// Enumerates states with energy as the major key, then the LP queue, then
/// the HP queue.
class StateSpace {
 public:
  explicit StateSpace(const ModelParams& params);

  std::size_t size() const { return states_.size(); }
  bool contains(const State& s) const;
  std::size_t index(const State& s) const;
  const State& state(std::size_t i) const { return states_.at(i); }
  std::span<const State> states() const { return states_; }

  int e_max() const { return e_max_; }
  int q_lp_max() const { return q_lp_max_; }
  int q_hp_max() const { return q_hp_max_; }

  bool operator==(const StateSpace&) const = default;

 private:
  int e_max_;
  int q_lp_max_;
  int q_hp_max_;
  std::vector<State> states_;
};

StateSpace build_state_space(const ModelParams& params);

/// True when `a` transmits from a nonempty queue with at least k_tx energy.
bool transmit_feasible(const ModelParams& params, const State& s, Action a);

/// One-slot next-state distribution: action effect, then arrivals, then
/// clipping. Atoms are merged and sorted by state.
std::vector<std::pair<State, double>> transition(const ModelParams& params, const State& s,
                                                 Action a);

double reward(const ModelParams& params, const State& s, Action a);

/// Per-slot loss term for a class whose queue currently holds `q` packets:
/// the arrival mass that would not fit, divided by the mean arrival rate.
double loss_cost(const ModelParams& params, int q, TrafficClass c);

struct Atom {
  std::uint32_t next = 0;
  double prob = 0.0;

  bool operator==(const Atom&) const = default;
};

// Compressed rows of (next state, probability) atoms.
struct SparseRows {
  std::vector<std::size_t> offsets{0};
  std::vector<Atom> atoms;

  std::size_t num_rows() const { return offsets.size() - 1; }
  std::span<const Atom> row(std::size_t r) const {
    return std::span<const Atom>(atoms).subspan(offsets[r], offsets[r + 1] - offsets[r]);
  }
  void push_row(std::span<const Atom> row_atoms);

  bool operator==(const SparseRows&) const = default;
};

/// The full constrained-MDP model. Row `s * 3 + action_index(a)` holds the
/// (state, action) quantities.
class TransitionModel {
 public:
  const ModelParams& params() const { return params_; }
  const StateSpace& state_space() const { return space_; }
  std::size_t num_states() const { return space_.size(); }
  std::size_t num_rows() const { return kernel_.num_rows(); }

  static std::size_t row_index(std::size_t s, Action a) {
    return s * kNumActions + action_index(a);
  }

  std::span<const Atom> next(std::size_t s, Action a) const {
    return kernel_.row(row_index(s, a));
  }
  const SparseRows& kernel() const { return kernel_; }

  double reward(std::size_t s, Action a) const { return reward_[row_index(s, a)]; }
  std::span<const double> rewards() const { return reward_; }

  // The loss cost depends only on the pre-transition state, so it is
  // shared by all three actions of a state.
  double cost(std::size_t s, TrafficClass c) const { return cost_[cidx(c)][s]; }
  std::span<const double> costs(TrafficClass c) const { return cost_[cidx(c)]; }

  // Probability that the row's action delivers a packet of class c.
  double delivery(std::size_t s, Action a, TrafficClass c) const {
    return delivery_[cidx(c)][row_index(s, a)];
  }
  // Expected number of class-c packets discarded on arrival in this row.
  double expected_drops(std::size_t s, Action a, TrafficClass c) const {
    return drops_[cidx(c)][row_index(s, a)];
  }

  /// Indices of states reachable from `start` under some action sequence,
  /// in ascending order.
  std::vector<std::uint32_t> reachable_from(std::size_t start) const;

  bool operator==(const TransitionModel&) const = default;

 private:
  friend TransitionModel build_model(const ModelParams& params);
  static std::size_t cidx(TrafficClass c) { return static_cast<std::size_t>(c); }

  TransitionModel(ModelParams params, StateSpace space)
      : params_(std::move(params)), space_(std::move(space)) {}

  ModelParams params_;
  StateSpace space_;
  SparseRows kernel_;
  std::vector<double> reward_;
  std::array<std::vector<double>, 2> cost_;
  std::array<std::vector<double>, 2> delivery_;
  std::array<std::vector<double>, 2> drops_;
};

TransitionModel build_model(const ModelParams& params);

// Cold-start state of a harvesting node: empty battery and queues.
inline constexpr State kStartState{0, 0, 0};

}  // namespace ehn
