#include "ehn/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <random>
#include <span>

namespace ehn {

void SimConfig::validate() const {
  if (slots < 1) throw ModelError("slots must be >= 1");
  if (warmup_slots >= slots) throw ModelError("warmup_slots must be smaller than slots");
  if (batches < 2) throw ModelError("at least two batches are needed for standard errors");
}

Policy static_policy(std::size_t num_states) {
  return Policy(std::vector<std::array<double, kNumActions>>(num_states, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
}

namespace {

class Uniform01 {
 public:
  explicit Uniform01(std::uint64_t seed) : engine_(seed) {}
  // 53 random mantissa bits; identical on every platform, unlike
  // std::uniform_real_distribution.
  double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

template <typename Weight>
std::size_t pick(std::span<const Weight> weights, double u, auto&& prob_of) {
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double p = prob_of(weights[i]);
    if (p <= 0.0) continue;
    last_positive = i;
    cum += p;
    if (u < cum) return i;
  }
  return last_positive;
}

struct BatchSums {
  std::array<double, 2> delivered{};
  std::array<double, 2> loss_term{};
  std::array<double, 2> arrived{};
  std::array<double, 2> dropped{};
  std::array<double, 2> sojourn{};
  std::array<double, 2> departures{};
  double slots = 0.0;
};

Estimate rate_estimate(const std::vector<BatchSums>& b, auto&& num) {
  double total_num = 0.0;
  double total_slots = 0.0;
  for (const auto& x : b) {
    total_num += num(x);
    total_slots += x.slots;
  }
  const double mean = total_num / total_slots;
  const auto k = static_cast<double>(b.size());
  double ss = 0.0;
  for (const auto& x : b) {
    const double r = num(x) / x.slots;
    ss += (r - mean) * (r - mean);
  }
  return {mean, std::sqrt(ss / (k - 1.0) / k)};
}

// Ratio sum(num)/sum(den) with the delta-method batch standard error.
std::optional<Estimate> ratio_estimate(const std::vector<BatchSums>& b, auto&& num, auto&& den) {
  double total_num = 0.0;
  double total_den = 0.0;
  for (const auto& x : b) {
    total_num += num(x);
    total_den += den(x);
  }
  if (total_den <= 0.0) return std::nullopt;
  const double ratio = total_num / total_den;
  const auto k = static_cast<double>(b.size());
  const double mean_den = total_den / k;
  double ss = 0.0;
  for (const auto& x : b) {
    const double r = num(x) - ratio * den(x);
    ss += r * r;
  }
  return Estimate{ratio, std::sqrt(ss / (k - 1.0) / k) / mean_den};
}

}  // namespace

SimTrace simulate(const TransitionModel& model, const Policy& policy, const SimConfig& cfg) {
  cfg.validate();
  if (policy.num_states() != model.num_states())
    throw std::invalid_argument("policy does not match model");
  const auto& params = model.params();
  const auto& space = model.state_space();

  SimTrace trace;
  trace.seed = cfg.seed;
  if (cfg.keep_trace) trace.records.reserve(cfg.slots);

  const std::uint64_t measured = cfg.slots - cfg.warmup_slots;
  const std::size_t nbatches = static_cast<std::size_t>(std::min<std::uint64_t>(cfg.batches, measured));
  if (nbatches < 2) throw ModelError("too few measured slots for batch standard errors");
  const std::uint64_t batch_len = measured / nbatches;
  std::vector<BatchSums> batches(nbatches);

  Uniform01 uniform(cfg.seed);
  State s = kStartState;
  std::array<std::deque<std::uint64_t>, 2> admitted_at;
  std::array<ClassCounts, 2> counts{};

  const std::span<const double> arrivals_lp(params.arrival_lp);
  const std::span<const double> arrivals_hp(params.arrival_hp);
  const std::span<const HarvestOutcome> harvest(params.harvest);
  const auto identity = [](double p) { return p; };

  for (std::uint64_t t = 0; t < cfg.slots; ++t) {
    const std::size_t si = space.index(s);
    const double u_action = uniform();
    const double u_outcome = uniform();
    const double u_lp = uniform();
    const double u_hp = uniform();

    const auto& row = policy[si];
    const auto action = kAllActions[pick(std::span<const double>(row), u_action, identity)];

    SlotRecord rec;
    rec.slot = t;
    rec.state = s;
    rec.action = action;

    const bool measuring = t >= cfg.warmup_slots;
    BatchSums* batch = nullptr;
    if (measuring) {
      const auto bi = std::min<std::uint64_t>((t - cfg.warmup_slots) / batch_len, nbatches - 1);
      batch = &batches[bi];
      batch->slots += 1.0;
      batch->loss_term[0] += model.cost(si, TrafficClass::LP);
      batch->loss_term[1] += model.cost(si, TrafficClass::HP);
    }

    State next = s;
    if (action == Action::Harvest) {
      const auto& h = harvest[pick(harvest, u_outcome, [](const HarvestOutcome& o) { return o.prob; })];
      next.e = std::min(s.e + h.units, params.e_max);
    } else if (transmit_feasible(params, s, action)) {
      next.e -= params.k_tx;
      if (u_outcome < params.mu) {
        const std::size_t ci = action == Action::TxLP ? 0 : 1;
        if (ci == 0)
          --next.q_lp;
        else
          --next.q_hp;
        rec.tx_success = true;
        const std::uint64_t since = admitted_at[ci].front();
        admitted_at[ci].pop_front();
        ++counts[ci].delivered;
        if (batch) {
          batch->delivered[ci] += 1.0;
          batch->sojourn[ci] += static_cast<double>(t - since);
          batch->departures[ci] += 1.0;
        }
      }
    }

    const int arr_lp = static_cast<int>(pick(arrivals_lp, u_lp, identity));
    const int arr_hp = static_cast<int>(pick(arrivals_hp, u_hp, identity));
    const int room_lp = params.q_lp_max - next.q_lp;
    const int room_hp = params.q_hp_max - next.q_hp;
    const int in_lp = std::min(arr_lp, room_lp);
    const int in_hp = std::min(arr_hp, room_hp);
    next.q_lp += in_lp;
    next.q_hp += in_hp;
    for (int k = 0; k < in_lp; ++k) admitted_at[0].push_back(t);
    for (int k = 0; k < in_hp; ++k) admitted_at[1].push_back(t);

    rec.arrivals_lp = arr_lp;
    rec.arrivals_hp = arr_hp;
    rec.drops_lp = arr_lp - in_lp;
    rec.drops_hp = arr_hp - in_hp;
    if (measuring) {
      counts[0].arrived += static_cast<std::uint64_t>(arr_lp);
      counts[1].arrived += static_cast<std::uint64_t>(arr_hp);
      counts[0].dropped += static_cast<std::uint64_t>(rec.drops_lp);
      counts[1].dropped += static_cast<std::uint64_t>(rec.drops_hp);
      counts[0].admitted += static_cast<std::uint64_t>(in_lp);
      counts[1].admitted += static_cast<std::uint64_t>(in_hp);
      batch->arrived[0] += arr_lp;
      batch->arrived[1] += arr_hp;
      batch->dropped[0] += rec.drops_lp;
      batch->dropped[1] += rec.drops_hp;
    }
    if (cfg.keep_trace) trace.records.push_back(rec);
    s = next;
  }

  // Warmup deliveries were counted above; keep counts to the window.
  counts[0].delivered = 0;
  counts[1].delivered = 0;
  for (const auto& b : batches) {
    counts[0].delivered += static_cast<std::uint64_t>(b.delivered[0]);
    counts[1].delivered += static_cast<std::uint64_t>(b.delivered[1]);
  }

  auto& m = trace.metrics;
  m.measured_slots = measured;
  m.counts_lp = counts[0];
  m.counts_hp = counts[1];
  for (std::size_t ci = 0; ci < 2; ++ci) {
    const auto thr = rate_estimate(batches, [ci](const BatchSums& b) { return b.delivered[ci]; });
    const auto loss = rate_estimate(batches, [ci](const BatchSums& b) { return b.loss_term[ci]; });
    const auto drop = ratio_estimate(
        batches, [ci](const BatchSums& b) { return b.dropped[ci]; },
        [ci](const BatchSums& b) { return b.arrived[ci]; });
    const auto delay = ratio_estimate(
        batches, [ci](const BatchSums& b) { return b.sojourn[ci]; },
        [ci](const BatchSums& b) { return b.departures[ci]; });
    (ci == 0 ? m.throughput_lp : m.throughput_hp) = thr;
    (ci == 0 ? m.loss_lp : m.loss_hp) = loss;
    (ci == 0 ? m.drop_lp : m.drop_hp) = drop.value_or(Estimate{});
    (ci == 0 ? m.delay_lp : m.delay_hp) = delay;
  }
  m.objective = rate_estimate(batches, [&params](const BatchSums& b) {
    return params.weight_lp * b.delivered[0] + params.weight_hp * b.delivered[1];
  });
  return trace;
}

}  // namespace ehn
