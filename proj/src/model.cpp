#include "ehn/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace ehn {

namespace {

constexpr double kSumTolerance = 1e-12;

void require(bool ok, const std::string& what) {
  if (!ok) throw ModelError(what);
}

void check_distribution(std::span<const double> probs, const std::string& name) {
  require(!probs.empty(), name + ": distribution is empty");
  double total = 0.0;
  for (double p : probs) {
    require(std::isfinite(p) && p >= 0.0 && p <= 1.0, name + ": probability outside [0,1]");
    total += p;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << name << ": probabilities sum to " << total << ", expected 1";
    throw ModelError(msg.str());
  }
}

}  // namespace

std::string_view to_string(Action a) {
  switch (a) {
    case Action::Harvest:
      return "harvest";
    case Action::TxLP:
      return "tx_lp";
    case Action::TxHP:
      return "tx_hp";
  }
  return "?";
}

std::string_view to_string(TrafficClass c) { return c == TrafficClass::LP ? "lp" : "hp"; }

double ModelParams::mean_arrival(TrafficClass c) const {
  const auto& dist = arrivals(c);
  double mean = 0.0;
  for (std::size_t a = 0; a < dist.size(); ++a) mean += static_cast<double>(a) * dist[a];
  return mean;
}

void ModelParams::validate() const {
  require(e_max >= 1, "e_max must be >= 1");
  require(q_lp_max >= 1, "q_lp_max must be >= 1");
  require(q_hp_max >= 1, "q_hp_max must be >= 1");
  require(k_tx >= 1, "k_tx must be >= 1");
  require(k_tx <= e_max, "k_tx must not exceed e_max (no transmission would ever be feasible)");
  require(std::isfinite(mu) && mu >= 0.0 && mu <= 1.0, "mu must lie in [0,1]");

  require(!harvest.empty(), "harvest: distribution is empty");
  std::vector<double> harvest_probs;
  std::set<int> seen_units;
  for (const auto& h : harvest) {
    require(h.units >= 0, "harvest: energy units must be >= 0");
    require(seen_units.insert(h.units).second, "harvest: duplicate energy quantum");
    harvest_probs.push_back(h.prob);
  }
  check_distribution(harvest_probs, "harvest");
  check_distribution(arrival_lp, "arrival_lp");
  check_distribution(arrival_hp, "arrival_hp");

  require(std::isfinite(weight_lp) && weight_lp >= 0.0, "weight_lp must be a nonnegative real");
  require(std::isfinite(weight_hp) && weight_hp >= 0.0, "weight_hp must be a nonnegative real");

  for (TrafficClass c : {TrafficClass::LP, TrafficClass::HP}) {
    const auto& limit = loss_limit(c);
    const std::string name = "loss_limit_" + std::string(to_string(c));
    if (!limit) continue;
    require(std::isfinite(*limit) && *limit >= 0.0 && *limit <= 1.0, name + " must lie in [0,1]");
    require(mean_arrival(c) > 0.0,
            name + " is finite but the mean arrival rate is zero (loss cost undefined)");
  }
}

StateSpace::StateSpace(const ModelParams& params)
    : e_max_(params.e_max), q_lp_max_(params.q_lp_max), q_hp_max_(params.q_hp_max) {
  params.validate();
  states_.reserve(static_cast<std::size_t>(e_max_ + 1) * (q_lp_max_ + 1) * (q_hp_max_ + 1));
  for (int e = 0; e <= e_max_; ++e)
    for (int l = 0; l <= q_lp_max_; ++l)
      for (int h = 0; h <= q_hp_max_; ++h) states_.push_back({e, l, h});
}

bool StateSpace::contains(const State& s) const {
  return s.e >= 0 && s.e <= e_max_ && s.q_lp >= 0 && s.q_lp <= q_lp_max_ && s.q_hp >= 0 &&
         s.q_hp <= q_hp_max_;
}

std::size_t StateSpace::index(const State& s) const {
  if (!contains(s)) {
    std::ostringstream msg;
    msg << "state (" << s.e << "," << s.q_lp << "," << s.q_hp << ") is out of bounds";
    throw ContractViolation(msg.str());
  }
  const auto lp = static_cast<std::size_t>(q_lp_max_ + 1);
  const auto hp = static_cast<std::size_t>(q_hp_max_ + 1);
  return (static_cast<std::size_t>(s.e) * lp + static_cast<std::size_t>(s.q_lp)) * hp +
         static_cast<std::size_t>(s.q_hp);
}

StateSpace build_state_space(const ModelParams& params) { return StateSpace(params); }

namespace {

void check_bounds(const ModelParams& params, const State& s) {
  if (s.e < 0 || s.e > params.e_max || s.q_lp < 0 || s.q_lp > params.q_lp_max || s.q_hp < 0 ||
      s.q_hp > params.q_hp_max) {
    std::ostringstream msg;
    msg << "state (" << s.e << "," << s.q_lp << "," << s.q_hp << ") is out of bounds";
    throw ContractViolation(msg.str());
  }
}

// Distribution after the action effect, before arrivals.
std::vector<std::pair<State, double>> post_action(const ModelParams& params, const State& s,
                                                  Action a) {
  std::vector<std::pair<State, double>> out;
  if (a == Action::Harvest) {
    for (const auto& h : params.harvest) {
      if (h.prob <= 0.0) continue;
      out.push_back({{std::min(s.e + h.units, params.e_max), s.q_lp, s.q_hp}, h.prob});
    }
    return out;
  }
  if (!transmit_feasible(params, s, a)) {
    out.push_back({s, 1.0});
    return out;
  }
  // Energy is spent on the attempt whether or not the packet gets through.
  State sent = s;
  sent.e -= params.k_tx;
  State kept = sent;
  if (a == Action::TxLP)
    --sent.q_lp;
  else
    --sent.q_hp;
  if (params.mu > 0.0) out.push_back({sent, params.mu});
  if (params.mu < 1.0) out.push_back({kept, 1.0 - params.mu});
  return out;
}

double overflow_mean(const std::vector<double>& arrivals, int queue, int capacity) {
  double drops = 0.0;
  for (std::size_t n = 0; n < arrivals.size(); ++n) {
    const int excess = queue + static_cast<int>(n) - capacity;
    if (excess > 0) drops += arrivals[n] * excess;
  }
  return drops;
}

}  // namespace

bool transmit_feasible(const ModelParams& params, const State& s, Action a) {
  if (a == Action::Harvest) return false;
  const int queue = a == Action::TxLP ? s.q_lp : s.q_hp;
  return queue > 0 && s.e >= params.k_tx;
}

std::vector<std::pair<State, double>> transition(const ModelParams& params, const State& s,
                                                 Action a) {
  check_bounds(params, s);
  std::map<State, double> merged;
  for (const auto& [mid, p] : post_action(params, s, a)) {
    for (std::size_t al = 0; al < params.arrival_lp.size(); ++al) {
      const double pl = params.arrival_lp[al];
      if (pl <= 0.0) continue;
      for (std::size_t ah = 0; ah < params.arrival_hp.size(); ++ah) {
        const double ph = params.arrival_hp[ah];
        if (ph <= 0.0) continue;
        const State next{mid.e, std::min(mid.q_lp + static_cast<int>(al), params.q_lp_max),
                         std::min(mid.q_hp + static_cast<int>(ah), params.q_hp_max)};
        merged[next] += p * pl * ph;
      }
    }
  }
  return {merged.begin(), merged.end()};
}

double reward(const ModelParams& params, const State& s, Action a) {
  check_bounds(params, s);
  if (!transmit_feasible(params, s, a)) return 0.0;
  const double w = a == Action::TxLP ? params.weight_lp : params.weight_hp;
  return w * params.mu;
}

double loss_cost(const ModelParams& params, int q, TrafficClass c) {
  const int capacity = params.capacity(c);
  if (q < 0 || q > capacity) throw ContractViolation("queue occupancy out of bounds");
  const auto& dist = params.arrivals(c);
  const double mean = params.mean_arrival(c);
  // Sum over a = capacity - q + 1 .. A; empty when the queue can absorb any burst.
  double overflow_mass = 0.0;
  for (std::size_t a = static_cast<std::size_t>(capacity - q + 1); a < dist.size(); ++a)
    overflow_mass += dist[a];
  if (overflow_mass == 0.0) return 0.0;
  if (mean <= 0.0) throw ModelError("loss cost undefined: zero mean arrival rate");
  return overflow_mass / mean;
}

void SparseRows::push_row(std::span<const Atom> row_atoms) {
  atoms.insert(atoms.end(), row_atoms.begin(), row_atoms.end());
  offsets.push_back(atoms.size());
}

TransitionModel build_model(const ModelParams& params) {
  TransitionModel model(params, StateSpace(params));
  const auto& space = model.space_;
  const std::size_t n = space.size();
  const std::size_t rows = n * kNumActions;

  model.reward_.reserve(rows);
  for (auto& v : model.delivery_) v.reserve(rows);
  for (auto& v : model.drops_) v.reserve(rows);

  const bool lp_cost = params.mean_arrival(TrafficClass::LP) > 0.0;
  const bool hp_cost = params.mean_arrival(TrafficClass::HP) > 0.0;
  model.cost_[0].resize(n, 0.0);
  model.cost_[1].resize(n, 0.0);

  std::vector<Atom> row;
  for (std::size_t i = 0; i < n; ++i) {
    const State& s = space.state(i);
    if (lp_cost) model.cost_[0][i] = loss_cost(params, s.q_lp, TrafficClass::LP);
    if (hp_cost) model.cost_[1][i] = loss_cost(params, s.q_hp, TrafficClass::HP);

    for (Action a : kAllActions) {
      row.clear();
      for (const auto& [next, p] : transition(params, s, a))
        row.push_back({static_cast<std::uint32_t>(space.index(next)), p});
      model.kernel_.push_row(row);
      model.reward_.push_back(reward(params, s, a));

      const bool feasible = transmit_feasible(params, s, a);
      model.delivery_[0].push_back(feasible && a == Action::TxLP ? params.mu : 0.0);
      model.delivery_[1].push_back(feasible && a == Action::TxHP ? params.mu : 0.0);

      double drops_lp = 0.0;
      double drops_hp = 0.0;
      for (const auto& [mid, p] : post_action(params, s, a)) {
        drops_lp += p * overflow_mean(params.arrival_lp, mid.q_lp, params.q_lp_max);
        drops_hp += p * overflow_mean(params.arrival_hp, mid.q_hp, params.q_hp_max);
      }
      model.drops_[0].push_back(drops_lp);
      model.drops_[1].push_back(drops_hp);
    }
  }
  return model;
}

std::vector<std::uint32_t> TransitionModel::reachable_from(std::size_t start) const {
  std::vector<char> seen(num_states(), 0);
  std::vector<std::uint32_t> stack{static_cast<std::uint32_t>(start)};
  seen.at(start) = 1;
  while (!stack.empty()) {
    const std::uint32_t s = stack.back();
    stack.pop_back();
    for (Action a : kAllActions) {
      for (const Atom& atom : next(s, a)) {
        if (seen[atom.next]) continue;
        seen[atom.next] = 1;
        stack.push_back(atom.next);
      }
    }
  }
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (seen[i]) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

}  // namespace ehn
