// Randomized checks over small parameter sets (capacities up to 6).
#include <doctest.h>

#include <random>
#include <set>

#include "ehn/model.hpp"
#include "oracles.hpp"
#include "random_params.hpp"

using namespace ehn;


TEST_SUITE("properties") {
  TEST_CASE("random transitions respect bounds, energy accounting and reward feasibility") {
    std::mt19937_64 rng(12345);
    std::size_t sampled = 0, violations = 0;
    for (int trial = 0; trial < 400; ++trial) {
      const ModelParams p = test::random_params(rng);
      REQUIRE_NOTHROW(p.validate());
      const StateSpace space(p);
      std::uniform_int_distribution<std::size_t> pick_state(0, space.size() - 1);
      for (int k = 0; k < 30; ++k, ++sampled) {
        const State s = space.state(pick_state(rng));
        const auto a = kAllActions[std::uniform_int_distribution<int>(0, 2)(rng)];
        const auto dist = transition(p, s, a);
        const bool feasible = transmit_feasible(p, s, a);

        double total = 0.0;
        std::set<int> energies;
        for (const auto& [n, pr] : dist) {
          total += pr;
          if (!space.contains(n) || pr < 0.0) ++violations;
          energies.insert(n.e);
          // Departures remove at most one packet per slot.
          if (n.q_lp < s.q_lp - 1 || n.q_hp < s.q_hp - 1) ++violations;
        }
        if (std::abs(total - 1.0) > 1e-12) ++violations;

        std::set<int> allowed;
        if (a == Action::Harvest) {
          for (const auto& h : p.harvest) allowed.insert(std::min(s.e + h.units, p.e_max));
        } else {
          allowed.insert(feasible ? s.e - p.k_tx : s.e);
        }
        for (int e : energies)
          if (!allowed.count(e) || e < 0) ++violations;

        const double r = reward(p, s, a);
        if (r > 0.0) {
          const bool tx = a == Action::TxLP ? s.q_lp > 0 : a == Action::TxHP ? s.q_hp > 0 : false;
          if (!tx || s.e < p.k_tx) ++violations;
        }

        // Same distribution as the brute-force enumeration.
        const auto want = oracle::transition(p, {s.e, s.q_lp, s.q_hp}, static_cast<int>(a));
        if (want.size() != dist.size()) ++violations;
        for (const auto& [n, pr] : dist) {
          const auto it = want.find({n.e, n.q_lp, n.q_hp});
          if (it == want.end() || std::abs(it->second - pr) > 1e-14) ++violations;
        }
      }
      for (TrafficClass c : {TrafficClass::LP, TrafficClass::HP}) {
        if (p.mean_arrival(c) == 0.0) continue;
        for (int q = 1; q <= p.capacity(c); ++q)
          if (loss_cost(p, q, c) < loss_cost(p, q - 1, c)) ++violations;
      }
    }
    CHECK(sampled >= 10000);
    CHECK(violations == 0);
  }
}
