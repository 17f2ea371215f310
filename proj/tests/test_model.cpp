#include <doctest.h>

#include <cmath>
#include <random>

#include "ehn/config.hpp"
#include "ehn/model.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace ehn;

TEST_SUITE("model") {
  TEST_CASE("state space size and canonical index") {
    ModelParams p = test::shipped_config().model;
    CHECK(StateSpace(p).size() == 1275);

    ModelParams t = oracle::tiny_params();
    const StateSpace tiny(t);
    CHECK(tiny.size() == 12);
    CHECK(tiny.index({2, 1, 1}) == 11);
    CHECK(tiny.index({0, 0, 0}) == 0);
    CHECK(tiny.index({1, 0, 1}) == 5);
    for (std::size_t i = 0; i < tiny.size(); ++i) CHECK(tiny.index(tiny.state(i)) == i);
    CHECK_THROWS_AS(tiny.index({3, 0, 0}), ContractViolation);
    CHECK_THROWS_AS(tiny.index({0, -1, 0}), ContractViolation);
  }

  TEST_CASE("degenerate bounds are rejected") {
    ModelParams p = oracle::tiny_params();
    p.e_max = 0;
    p.q_lp_max = 0;
    p.q_hp_max = 0;
    CHECK_THROWS_AS(StateSpace{p}, ModelError);
    p = oracle::tiny_params();
    p.k_tx = 3;
    CHECK_THROWS_AS(p.validate(), ModelError);
    p = oracle::tiny_params();
    p.mu = 1.2;
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("mu"), ModelError);
    p = oracle::tiny_params();
    p.arrival_hp = {0.5, 0.4};
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("arrival_hp"), ModelError);
    p = oracle::tiny_params();
    p.arrival_hp = {1.0};
    p.loss_limit_hp = 0.1;
    CHECK_THROWS_AS(p.validate(), ModelError);
  }

  TEST_CASE("transmit convolved with arrivals gives the four-atom example") {
    ModelParams p;
    p.e_max = 8;
    p.q_lp_max = 4;
    p.q_hp_max = 4;
    p.k_tx = 4;
    p.mu = 0.99;
    p.harvest = {{4, 0.98}, {0, 0.02}};
    p.arrival_lp = {0.85, 0.15};
    p.arrival_hp = {1.0};
    p.weight_lp = p.weight_hp = 0.5;
    const auto d = transition(p, {4, 1, 0}, Action::TxLP);
    REQUIRE(d.size() == 3);
    CHECK(d[0].first == State{0, 0, 0});
    CHECK(d[0].second == doctest::Approx(0.8415).epsilon(1e-14));
    CHECK(d[1].first == State{0, 1, 0});
    CHECK(d[1].second == doctest::Approx(0.157).epsilon(1e-14));
    CHECK(d[2].first == State{0, 2, 0});
    CHECK(d[2].second == doctest::Approx(0.0015).epsilon(1e-14));
  }

  TEST_CASE("saturation and idle transmit") {
    ModelParams p = test::shipped_config().model;
    p.arrival_lp = {1.0};
    p.arrival_hp = {1.0};
    p.loss_limit_hp.reset();
    const auto full = transition(p, {p.e_max, 0, 0}, Action::Harvest);
    REQUIRE(full.size() == 1);
    CHECK(full[0].first == State{p.e_max, 0, 0});
    CHECK(full[0].second == 1.0);
    const auto idle = transition(p, {0, 1, 0}, Action::TxLP);
    REQUIRE(idle.size() == 1);
    CHECK(idle[0].first == State{0, 1, 0});
  }

  TEST_CASE("tiny model equals the brute-force enumeration") {
    const ModelParams p = oracle::tiny_params();
    const auto model = build_model(p);
    const auto& space = model.state_space();
    for (std::size_t s = 0; s < space.size(); ++s) {
      const State st = space.state(s);
      for (Action a : kAllActions) {
        const auto want = oracle::transition(p, {st.e, st.q_lp, st.q_hp}, static_cast<int>(a));
        const auto row = model.next(s, a);
        REQUIRE(row.size() == want.size());
        for (const auto& atom : row) {
          const State n = space.state(atom.next);
          const auto it = want.find({n.e, n.q_lp, n.q_hp});
          REQUIRE(it != want.end());
          CHECK(atom.prob == doctest::Approx(it->second).epsilon(1e-15));
        }
        CHECK(model.reward(s, a) ==
              doctest::Approx(oracle::reward(p, {st.e, st.q_lp, st.q_hp}, static_cast<int>(a))));
      }
    }
  }

  TEST_CASE("reward values") {
    ModelParams p = test::shipped_config().model;
    p.weight_hp = 0.9;
    p.weight_lp = 0.1;
    CHECK(reward(p, {p.k_tx, 0, 1}, Action::TxHP) == doctest::Approx(0.891));
    CHECK(reward(p, {p.k_tx, 0, 1}, Action::TxLP) == 0.0);
    CHECK(reward(p, {p.k_tx - 1, 3, 3}, Action::TxLP) == 0.0);
    CHECK(reward(p, {p.k_tx - 1, 3, 3}, Action::TxHP) == 0.0);
    CHECK(reward(p, {p.e_max, 3, 3}, Action::Harvest) == 0.0);
  }

  TEST_CASE("loss cost follows the tail-mass formula") {
    ModelParams p = test::shipped_config().model;
    CHECK(loss_cost(p, 4, TrafficClass::LP) == doctest::Approx(1.0));
    CHECK(loss_cost(p, 0, TrafficClass::LP) == 0.0);
    CHECK(loss_cost(p, 3, TrafficClass::HP) == 0.0);

    p.q_lp_max = 2;
    p.arrival_lp = {0.7, 0.2, 0.1};
    CHECK(loss_cost(p, 2, TrafficClass::LP) == doctest::Approx(0.75));
    CHECK(loss_cost(p, 1, TrafficClass::LP) == doctest::Approx(0.25));
    for (int q = 0; q <= 2; ++q)
      CHECK(loss_cost(p, q, TrafficClass::LP) ==
            doctest::Approx(oracle::loss(p.arrival_lp, p.q_lp_max, q)));
  }

  TEST_CASE("shipped model rows are stochastic") {
    const auto model = build_model(test::shipped_config().model);
    CHECK(model.num_states() == 1275);
    CHECK(model.num_rows() == 3825);
    double worst = 0.0;
    for (std::size_t r = 0; r < model.num_rows(); ++r) {
      double total = 0.0;
      for (const auto& atom : model.kernel().row(r)) total += atom.prob;
      worst = std::max(worst, std::abs(total - 1.0));
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("construction is deterministic") {
    const auto p = test::shipped_config().model;
    CHECK(build_model(p) == build_model(p));
  }

  TEST_CASE("no-arrival model is absorbing in empty queues") {
    ModelParams p = oracle::tiny_params();
    p.arrival_lp = {1.0};
    p.arrival_hp = {1.0};
    const auto model = build_model(p);
    const auto reach = model.reachable_from(0);
    for (auto s : reach) {
      CHECK(model.state_space().state(s).q_lp == 0);
      CHECK(model.state_space().state(s).q_hp == 0);
      for (Action a : kAllActions) CHECK(model.reward(s, a) == 0.0);
    }
  }
}
