#include <doctest.h>

#include <random>

#include "ehn/lp.hpp"
#include "oracles.hpp"

using namespace ehn::lp;

namespace {

LinearProgram make(std::size_t n, std::vector<double> c) {
  LinearProgram lp;
  lp.num_vars = n;
  lp.objective = std::move(c);
  return lp;
}

void add(LinearProgram& lp, std::vector<std::pair<std::uint32_t, double>> terms, Sense s, double rhs) {
  Constraint c;
  for (auto [v, a] : terms) c.terms.push_back({v, a});
  c.sense = s;
  c.rhs = rhs;
  lp.constraints.push_back(std::move(c));
}

}  // namespace

TEST_SUITE("simplex") {
  TEST_CASE("textbook maximum") {
    auto lp = make(2, {3, 5});
    add(lp, {{0, 1}}, Sense::LessEqual, 4);
    add(lp, {{1, 2}}, Sense::LessEqual, 12);
    add(lp, {{0, 3}, {1, 2}}, Sense::LessEqual, 18);
    const auto sol = solve(lp);
    REQUIRE(sol.status == Status::Optimal);
    CHECK(sol.objective == doctest::Approx(36));
    CHECK(sol.x[0] == doctest::Approx(2));
    CHECK(sol.x[1] == doctest::Approx(6));
  }

  TEST_CASE("equalities, lower bounds and negative right-hand sides") {
    // max x + y  s.t.  x + y = 3, x >= 1, -y >= -1.5
    auto lp = make(2, {1, 2});
    add(lp, {{0, 1}, {1, 1}}, Sense::Equal, 3);
    add(lp, {{0, 1}}, Sense::GreaterEqual, 1);
    add(lp, {{1, -1}}, Sense::GreaterEqual, -1.5);
    const auto sol = solve(lp);
    REQUIRE(sol.status == Status::Optimal);
    CHECK(sol.x[0] == doctest::Approx(1.5));
    CHECK(sol.x[1] == doctest::Approx(1.5));
    CHECK(sol.objective == doctest::Approx(4.5));
  }

  TEST_CASE("infeasible") {
    auto lp = make(2, {1, 1});
    add(lp, {{0, 1}, {1, 1}}, Sense::LessEqual, 1);
    add(lp, {{0, 1}, {1, 1}}, Sense::GreaterEqual, 2);
    CHECK(solve(lp).status == Status::Infeasible);
  }

  TEST_CASE("unbounded") {
    auto lp = make(2, {1, 0});
    add(lp, {{0, 1}, {1, -1}}, Sense::LessEqual, 1);
    CHECK(solve(lp).status == Status::Unbounded);
  }

  TEST_CASE("cycling example terminates at the optimum") {
    // Beale's example, stated as a maximization.
    auto lp = make(4, {0.75, -20, 0.5, -6});
    add(lp, {{0, 0.25}, {1, -8}, {2, -1}, {3, 9}}, Sense::LessEqual, 0);
    add(lp, {{0, 0.5}, {1, -12}, {2, -0.5}, {3, 3}}, Sense::LessEqual, 0);
    add(lp, {{2, 1}}, Sense::LessEqual, 1);
    for (std::size_t streak : {1, 5000}) {
      SimplexOptions opt;
      opt.degenerate_streak_for_bland = streak;
      const auto sol = solve(lp, opt);
      REQUIRE(sol.status == Status::Optimal);
      CHECK(sol.objective == doctest::Approx(1.25));
    }
  }

  TEST_CASE("redundant equality rows") {
    auto lp = make(2, {1, 0});
    add(lp, {{0, 1}, {1, 1}}, Sense::Equal, 1);
    add(lp, {{0, 2}, {1, 2}}, Sense::Equal, 2);
    const auto sol = solve(lp);
    REQUIRE(sol.status == Status::Optimal);
    CHECK(sol.objective == doctest::Approx(1));
    CHECK(sol.redundant_rows == 1);
  }

  TEST_CASE("pinned variables stay at zero") {
    auto lp = make(2, {1, 2});
    add(lp, {{0, 1}, {1, 1}}, Sense::LessEqual, 1);
    lp.pinned_zero = {0, 1};
    const auto sol = solve(lp);
    REQUIRE(sol.status == Status::Optimal);
    CHECK(sol.x[1] == 0.0);
    CHECK(sol.objective == doctest::Approx(1));

    // A row left with only pinned variables decides feasibility on its own.
    add(lp, {{1, 1}}, Sense::GreaterEqual, 0.5);
    CHECK(solve(lp).status == Status::Infeasible);
  }

  TEST_CASE("malformed programs are rejected") {
    auto lp = make(2, {1});
    CHECK_THROWS_AS(solve(lp), std::invalid_argument);
    lp = make(1, {1});
    add(lp, {{3, 1}}, Sense::LessEqual, 1);
    CHECK_THROWS_AS(solve(lp), std::invalid_argument);
  }

  TEST_CASE("random small programs match vertex enumeration") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-1.0, 3.0), rhs(0.5, 4.0), cost(-1.0, 2.0);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
      const int n = 2 + trial % 3, m = 2 + trial % 4;
      Eigen::MatrixXd A(m, n);
      Eigen::VectorXd b(m), c(n);
      for (int i = 0; i < m; ++i) {
        b(i) = rhs(rng);
        for (int j = 0; j < n; ++j) A(i, j) = coef(rng);
      }
      for (int j = 0; j < n; ++j) c(j) = cost(rng);
      // Box every variable so the optimum is finite.
      Eigen::MatrixXd Ab(m + n, n);
      Ab << A, Eigen::MatrixXd::Identity(n, n);
      Eigen::VectorXd bb(m + n);
      bb << b, Eigen::VectorXd::Constant(n, 5.0);

      auto lp = make(static_cast<std::size_t>(n), std::vector<double>(c.data(), c.data() + n));
      for (int i = 0; i < m + n; ++i) {
        std::vector<std::pair<std::uint32_t, double>> terms;
        for (int j = 0; j < n; ++j) terms.push_back({static_cast<std::uint32_t>(j), Ab(i, j)});
        add(lp, terms, Sense::LessEqual, bb(i));
      }
      const auto want = oracle::max_by_vertices(Ab, bb, c);
      const auto got = solve(lp);
      REQUIRE(want.has_value());  // x = 0 is always feasible here
      REQUIRE(got.status == Status::Optimal);
      CHECK(got.objective == doctest::Approx(*want).epsilon(1e-9));
      ++checked;
    }
    CHECK(checked == 300);
  }
}
