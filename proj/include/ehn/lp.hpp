#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ehn::lp {

enum class Sense : std::uint8_t { LessEqual, Equal, GreaterEqual };

struct Term {
  std::uint32_t var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::vector<Term> terms;
  Sense sense = Sense::Equal;
  double rhs = 0.0;
  std::string name;
};

/// maximize objective^T x  s.t.  constraints, x >= 0.
///
/// Variables flagged in `pinned_zero` are fixed at zero; they keep their
/// column index but never enter the basis.
struct LinearProgram {
  std::size_t num_vars = 0;
  std::vector<double> objective;
  std::vector<Constraint> constraints;
  std::vector<char> pinned_zero;

  std::size_t count(Sense s) const;
  bool pinned(std::size_t j) const { return !pinned_zero.empty() && pinned_zero[j] != 0; }
};

enum class Status : std::uint8_t { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

std::string to_string(Status s);

struct SimplexOptions {
  double optimality_tol = 1e-10;   // reduced-cost threshold for entering
  double feasibility_tol = 1e-9;   // Harris ratio-test slack
  double pivot_tol = 1e-5;         // smaller column entries count as zero in the ratio test
  double phase1_tol = 1e-8;        // residual artificial mass still called feasible
  std::size_t max_iterations = 500000;
  std::size_t refactor_interval = 64;          // eta file length before a fresh LU
  std::size_t degenerate_streak_for_bland = 5000;  // Bland only as an anti-cycling guard
  double factor_residual_tol = 1e-9;           // |B x - b| accepted after a factorization
  double rank_threshold = 1e-10;               // relative pivot threshold for basis repair
  double refactor_infeasibility_tol = 1e-6;    // negative basic values tolerated at refactor
  bool retry_on_numerical_failure = true;      // rerun with more conservative settings
};

struct Solution {
  Status status = Status::NumericalFailure;
  std::vector<double> x;
  double objective = 0.0;
  std::size_t iterations = 0;
  std::size_t redundant_rows = 0;
  std::string message;
};

/// Two-phase revised primal simplex (sparse LU plus eta file). `iterations` counts pivots
/// across all attempts.
Solution solve(const LinearProgram& problem, const SimplexOptions& options = {});

}  // namespace ehn::lp
