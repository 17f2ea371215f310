#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ehn/cmdp.hpp"
#include "ehn/evaluate.hpp"
#include "ehn/model.hpp"

namespace ehn {

/// Copy of `p` with weights (1 - w_hp, w_hp).
ModelParams with_hp_weight(ModelParams p, double w_hp);

/// Copy of `p` with Bernoulli(rate) arrivals for both classes. A finite
/// loss limit is dropped for a class whose rate is zero: nothing can be
/// lost and the loss term has no denominator.
ModelParams with_arrival_rate(ModelParams p, double rate);

struct SolvedPoint {
  SolveReport report;
  std::optional<Policy> policy;    // present when the solve is optimal
  std::optional<Metrics> metrics;  // analytic metrics of `policy`
  double flow_residual = 0.0;
  double measure_total = 0.0;
};

/// Build, solve, extract and evaluate. Model errors propagate.
SolvedPoint solve_point(const TransitionModel& model);
SolvedPoint solve_point(const ModelParams& params);

struct WeightRow {
  double w_hp = 0.0;
  SolvedPoint point;
};

struct ArrivalRow {
  double rate = 0.0;
  SolvedPoint optimal;
  std::optional<Metrics> static_metrics;
};

/// Points run concurrently on up to `threads` workers (0 = hardware).
/// Per-point failures are recorded in the row; the sweep continues.
std::vector<WeightRow> sweep_weight(const ModelParams& base, std::span<const double> w_hp,
                                    unsigned threads = 0);
std::vector<ArrivalRow> sweep_arrival(const ModelParams& base, std::span<const double> rates,
                                      unsigned threads = 0);

}  // namespace ehn
