// Random small parameter sets (capacities up to 6).
#pragma once

#include <random>
#include <set>

#include "ehn/model.hpp"

namespace test {

inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) total += (x = u(rng));
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) acc += (w[i] /= total);
  w.back() = 1.0 - acc;
  return w;
}

inline ehn::ModelParams random_params(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  ehn::ModelParams p;
  p.e_max = pick(1, 6);
  p.q_lp_max = pick(1, 6);
  p.q_hp_max = pick(1, 6);
  p.k_tx = pick(1, p.e_max);
  p.mu = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  std::set<int> units;
  const int n_harvest = pick(1, 3);
  while (static_cast<int>(units.size()) < n_harvest) units.insert(pick(0, 4));
  const auto hp = random_distribution(rng, units.size());
  std::size_t i = 0;
  for (int u : units) p.harvest.push_back({u, hp[i++]});
  p.arrival_lp = random_distribution(rng, static_cast<std::size_t>(pick(1, 3)));
  p.arrival_hp = random_distribution(rng, static_cast<std::size_t>(pick(1, 3)));
  p.weight_lp = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  p.weight_hp = 1.0 - p.weight_lp;
  return p;
}

}  // namespace test
