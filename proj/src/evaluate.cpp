#include "ehn/evaluate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace ehn {

SparseRows induced_chain(const TransitionModel& model, const Policy& policy) {
  const std::size_t n = model.num_states();
  if (policy.num_states() != n) throw std::invalid_argument("policy does not match model");
  SparseRows chain;
  chain.offsets.reserve(n + 1);
  std::map<std::uint32_t, double> row;
  std::vector<Atom> atoms;
  for (std::size_t s = 0; s < n; ++s) {
    row.clear();
    for (Action a : kAllActions) {
      const double pa = policy.prob(s, a);
      if (pa <= 0.0) continue;
      for (const Atom& atom : model.next(s, a)) row[atom.next] += pa * atom.prob;
    }
    atoms.clear();
    for (const auto& [next, p] : row) atoms.push_back({next, p});
    chain.push_row(atoms);
  }
  return chain;
}

namespace {

void left_multiply(const SparseRows& chain, const std::vector<double>& d, std::vector<double>& out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t s = 0; s < d.size(); ++s) {
    const double ds = d[s];
    if (ds == 0.0) continue;
    for (const Atom& a : chain.row(s)) out[a.next] += ds * a.prob;
  }
}

double invariance_residual(const SparseRows& chain, const std::vector<double>& d) {
  std::vector<double> dp(d.size());
  left_multiply(chain, d, dp);
  double r = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) r = std::max(r, std::abs(dp[i] - d[i]));
  return r;
}

std::vector<std::uint32_t> reachable(const SparseRows& chain, std::size_t start) {
  std::vector<char> seen(chain.num_rows(), 0);
  std::vector<std::uint32_t> stack{static_cast<std::uint32_t>(start)}, out;
  seen[start] = 1;
  while (!stack.empty()) {
    const auto s = stack.back();
    stack.pop_back();
    out.push_back(s);
    for (const Atom& a : chain.row(s)) {
      if (a.prob <= 0.0 || seen[a.next]) continue;
      seen[a.next] = 1;
      stack.push_back(a.next);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Tarjan's algorithm without recursion; returns the component id per vertex
// (only vertices in `verts` are visited).
std::vector<int> strong_components(const SparseRows& chain, const std::vector<std::uint32_t>& verts,
                                   int& count) {
  const std::size_t n = chain.num_rows();
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<std::uint32_t> stack;
  struct Frame {
    std::uint32_t v;
    std::size_t edge;
  };
  std::vector<Frame> call;
  int next_index = 0;
  count = 0;
  for (std::uint32_t root : verts) {
    if (index[root] != -1) continue;
    call.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      const auto row = chain.row(f.v);
      if (f.edge < row.size()) {
        const Atom& a = row[f.edge++];
        if (a.prob <= 0.0) continue;
        const auto w = a.next;
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const std::uint32_t v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
    }
  }
  return comp;
}

std::vector<double> dense_long_run(const SparseRows& chain, std::size_t start) {
  const std::size_t n = chain.num_rows();
  const auto verts = reachable(chain, start);
  int ncomp = 0;
  const auto comp = strong_components(chain, verts, ncomp);

  std::vector<char> closed(static_cast<std::size_t>(ncomp), 1);
  for (auto v : verts)
    for (const Atom& a : chain.row(v))
      if (a.prob > 0.0 && comp[a.next] != comp[v]) closed[static_cast<std::size_t>(comp[v])] = 0;

  std::vector<std::uint32_t> transient;
  std::vector<std::vector<std::uint32_t>> classes(static_cast<std::size_t>(ncomp));
  for (auto v : verts) {
    if (closed[static_cast<std::size_t>(comp[v])])
      classes[static_cast<std::size_t>(comp[v])].push_back(v);
    else
      transient.push_back(v);
  }

  // Probability of ending in each closed class.
  std::vector<double> weight(static_cast<std::size_t>(ncomp), 0.0);
  if (closed[static_cast<std::size_t>(comp[start])]) {
    weight[static_cast<std::size_t>(comp[start])] = 1.0;
  } else {
    std::vector<Eigen::Index> tpos(n, -1);
    for (std::size_t k = 0; k < transient.size(); ++k)
      tpos[transient[k]] = static_cast<Eigen::Index>(k);
    const auto nt = static_cast<Eigen::Index>(transient.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(nt, nt);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nt, ncomp);
    for (Eigen::Index k = 0; k < nt; ++k) {
      for (const Atom& at : chain.row(transient[static_cast<std::size_t>(k)])) {
        if (tpos[at.next] >= 0)
          a(k, tpos[at.next]) -= at.prob;
        else
          rhs(k, comp[at.next]) += at.prob;
      }
    }
    const Eigen::MatrixXd h = a.partialPivLu().solve(rhs);
    for (int c = 0; c < ncomp; ++c)
      if (closed[static_cast<std::size_t>(c)])
        weight[static_cast<std::size_t>(c)] = h(tpos[start], c);
  }

  std::vector<double> d(n, 0.0);
  for (int c = 0; c < ncomp; ++c) {
    const auto& cls = classes[static_cast<std::size_t>(c)];
    const double w = weight[static_cast<std::size_t>(c)];
    if (cls.empty() || w <= 0.0) continue;
    std::vector<Eigen::Index> pos(n, -1);
    for (std::size_t k = 0; k < cls.size(); ++k) pos[cls[k]] = static_cast<Eigen::Index>(k);
    const auto m = static_cast<Eigen::Index>(cls.size());
    // pi (P - I) = 0 transposed, last equation replaced by sum pi = 1.
    Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index k = 0; k < m; ++k)
      for (const Atom& at : chain.row(cls[static_cast<std::size_t>(k)])) a(pos[at.next], k) += at.prob;
    a.row(m - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    b(m - 1) = 1.0;
    const Eigen::VectorXd pi = a.partialPivLu().solve(b);
    for (Eigen::Index k = 0; k < m; ++k) d[cls[static_cast<std::size_t>(k)]] += w * std::max(pi(k), 0.0);
  }
  double total = 0.0;
  for (double v : d) total += v;
  for (double& v : d) v /= total;
  return d;
}

}  // namespace

StationaryResult stationary_distribution(const SparseRows& chain, std::size_t start,
                                         const StationaryOptions& options) {
  const std::size_t n = chain.num_rows();
  if (start >= n) throw ContractViolation("start state out of range");
  StationaryResult res;
  std::vector<double> d(n, 0.0), dp(n, 0.0);
  d[start] = 1.0;
  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < options.max_power_iterations; ++k) {
    left_multiply(chain, d, dp);
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(dp[i] - d[i]));
    res.iterations = k;
    if (residual <= options.residual_tol) break;
    // The lazy chain shares the stationary law and is aperiodic.
    for (std::size_t i = 0; i < n; ++i) d[i] = 0.5 * (d[i] + dp[i]);
  }
  if (residual <= options.residual_tol) {
    double total = 0.0;
    for (double v : d) total += v;
    for (double& v : d) v /= total;
    res.distribution = std::move(d);
    res.residual = invariance_residual(chain, res.distribution);
    return res;
  }
  if (reachable(chain, start).size() >= options.dense_fallback_limit) {
    std::ostringstream msg;
    msg << "power iteration did not converge after " << options.max_power_iterations
        << " iterations (residual " << residual << ")";
    throw ConvergenceError(msg.str(), residual);
  }
  res.distribution = dense_long_run(chain, start);
  res.residual = invariance_residual(chain, res.distribution);
  res.dense = true;
  return res;
}

StationaryResult stationary_distribution(const TransitionModel& model, const Policy& policy,
                                         const StationaryOptions& options) {
  return stationary_distribution(induced_chain(model, policy),
                                 model.state_space().index(kStartState), options);
}

Metrics metrics_from_distribution(const TransitionModel& model, const Policy& policy,
                                  std::span<const double> distribution) {
  const auto& params = model.params();
  Metrics m;
  std::array<double, 2> thr{}, loss{}, drops{}, queue{};
  for (std::size_t s = 0; s < model.num_states(); ++s) {
    const double ds = distribution[s];
    if (ds == 0.0) continue;
    const State& st = model.state_space().state(s);
    for (TrafficClass c : {TrafficClass::LP, TrafficClass::HP}) {
      const auto ci = static_cast<std::size_t>(c);
      loss[ci] += ds * model.cost(s, c);
      queue[ci] += ds * st.queue(c);
      for (Action a : kAllActions) {
        const double pa = policy.prob(s, a);
        if (pa == 0.0) continue;
        thr[ci] += ds * pa * model.delivery(s, a, c);
        drops[ci] += ds * pa * model.expected_drops(s, a, c);
      }
    }
  }
  std::array<std::optional<double>, 2> delay;
  std::array<double, 2> drop_ratio{};
  for (TrafficClass c : {TrafficClass::LP, TrafficClass::HP}) {
    const auto ci = static_cast<std::size_t>(c);
    const double arrival = params.mean_arrival(c);
    const double admitted = arrival - drops[ci];
    drop_ratio[ci] = arrival > 0.0 ? drops[ci] / arrival : 0.0;
    if (admitted > 1e-15) delay[ci] = queue[ci] / admitted;
  }
  m.throughput_lp = thr[0];
  m.throughput_hp = thr[1];
  m.loss_lp = loss[0];
  m.loss_hp = loss[1];
  m.drop_lp = drop_ratio[0];
  m.drop_hp = drop_ratio[1];
  m.delay_lp = delay[0];
  m.delay_hp = delay[1];
  m.objective = params.weight_lp * thr[0] + params.weight_hp * thr[1];
  return m;
}

Metrics evaluate_policy(const TransitionModel& model, const Policy& policy,
                        const StationaryOptions& options) {
  const auto st = stationary_distribution(model, policy, options);
  return metrics_from_distribution(model, policy, st.distribution);
}

double average_reward_gain(const SparseRows& kernel, std::size_t actions_per_state,
                           std::span<const double> row_rewards, const RviOptions& options) {
  if (actions_per_state == 0 || kernel.num_rows() % actions_per_state != 0)
    throw std::invalid_argument("kernel rows are not a multiple of actions_per_state");
  if (row_rewards.size() != kernel.num_rows())
    throw std::invalid_argument("one reward per kernel row is required");
  const std::size_t n = kernel.num_rows() / actions_per_state;
  const double tau = options.laziness;

  std::vector<double> h(n, 0.0), th(n, 0.0);
  double span = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < actions_per_state; ++a) {
        const std::size_t r = s * actions_per_state + a;
        double ev = 0.0;
        for (const Atom& at : kernel.row(r)) ev += at.prob * h[at.next];
        best = std::max(best, row_rewards[r] + (1.0 - tau) * ev + tau * h[s]);
      }
      th[s] = best;
      lo = std::min(lo, best - h[s]);
      hi = std::max(hi, best - h[s]);
    }
    span = hi - lo;
    if (span <= options.span_tol) return 0.5 * (lo + hi);
    const double ref = th[0];
    for (std::size_t s = 0; s < n; ++s) h[s] = th[s] - ref;
  }
  std::ostringstream msg;
  msg << "relative value iteration hit the iteration cap with span " << span;
  throw ConvergenceError(msg.str(), span);
}

double relative_value_iteration(const TransitionModel& model, const Weights& weights,
                                const RviOptions& options) {
  const auto keep = model.reachable_from(model.state_space().index(kStartState));
  std::vector<std::uint32_t> pos(model.num_states(), 0);
  for (std::size_t k = 0; k < keep.size(); ++k) pos[keep[k]] = static_cast<std::uint32_t>(k);

  SparseRows sub;
  std::vector<double> rewards;
  std::vector<Atom> atoms;
  for (std::uint32_t s : keep) {
    for (Action a : kAllActions) {
      atoms.clear();
      for (const Atom& at : model.next(s, a)) atoms.push_back({pos[at.next], at.prob});
      sub.push_row(atoms);
      rewards.push_back(weights.lp * model.delivery(s, a, TrafficClass::LP) +
                        weights.hp * model.delivery(s, a, TrafficClass::HP));
    }
  }
  return average_reward_gain(sub, kNumActions, rewards, options);
}

}  // namespace ehn
