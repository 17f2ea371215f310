#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ehn/lp.hpp"

namespace ehn::lp {

std::size_t LinearProgram::count(Sense s) const {
  return static_cast<std::size_t>(std::count_if(constraints.begin(), constraints.end(),
                                                [s](const Constraint& c) { return c.sense == s; }));
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal:
      return "optimal";
    case Status::Infeasible:
      return "infeasible";
    case Status::Unbounded:
      return "unbounded";
    case Status::IterationLimit:
      return "iteration_limit";
    case Status::NumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

enum class ColumnKind : std::uint8_t { Structural, Slack, Artificial };
enum class PhaseResult { Optimal, Unbounded, IterationLimit, Numerical, Repaired };
enum class Refactor { Ok, Repaired, Failed };

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;

// Revised primal simplex. The basis inverse is a sparse LU of the basis
// matrix followed by a product-form eta file, rebuilt every
// `refactor_interval` pivots.
class Revised {
 public:
  Revised(const LinearProgram& lp, const SimplexOptions& opt) : opt_(opt) { build(lp); }

  Solution run(const LinearProgram& lp) {
    Solution sol;
    if (presolve_infeasible_) {
      sol.status = Status::Infeasible;
      sol.message = "a constraint with no free variables cannot hold";
      return sol;
    }
    if (refactor() == Refactor::Failed) return fail(sol, Status::NumericalFailure, "initial basis");

    bool need_phase_one = has_artificials_;
    for (int restart = 0;; ++restart) {
      if (restart > 3) return fail(sol, Status::NumericalFailure, "basis repair did not settle");
      if (need_phase_one) {
        phase_one_ = true;
        for (int pass = 0;; ++pass) {
          if (pass > 8) return fail(sol, Status::NumericalFailure, "phase 1 repairs did not settle");
          const PhaseResult r1 = iterate();
          if (r1 == PhaseResult::IterationLimit) return fail(sol, Status::IterationLimit, "phase 1");
          if (r1 == PhaseResult::Numerical) return fail(sol, Status::NumericalFailure, "phase 1");
          if (r1 == PhaseResult::Repaired) continue;
          const Refactor rf = refactor();
          if (rf == Refactor::Failed) return fail(sol, Status::NumericalFailure, "phase 1 basis");
          if (rf == Refactor::Ok && entering() == kNone) break;
        }
        const double residual = artificial_mass();
        if (residual > opt_.phase1_tol) {
          sol.status = Status::Infeasible;
          sol.iterations = iterations_;
          sol.message = "phase 1 residual " + std::to_string(residual);
          return sol;
        }
      }

      phase_one_ = false;
      bool settled = false;
      bool repaired = false;
      for (int round = 0; !settled; ++round) {
        if (round > 8) return fail(sol, Status::NumericalFailure, "refinement did not settle");
        const PhaseResult r2 = iterate();
        if (r2 == PhaseResult::Unbounded) return fail(sol, Status::Unbounded, "phase 2");
        if (r2 == PhaseResult::IterationLimit) return fail(sol, Status::IterationLimit, "phase 2");
        if (r2 == PhaseResult::Numerical) return fail(sol, Status::NumericalFailure, "phase 2");
        const Refactor rf = refactor();
        if (rf == Refactor::Failed) return fail(sol, Status::NumericalFailure, "phase 2 basis");
        repaired = r2 == PhaseResult::Repaired || rf == Refactor::Repaired;
        if (repaired && artificial_mass() > opt_.phase1_tol) break;
        settled = !repaired && entering() == kNone;
      }
      if (settled) break;
      // A repair put an artificial back into the basis at a positive level.
      need_phase_one = true;
    }

    sol.status = Status::Optimal;
    sol.iterations = iterations_;
    sol.redundant_rows = static_cast<std::size_t>(std::count_if(
        head_.begin(), head_.end(), [&](std::size_t j) { return kind_[j] == ColumnKind::Artificial; }));
    sol.x.assign(lp.num_vars, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = head_[i];
      if (kind_[j] == ColumnKind::Structural) sol.x[col_var_[j]] = std::max(xb_[i], 0.0);
    }
    sol.objective = 0.0;
    for (std::size_t v = 0; v < lp.num_vars; ++v) sol.objective += lp.objective[v] * sol.x[v];
    return sol;
  }

 private:
  Solution& fail(Solution& sol, Status s, const std::string& where) {
    sol.status = s;
    sol.iterations = iterations_;
    sol.message = to_string(s) + " in " + where;
    return sol;
  }

  void build(const LinearProgram& lp) {
    // Presolve: rows touching no free variable are either trivially true or
    // make the problem infeasible.
    struct Row {
      std::vector<std::pair<std::size_t, double>> terms;  // (structural col, coef)
      Sense sense;
      double rhs;
    };
    std::vector<std::size_t> var_col(lp.num_vars, kNone);
    for (std::size_t v = 0; v < lp.num_vars; ++v) {
      if (lp.pinned(v)) continue;
      var_col[v] = col_var_.size();
      col_var_.push_back(v);
    }
    const std::size_t n_struct = col_var_.size();

    std::vector<Row> rows;
    for (const auto& c : lp.constraints) {
      Row r{{}, c.sense, c.rhs};
      for (const auto& t : c.terms) {
        if (t.coef == 0.0 || var_col[t.var] == kNone) continue;
        r.terms.push_back({var_col[t.var], t.coef});
      }
      if (r.terms.empty()) {
        const bool ok = (c.sense == Sense::Equal && std::abs(c.rhs) <= opt_.feasibility_tol) ||
                        (c.sense == Sense::LessEqual && c.rhs >= -opt_.feasibility_tol) ||
                        (c.sense == Sense::GreaterEqual && c.rhs <= opt_.feasibility_tol);
        if (!ok) presolve_infeasible_ = true;
        continue;
      }
      if (r.rhs < 0.0) {
        r.rhs = -r.rhs;
        for (auto& t : r.terms) t.second = -t.second;
        if (r.sense == Sense::LessEqual)
          r.sense = Sense::GreaterEqual;
        else if (r.sense == Sense::GreaterEqual)
          r.sense = Sense::LessEqual;
      }
      rows.push_back(std::move(r));
    }
    m_ = rows.size();

    // Columns: structural, then one slack per inequality, then one
    // artificial per row without a natural starting basic variable.
    std::vector<std::vector<std::pair<int, double>>> cols(n_struct);
    kind_.assign(n_struct, ColumnKind::Structural);
    for (std::size_t i = 0; i < m_; ++i)
      for (const auto& [c, v] : rows[i].terms) cols[c].push_back({static_cast<int>(i), v});
    head_.assign(m_, kNone);
    slack_of_row_.assign(m_, kNone);
    artificial_of_row_.assign(m_, kNone);
    for (std::size_t i = 0; i < m_; ++i) {
      if (rows[i].sense == Sense::Equal) continue;
      const double sign = rows[i].sense == Sense::LessEqual ? 1.0 : -1.0;
      cols.push_back({{static_cast<int>(i), sign}});
      kind_.push_back(ColumnKind::Slack);
      slack_of_row_[i] = cols.size() - 1;
      if (sign > 0) head_[i] = cols.size() - 1;
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (head_[i] != kNone) continue;
      cols.push_back({{static_cast<int>(i), 1.0}});
      kind_.push_back(ColumnKind::Artificial);
      head_[i] = cols.size() - 1;
      artificial_of_row_[i] = head_[i];
      has_artificials_ = true;
    }
    n_ = cols.size();
    col_var_.resize(n_, kNone);

    std::vector<Eigen::Triplet<double, int>> trips;
    for (std::size_t j = 0; j < n_; ++j)
      for (const auto& [i, v] : cols[j]) trips.emplace_back(i, static_cast<int>(j), v);
    a_.resize(static_cast<int>(m_), static_cast<int>(n_));
    a_.setFromTriplets(trips.begin(), trips.end());
    a_.makeCompressed();

    objective_.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_struct; ++j) objective_[j] = lp.objective[col_var_[j]];
    b_.resize(static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) b_[static_cast<Eigen::Index>(i)] = rows[i].rhs;

    enterable_.assign(n_, 1);
    for (std::size_t j = 0; j < n_; ++j)
      if (kind_[j] == ColumnKind::Artificial) enterable_[j] = 0;
    in_basis_.assign(n_, 0);
    for (std::size_t j : head_) in_basis_[j] = 1;
    xb_ = Vec::Zero(static_cast<Eigen::Index>(m_));
    rejected_.assign(n_, 0);
  }

  double cost(std::size_t j) const {
    if (phase_one_) return kind_[j] == ColumnKind::Artificial ? -1.0 : 0.0;
    return objective_[j];
  }


  double artificial_mass() const {
    double r = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      if (kind_[head_[i]] == ColumnKind::Artificial) r += std::max(xb_[static_cast<Eigen::Index>(i)], 0.0);
    return r;
  }

  // B^{-1} v
  Vec ftran(Vec v) const {
    v = lu_.solve(v);
    for (const auto& eta : etas_) {
      const double yr = v[eta.row] / eta.w[eta.row];
      v -= yr * eta.w;
      v[eta.row] = yr;
    }
    return v;
  }

  // B^{-T} v
  Vec btran(Vec v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      const double wr = it->w[it->row];
      const double dot = it->w.dot(v) - wr * v[it->row];
      v[it->row] = (v[it->row] - dot) / wr;
    }
    return lu_.transpose().solve(v);
  }

  void price() {
    Vec cb(static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) cb[static_cast<Eigen::Index>(i)] = cost(head_[i]);
    const Vec y = btran(cb);
    const Vec ya = a_.transpose() * y;
    d_.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
      if (!in_basis_[j]) d_[j] = cost(j) - ya[static_cast<Eigen::Index>(j)];
  }

  bool candidate(std::size_t j) const {
    return enterable_[j] && !in_basis_[j] && !rejected_[j] && d_[j] > opt_.optimality_tol;
  }

  std::size_t entering() {
    price();
    std::size_t best = kNone;
    double best_d = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (!candidate(j)) continue;
      if (bland_) return j;
      if (d_[j] > best_d) {
        best_d = d_[j];
        best = j;
      }
    }
    return best;
  }

  // Rows holding an artificial at zero outside phase 1 block in both
  // directions so the artificial never becomes positive again.
  bool pinned_row(std::size_t i) const {
    return !phase_one_ && kind_[head_[i]] == ColumnKind::Artificial;
  }

  std::size_t leaving(const Vec& w) const {
    const auto x = [&](std::size_t i) { return std::max(xb_[static_cast<Eigen::Index>(i)], 0.0); };
    const auto wi = [&](std::size_t i) { return w[static_cast<Eigen::Index>(i)]; };
    const auto blocks = [&](std::size_t i) {
      return wi(i) > opt_.pivot_tol || (pinned_row(i) && std::abs(wi(i)) > opt_.pivot_tol);
    };
    const auto ratio = [&](std::size_t i) { return pinned_row(i) ? 0.0 : x(i) / wi(i); };
    if (bland_) {
      double min_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i)
        if (blocks(i)) min_ratio = std::min(min_ratio, ratio(i));
      std::size_t best = kNone;
      for (std::size_t i = 0; i < m_; ++i) {
        if (!blocks(i) || ratio(i) > min_ratio) continue;
        if (best == kNone || head_[i] < head_[best]) best = i;
      }
      return best;
    }
    // Harris two-pass: bound the step with slightly relaxed bounds, then
    // take the largest pivot among rows inside that bound.
    double theta_max = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m_; ++i) {
      if (!blocks(i)) continue;
      const double t = pinned_row(i) ? 0.0 : (x(i) + opt_.feasibility_tol) / wi(i);
      theta_max = std::min(theta_max, t);
    }
    if (!std::isfinite(theta_max)) return kNone;
    std::size_t best = kNone;
    double best_a = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (!blocks(i) || ratio(i) > theta_max) continue;
      if (std::abs(wi(i)) > best_a) {
        best_a = std::abs(wi(i));
        best = i;
      }
    }
    return best;
  }

  PhaseResult iterate() {
    std::size_t degenerate_streak = 0;
    bland_ = false;
    std::fill(rejected_.begin(), rejected_.end(), 0);
    std::vector<std::size_t> rejected_list;
    bool refreshed = false;
    while (true) {
      if (iterations_ >= opt_.max_iterations) return PhaseResult::IterationLimit;
      const std::size_t q = entering();
      if (q == kNone) {
        if (rejected_list.empty()) return PhaseResult::Optimal;
        if (!refreshed) {
          // Entries below the pivot tolerance may be round-off; look again
          // on a fresh factorization before giving up on those columns.
          for (std::size_t j : rejected_list) rejected_[j] = 0;
          rejected_list.clear();
          const Refactor rf = refactor();
          if (rf == Refactor::Failed) return PhaseResult::Numerical;
          if (rf == Refactor::Repaired) return PhaseResult::Repaired;
          refreshed = true;
          continue;
        }
        for (std::size_t j : rejected_list) {
          const Vec w = ftran(column(j));
          if (w.maxCoeff() <= 0.0) return phase_one_ ? PhaseResult::Numerical : PhaseResult::Unbounded;
        }
        // Blocked only by negligible entries: no usable direction remains.
        return PhaseResult::Optimal;
      }
      const Vec w = ftran(column(q));
      const std::size_t r = leaving(w);
      if (r == kNone) {
        rejected_[q] = 1;
        rejected_list.push_back(q);
        continue;
      }
      refreshed = false;
      for (std::size_t j : rejected_list) rejected_[j] = 0;
      rejected_list.clear();

      const auto ri = static_cast<Eigen::Index>(r);
      const double theta = pinned_row(r) ? 0.0 : std::max(xb_[ri], 0.0) / w[ri];
      xb_ -= theta * w;
      xb_[ri] = theta;
      for (Eigen::Index i = 0; i < xb_.size(); ++i)
        if (xb_[i] < 0.0 && xb_[i] > -opt_.feasibility_tol) xb_[i] = 0.0;
      const std::size_t out = head_[r];
      in_basis_[out] = 0;
      in_basis_[q] = 1;
      head_[r] = q;
      // Artificials that leave are never needed again.
      if (kind_[out] == ColumnKind::Artificial) enterable_[out] = 0;
      etas_.push_back({r, w});
      ++iterations_;

      if (theta <= 1e-13) {
        if (++degenerate_streak >= opt_.degenerate_streak_for_bland) bland_ = true;
      } else {
        degenerate_streak = 0;
        bland_ = false;
      }
      if (etas_.size() >= opt_.refactor_interval) {
        const Refactor rf = refactor();
        if (rf == Refactor::Failed) return PhaseResult::Numerical;
        if (rf == Refactor::Repaired) return PhaseResult::Repaired;
      }
    }
  }

  Vec column(std::size_t j) const {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(m_));
    for (SpMat::InnerIterator it(a_, static_cast<Eigen::Index>(j)); it; ++it) v[it.row()] = it.value();
    return v;
  }

  SpMat basis_matrix() const {
    std::vector<Eigen::Triplet<double, int>> trips;
    for (std::size_t k = 0; k < m_; ++k)
      for (SpMat::InnerIterator it(a_, static_cast<Eigen::Index>(head_[k])); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(k), it.value());
    SpMat bm(static_cast<int>(m_), static_cast<int>(m_));
    bm.setFromTriplets(trips.begin(), trips.end());
    bm.makeCompressed();
    return bm;
  }

  bool factorize() {
    etas_.clear();
    const SpMat bm = basis_matrix();
    lu_.analyzePattern(bm);
    lu_.factorize(bm);
    if (lu_.info() != Eigen::Success) return false;
    xb_ = lu_.solve(b_);
    // Round-trip check catches bases that are singular in all but name.
    const double scale = 1.0 + b_.cwiseAbs().maxCoeff();
    if (!xb_.allFinite() || (bm * xb_ - b_).cwiseAbs().maxCoeff() > opt_.factor_residual_tol * scale)
      return false;
    return true;
  }

  // Swaps dependent basis columns for unit columns of the rows they leave
  // uncovered, using a rank-revealing dense factorization.
  bool repair() {
    const Eigen::MatrixXd dense(basis_matrix());
    Eigen::FullPivLU<Eigen::MatrixXd> full(dense);
    full.setThreshold(opt_.rank_threshold);
    const Eigen::Index rank = full.rank();
    const auto ml = static_cast<Eigen::Index>(m_);
    if (rank == ml) return false;
    const auto& rows_perm = full.permutationP().indices();
    const auto& cols_perm = full.permutationQ().indices();
    std::vector<std::size_t> uncovered;
    for (Eigen::Index k = 0; k < ml; ++k)
      if (rows_perm(k) >= rank) uncovered.push_back(static_cast<std::size_t>(k));
    for (Eigen::Index j = rank; j < ml; ++j) {
      const auto pos = static_cast<std::size_t>(cols_perm(j));
      const std::size_t target = uncovered[static_cast<std::size_t>(j - rank)];
      std::size_t unit = artificial_of_row_[target];
      if (unit == kNone || in_basis_[unit]) unit = slack_of_row_[target];
      if (unit == kNone || in_basis_[unit]) return false;
      in_basis_[head_[pos]] = 0;
      in_basis_[unit] = 1;
      head_[pos] = unit;
    }
    ++repairs_;
    return true;
  }

  Refactor refactor() {
    bool repaired = false;
    if (!factorize()) {
      if (!repair() || !factorize()) return Refactor::Failed;
      repaired = true;
    }
    for (Eigen::Index i = 0; i < xb_.size(); ++i) {
      if (xb_[i] >= 0.0) continue;
      if (xb_[i] < -opt_.refactor_infeasibility_tol) return Refactor::Failed;
      xb_[i] = 0.0;
    }
    return repaired ? Refactor::Repaired : Refactor::Ok;
  }

  struct Eta {
    std::size_t row;
    Vec w;
  };

  const SimplexOptions& opt_;
  bool presolve_infeasible_ = false;
  bool has_artificials_ = false;
  bool phase_one_ = false;
  bool bland_ = false;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::size_t iterations_ = 0;
  std::size_t repairs_ = 0;

  SpMat a_;
  Vec b_;
  std::vector<ColumnKind> kind_;
  std::vector<std::size_t> col_var_;
  std::vector<double> objective_;
  std::vector<std::size_t> slack_of_row_;
  std::vector<std::size_t> artificial_of_row_;

  std::vector<std::size_t> head_;  // basic column per basis position
  std::vector<char> in_basis_;
  std::vector<char> enterable_;
  std::vector<char> rejected_;
  std::vector<double> d_;
  Vec xb_;
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;  // transpose() is non-const
  std::vector<Eta> etas_;
};

}  // namespace

Solution solve(const LinearProgram& problem, const SimplexOptions& options) {
  if (problem.objective.size() != problem.num_vars)
    throw std::invalid_argument("objective length does not match num_vars");
  if (!problem.pinned_zero.empty() && problem.pinned_zero.size() != problem.num_vars)
    throw std::invalid_argument("pinned_zero length does not match num_vars");
  for (const auto& c : problem.constraints)
    for (const auto& t : c.terms)
      if (t.var >= problem.num_vars) throw std::invalid_argument("constraint references unknown variable");

  // Progressively more conservative settings; numerical trouble on one
  // pivot path is usually avoided on another.
  std::vector<SimplexOptions> ladder{options};
  if (options.retry_on_numerical_failure) {
    SimplexOptions frequent = options;
    frequent.refactor_interval = std::max<std::size_t>(1, options.refactor_interval / 4);
    ladder.push_back(frequent);
    SimplexOptions careful = frequent;
    careful.pivot_tol = std::max(options.pivot_tol, 1e-4);
    careful.degenerate_streak_for_bland = 500;
    ladder.push_back(careful);
  }

  Solution sol;
  std::size_t spent = 0;
  for (const auto& opt : ladder) {
    Revised simplex(problem, opt);
    sol = simplex.run(problem);
    spent += sol.iterations;
    if (sol.status != Status::NumericalFailure) break;
  }
  sol.iterations = spent;
  return sol;
}

}  // namespace ehn::lp
