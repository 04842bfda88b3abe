#pragma once

// Bounded-variable revised primal simplex.
//
// Works on  A x - r = 0,  lower <= x <= upper,  row_lower <= r <= row_upper,
// where r holds one logical variable per row (column -e_i). The basis is
// factorized with KLU and updated in product form between
// refactorizations. Phase 1 minimizes the sum of bound violations of basic
// variables; phase 2 minimizes c'x. Pricing is Devex with a Bland fallback
// after a run of degenerate pivots. All ties break towards the lowest index.

#include <Eigen/SparseCore>
#include <klu.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "geobal/hash.hpp"

namespace geobal {

struct BoundedLp {
  int rows = 0;
  int cols = 0;
  Eigen::SparseMatrix<double> matrix;  // rows x cols, column major, compressed
  std::vector<double> cost, lower, upper;
  std::vector<double> row_lower, row_upper;
};

enum class SolveStatus { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::iteration_limit: return "iteration-limit";
  }
  return "?";
}

struct SimplexOptions {
  long max_iterations = 2'000'000;
  double primal_tolerance = 1e-9;
  double dual_tolerance = 1e-9;
  double pivot_tolerance = 1e-9;
  int refactor_interval = 100;
  int degenerate_limit = 200;  // consecutive degenerate pivots before Bland
  bool dual = true;            // dual simplex first when the start is dual feasible
  double perturbation = 1e-6;  // relative cost perturbation in the dual phase
};

struct SimplexResult {
  SolveStatus status = SolveStatus::iteration_limit;
  std::vector<double> x;         // structural values
  std::vector<double> activity;  // row activities
  std::vector<double> duals;     // one per row
  double objective = 0.0;
  long iterations = 0;
  long refactorizations = 0;
  long degenerate_pivots = 0;
  long bland_pivots = 0;
};

namespace detail {

/// Sparse LU of the basis (KLU) plus a product-form eta file.
class BasisFactor {
 public:
  BasisFactor() { klu_defaults(&common_); }
  BasisFactor(const BasisFactor&) = delete;
  BasisFactor& operator=(const BasisFactor&) = delete;
  ~BasisFactor() { release(); }

  bool factorize(const Eigen::SparseMatrix<double>& basis) {
    etas_.clear();
    release();
    size_ = static_cast<int>(basis.rows());
    if (size_ == 0) return true;
    auto* p = const_cast<int*>(basis.outerIndexPtr());
    auto* i = const_cast<int*>(basis.innerIndexPtr());
    auto* x = const_cast<double*>(basis.valuePtr());
    symbolic_ = klu_analyze(size_, p, i, &common_);
    if (!symbolic_) return false;
    numeric_ = klu_factor(p, i, x, symbolic_, &common_);
    if (!numeric_) return false;
    return true;
  }

  void ftran(Eigen::VectorXd& v) const {
    if (size_ == 0) return;
    klu_solve(symbolic_, numeric_, size_, 1, v.data(), &common_);
    for (const auto& e : etas_) {
      const double xr = v[e.pos] / e.pivot;
      v[e.pos] = xr;
      if (xr != 0.0)
        for (std::size_t k = 0; k < e.index.size(); ++k) v[e.index[k]] -= e.value[k] * xr;
    }
  }

  void btran(Eigen::VectorXd& v) const {
    if (size_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v[it->pos];
      for (std::size_t k = 0; k < it->index.size(); ++k) s -= it->value[k] * v[it->index[k]];
      v[it->pos] = s / it->pivot;
    }
    klu_tsolve(symbolic_, numeric_, size_, 1, v.data(), &common_);
  }

  /// Records basis column `pos` replaced; `alpha` is B^{-1} a_entering.
  void update(int pos, const Eigen::VectorXd& alpha) {
    Eta e;
    e.pos = pos;
    e.pivot = alpha[pos];
    for (int i = 0; i < alpha.size(); ++i)
      if (i != pos && alpha[i] != 0.0 && std::abs(alpha[i]) > 1e-14) {
        e.index.push_back(i);
        e.value.push_back(alpha[i]);
      }
    etas_.push_back(std::move(e));
  }

  /// Same, with the nonzero positions of `alpha` given.
  void update(int pos, const Eigen::VectorXd& alpha, const std::vector<int>& nonzeros) {
    Eta e;
    e.pos = pos;
    e.pivot = alpha[pos];
    e.index.reserve(nonzeros.size());
    e.value.reserve(nonzeros.size());
    for (int i : nonzeros)
      if (i != pos && std::abs(alpha[i]) > 1e-14) {
        e.index.push_back(i);
        e.value.push_back(alpha[i]);
      }
    etas_.push_back(std::move(e));
  }

  std::size_t updates() const { return etas_.size(); }

 private:
  struct Eta {
    int pos = 0;
    double pivot = 1.0;
    std::vector<int> index;
    std::vector<double> value;
  };

  void release() {
    if (numeric_) klu_free_numeric(&numeric_, &common_);
    if (symbolic_) klu_free_symbolic(&symbolic_, &common_);
  }

  mutable klu_common common_{};
  klu_symbolic* symbolic_ = nullptr;
  klu_numeric* numeric_ = nullptr;
  int size_ = 0;
  std::vector<Eta> etas_;
};

}  // namespace detail

class SimplexSolver {
 public:
  SimplexSolver(const BoundedLp& lp, SimplexOptions options)
      : lp_(lp), opt_(options), m_(lp.rows), n_(lp.cols), total_(lp.rows + lp.cols) {}

  SimplexResult run() {
    initialize();
    SimplexResult res;
    res.status = SolveStatus::iteration_limit;
    bool primal = true;
    if (opt_.dual && make_dual_feasible()) {
      switch (dual_iterate()) {
        case DualOutcome::optimal: break;  // primal pass below removes the perturbation
        case DualOutcome::infeasible: res.status = SolveStatus::infeasible; primal = false; break;
        case DualOutcome::iteration_limit: primal = false; break;
        case DualOutcome::lost_dual_feasibility: break;
      }
    }
    cost_ = lp_.cost;
    if (primal) res.status = iterate();
    res.iterations = iterations_;
    res.refactorizations = refactorizations_;
    res.degenerate_pivots = degenerate_pivots_;
    res.bland_pivots = bland_pivots_;
    res.x.assign(x_.begin(), x_.begin() + n_);
    res.activity.assign(x_.begin() + n_, x_.end());
    res.duals.assign(y_.data(), y_.data() + m_);
    double z = 0.0;
    for (int j = 0; j < n_; ++j) z += lp_.cost[j] * x_[j];
    res.objective = z;
    return res;
  }

 private:
  enum class State : std::uint8_t { basic, at_lower, at_upper, free_nb };

  const BoundedLp& lp_;
  SimplexOptions opt_;
  int m_, n_, total_;

  std::vector<double> lo_, up_, x_, d_, weight_;
  std::vector<double> cost_;  // working costs, perturbed during the dual phase
  std::vector<State> state_;
  std::vector<int> head_;      // basis position -> variable
  std::vector<int> position_;  // variable -> basis position or -1
  Eigen::VectorXd y_;
  detail::BasisFactor factor_;
  long iterations_ = 0;
  long refactorizations_ = 0;
  long degenerate_pivots_ = 0;
  long bland_pivots_ = 0;
  bool phase_one_ = true;

  double lower(int j) const { return lo_[j]; }
  double upper(int j) const { return up_[j]; }

  // Column of variable j in [A  -I].
  template <class F>
  void for_column(int j, F&& f) const {
    if (j < n_) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(lp_.matrix, j); it; ++it)
        f(static_cast<int>(it.row()), it.value());
    } else {
      f(j - n_, -1.0);
    }
  }

  void initialize() {
    cost_ = lp_.cost;
    lo_.resize(total_);
    up_.resize(total_);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lp_.lower[j];
      up_[j] = lp_.upper[j];
    }
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = lp_.row_lower[i];
      up_[n_ + i] = lp_.row_upper[i];
    }
    x_.assign(total_, 0.0);
    state_.assign(total_, State::at_lower);
    for (int j = 0; j < n_; ++j) place_at_bound(j, 0.0);
    head_.resize(m_);
    position_.assign(total_, -1);
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      position_[n_ + i] = i;
      state_[n_ + i] = State::basic;
    }
    weight_.assign(total_, 1.0);
    d_.assign(total_, 0.0);
    y_ = Eigen::VectorXd::Zero(m_);
    rows_ = lp_.matrix;
    row_acc_.assign(total_, 0.0);
  }

  // Nonbasic placement nearest to `hint`.
  void place_at_bound(int j, double hint) {
    const bool has_lo = std::isfinite(lo_[j]), has_up = std::isfinite(up_[j]);
    if (has_lo && has_up) {
      const bool use_lo = std::abs(hint - lo_[j]) <= std::abs(up_[j] - hint);
      state_[j] = use_lo ? State::at_lower : State::at_upper;
      x_[j] = use_lo ? lo_[j] : up_[j];
    } else if (has_lo) {
      state_[j] = State::at_lower;
      x_[j] = lo_[j];
    } else if (has_up) {
      state_[j] = State::at_upper;
      x_[j] = up_[j];
    } else {
      state_[j] = State::free_nb;
      x_[j] = hint;
    }
  }

  bool refactor() {
    for (int attempt = 0; attempt < 2; ++attempt) {
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(static_cast<std::size_t>(m_) * 3);
      for (int k = 0; k < m_; ++k)
        for_column(head_[k], [&](int row, double v) { trip.emplace_back(row, k, v); });
      Eigen::SparseMatrix<double> basis(m_, m_);
      basis.setFromTriplets(trip.begin(), trip.end());
      basis.makeCompressed();
      ++refactorizations_;
      if (factor_.factorize(basis)) {
        compute_basic_values();
        return true;
      }
      reset_to_logical_basis();
    }
    return false;
  }

  // Numerical trouble: fall back to the all-logical basis.
  void reset_to_logical_basis() {
    for (int k = 0; k < m_; ++k) {
      const int j = head_[k];
      position_[j] = -1;
      if (j < n_) place_at_bound(j, x_[j]);
    }
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      position_[n_ + i] = i;
      state_[n_ + i] = State::basic;
    }
    std::fill(weight_.begin(), weight_.end(), 1.0);
  }

  void compute_basic_values() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < total_; ++j) {
      if (state_[j] == State::basic || x_[j] == 0.0) continue;
      const double v = x_[j];
      for_column(j, [&](int row, double a) { rhs[row] -= a * v; });
    }
    factor_.ftran(rhs);
    for (int k = 0; k < m_; ++k) x_[head_[k]] = rhs[k];
  }

  double infeasibility(int j) const {
    const double tol = opt_.primal_tolerance;
    if (x_[j] < lo_[j] - tol) return lo_[j] - x_[j];
    if (x_[j] > up_[j] + tol) return x_[j] - up_[j];
    return 0.0;
  }

  bool primal_feasible() const {
    for (int k = 0; k < m_; ++k)
      if (infeasibility(head_[k]) > 0.0) return false;
    return true;
  }

  double phase_cost(int j) const {
    if (!phase_one_) return j < n_ ? cost_[j] : 0.0;
    if (state_[j] != State::basic) return 0.0;
    const double tol = opt_.primal_tolerance;
    if (x_[j] < lo_[j] - tol) return -1.0;
    if (x_[j] > up_[j] + tol) return 1.0;
    return 0.0;
  }

  void compute_duals() {
    for (int k = 0; k < m_; ++k) y_[k] = phase_cost(head_[k]);
    factor_.btran(y_);
    for (int j = 0; j < total_; ++j) {
      if (state_[j] == State::basic) {
        d_[j] = 0.0;
        continue;
      }
      double s = phase_cost(j);
      for_column(j, [&](int row, double a) { s -= a * y_[row]; });
      d_[j] = s;
    }
  }

  // +1 increase, -1 decrease, 0 not attractive.
  int direction(int j) const {
    const double tol = opt_.dual_tolerance;
    switch (state_[j]) {
      case State::basic: return 0;
      case State::at_lower:
        if (lo_[j] == up_[j]) return 0;
        return d_[j] < -tol ? 1 : 0;
      case State::at_upper:
        if (lo_[j] == up_[j]) return 0;
        return d_[j] > tol ? -1 : 0;
      case State::free_nb:
        if (d_[j] < -tol) return 1;
        if (d_[j] > tol) return -1;
        return 0;
    }
    return 0;
  }

  int choose_entering(bool bland) const {
    int best = -1;
    double best_score = 0.0;
    for (int j = 0; j < total_; ++j) {
      if (direction(j) == 0) continue;
      if (bland) return j;
      const double score = d_[j] * d_[j] / weight_[j];
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  struct Ratio {
    int position = -1;   // leaving basis position, -1 for bound flip / none
    double step = kNoLimit;
    bool leaves_at_upper = false;
  };
  static constexpr double kNoLimit = std::numeric_limits<double>::infinity();

  // Distance basic k may travel along rate `delta` before hitting a bound that
  // stops it, plus which bound.
  bool limit(int j, double delta, double slack, double& dist, bool& to_upper) const {
    const double tol = opt_.primal_tolerance;
    const double xv = x_[j];
    if (delta > 0.0) {
      if (phase_one_ && xv < lo_[j] - tol) {
        dist = lo_[j] - xv + slack;
        to_upper = false;
        return true;
      }
      if (!std::isfinite(up_[j])) return false;
      dist = up_[j] - xv + slack;
      to_upper = true;
      return true;
    }
    if (phase_one_ && xv > up_[j] + tol) {
      dist = xv - up_[j] + slack;
      to_upper = true;
      return true;
    }
    if (!std::isfinite(lo_[j])) return false;
    dist = xv - lo_[j] + slack;
    to_upper = false;
    return true;
  }

  Ratio ratio_test(const Eigen::VectorXd& alpha, int dir, bool bland) const {
    Ratio best;
    const double ptol = opt_.pivot_tolerance;
    if (bland) {
      int best_var = -1;
      for (int k = 0; k < m_; ++k) {
        const double delta = -dir * alpha[k];
        if (std::abs(delta) <= ptol) continue;
        double dist;
        bool to_upper;
        if (!limit(head_[k], delta, 0.0, dist, to_upper)) continue;
        const double t = std::max(0.0, dist) / std::abs(delta);
        if (t < best.step || (t == best.step && head_[k] < best_var)) {
          best = {k, t, to_upper};
          best_var = head_[k];
        }
      }
      return best;
    }
    // Harris: relaxed minimum, then the largest pivot within it.
    double relaxed = kNoLimit;
    for (int k = 0; k < m_; ++k) {
      const double delta = -dir * alpha[k];
      if (std::abs(delta) <= ptol) continue;
      double dist;
      bool to_upper;
      if (!limit(head_[k], delta, opt_.primal_tolerance, dist, to_upper)) continue;
      relaxed = std::min(relaxed, dist / std::abs(delta));
    }
    if (relaxed == kNoLimit) return best;
    double best_pivot = 0.0;
    int best_var = -1;
    for (int k = 0; k < m_; ++k) {
      const double delta = -dir * alpha[k];
      if (std::abs(delta) <= ptol) continue;
      double dist;
      bool to_upper;
      if (!limit(head_[k], delta, 0.0, dist, to_upper)) continue;
      const double t = dist / std::abs(delta);
      if (t > relaxed) continue;
      const double piv = std::abs(alpha[k]);
      if (piv > best_pivot || (piv == best_pivot && head_[k] < best_var)) {
        best_pivot = piv;
        best_var = head_[k];
        best = {k, std::max(0.0, t), to_upper};
      }
    }
    return best;
  }

  SolveStatus iterate() {
    if (!refactor()) return SolveStatus::iteration_limit;
    bool bland = false;
    int degenerate_run = 0;
    int since_check = 0;
    int unbounded_retries = 0;
    phase_one_ = !primal_feasible();
    compute_duals();

    while (true) {
      if (iterations_ >= opt_.max_iterations) return SolveStatus::iteration_limit;

      const int q = choose_entering(bland);
      if (q < 0) {
        // Confirm on a fresh factorization before concluding.
        if (since_check > 0) {
          since_check = 0;
          if (!refresh()) return SolveStatus::iteration_limit;
          if (choose_entering(bland) >= 0) continue;
        }
        return phase_one_ ? SolveStatus::infeasible : SolveStatus::optimal;
      }

      const int dir = direction(q);
      Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_);
      for_column(q, [&](int row, double a) { alpha[row] = a; });
      factor_.ftran(alpha);

      const Ratio r = ratio_test(alpha, dir, bland);
      const double flip = up_[q] - lo_[q];
      const bool bound_flip = std::isfinite(flip) && flip <= r.step;
      if (!bound_flip && r.position < 0) {
        if (since_check > 0 && ++unbounded_retries <= 2) {
          since_check = 0;
          if (!refresh()) return SolveStatus::iteration_limit;
          continue;
        }
        // Phase 1 is bounded below by zero; an unlimited ray there is numerical.
        return phase_one_ ? SolveStatus::iteration_limit : SolveStatus::unbounded;
      }
      unbounded_retries = 0;
      const double step = bound_flip ? flip : r.step;
      ++iterations_;
      ++since_check;

      if (step != 0.0) {
        for (int k = 0; k < m_; ++k) x_[head_[k]] -= dir * alpha[k] * step;
        x_[q] += dir * step;
      }
      if (bland) ++bland_pivots_;
      if (step <= 1e-12) {
        ++degenerate_pivots_;
        if (++degenerate_run > opt_.degenerate_limit) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      if (bound_flip) {
        state_[q] = dir > 0 ? State::at_upper : State::at_lower;
        x_[q] = dir > 0 ? up_[q] : lo_[q];
      } else {
        const int p = head_[r.position];
        x_[p] = r.leaves_at_upper ? up_[p] : lo_[p];
        state_[p] = r.leaves_at_upper ? State::at_upper : State::at_lower;
        if (lo_[p] == up_[p]) x_[p] = lo_[p];
        position_[p] = -1;
        head_[r.position] = q;
        position_[q] = r.position;
        state_[q] = State::basic;
        weight_[p] = 1.0;
        pivot_row_pass(r.position, alpha, q, !phase_one_);
        factor_.update(r.position, alpha);
      }

      if (static_cast<int>(factor_.updates()) >= opt_.refactor_interval) {
        if (!refresh()) return SolveStatus::iteration_limit;
        continue;
      }
      if (phase_one_) {
        phase_one_ = !primal_feasible();
        if (!phase_one_) {
          std::fill(weight_.begin(), weight_.end(), 1.0);
          bland = false;
          degenerate_run = 0;
        }
        compute_duals();
      }
    }
  }

  // Refactorize, recompute basic values, re-evaluate the phase and duals.
  bool refresh() {
    if (!refactor()) return false;
    const bool was_phase_one = phase_one_;
    phase_one_ = !primal_feasible();
    if (was_phase_one != phase_one_) std::fill(weight_.begin(), weight_.end(), 1.0);
    compute_duals();
    return true;
  }

  // Nonbasic entries of rho' [A -I]. Row-wise through the row-major copy of A
  // when rho is sparse, column by column otherwise.
  void compute_pivot_row(const Eigen::VectorXd& rho) {
    piv_idx_.clear();
    piv_val_.clear();
    const auto* row_start = rows_.outerIndexPtr();
    long row_work = 0;
    nz_rows_.clear();
    for (int i = 0; i < m_; ++i)
      if (std::abs(rho[i]) >= 1e-14) {
        nz_rows_.push_back(i);
        row_work += row_start[i + 1] - row_start[i];
      }
    if (2 * row_work > static_cast<long>(lp_.matrix.nonZeros())) {
      const auto* col_start = lp_.matrix.outerIndexPtr();
      const auto* row_index = lp_.matrix.innerIndexPtr();
      const double* value = lp_.matrix.valuePtr();
      for (int j = 0; j < n_; ++j) {
        if (state_[j] == State::basic) continue;
        double v = 0.0;
        for (auto k = col_start[j]; k < col_start[j + 1]; ++k) v += value[k] * rho[row_index[k]];
        if (std::abs(v) >= 1e-13) {
          piv_idx_.push_back(j);
          piv_val_.push_back(v);
        }
      }
      for (int i : nz_rows_) {
        if (state_[n_ + i] == State::basic) continue;
        piv_idx_.push_back(n_ + i);
        piv_val_.push_back(-rho[i]);
      }
      return;
    }
    touched_.clear();
    const auto* col_index = rows_.innerIndexPtr();
    const double* value = rows_.valuePtr();
    for (int i : nz_rows_) {
      const double ri = rho[i];
      for (auto k = row_start[i]; k < row_start[i + 1]; ++k) {
        const int j = col_index[k];
        if (row_acc_[j] == 0.0) touched_.push_back(j);
        row_acc_[j] += value[k] * ri;
        if (row_acc_[j] == 0.0) row_acc_[j] = 1e-300;
      }
      const int logical = n_ + i;
      if (row_acc_[logical] == 0.0) touched_.push_back(logical);
      row_acc_[logical] -= ri;
      if (row_acc_[logical] == 0.0) row_acc_[logical] = 1e-300;
    }
    for (int j : touched_) {
      const double v = row_acc_[j];
      row_acc_[j] = 0.0;
      if (state_[j] == State::basic || std::abs(v) < 1e-13) continue;
      piv_idx_.push_back(j);
      piv_val_.push_back(v);
    }
  }

  // Primal: Devex weights and, in phase 2, reduced costs from the pivot row of
  // the old basis. Call after the basis bookkeeping swapped the variables.
  void pivot_row_pass(int leave_pos, const Eigen::VectorXd& alpha, int entering, bool update_d) {
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(m_);
    rho[leave_pos] = 1.0;
    factor_.btran(rho);
    const double piv = alpha[leave_pos];
    const double wq = weight_[entering];
    const double theta = d_[entering] / piv;
    compute_pivot_row(rho);
    for (std::size_t k = 0; k < piv_idx_.size(); ++k) {
      const int j = piv_idx_[k];
      const double arj = piv_val_[k];
      if (update_d) d_[j] -= theta * arj;
      const double ratio = arj / piv;
      weight_[j] = std::max(weight_[j], ratio * ratio * wq);
    }
    d_[entering] = 0.0;
  }

  // ---- dual simplex -------------------------------------------------------

  // Places every nonbasic variable at the bound its cost sign asks for. False
  // when some variable has no such bound.
  bool make_dual_feasible() {
    const double tol = opt_.dual_tolerance;
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (int j = 0; j < n_; ++j) {
      if (state_[j] == State::basic) continue;
      const double c = lp_.cost[j];
      if (opt_.perturbation > 0.0 && lo_[j] != up_[j]) {
        const double delta = opt_.perturbation * (1.0 + std::abs(c)) * u(rng);
        if (c >= 0.0 && std::isfinite(lo_[j])) cost_[j] = c + delta;
        else if (c < 0.0 && std::isfinite(up_[j])) cost_[j] = c - delta;
      }
      if (c > tol) {
        if (!std::isfinite(lo_[j])) return false;
        state_[j] = State::at_lower;
        x_[j] = lo_[j];
      } else if (c < -tol) {
        if (!std::isfinite(up_[j])) return false;
        state_[j] = State::at_upper;
        x_[j] = up_[j];
      }
    }
    return true;
  }

  bool dual_feasible() const {
    const double tol = opt_.dual_tolerance * 10.0;
    for (int j = 0; j < total_; ++j) {
      if (lo_[j] == up_[j]) continue;
      switch (state_[j]) {
        case State::basic: break;
        case State::at_lower:
          if (d_[j] < -tol) return false;
          break;
        case State::at_upper:
          if (d_[j] > tol) return false;
          break;
        case State::free_nb:
          if (std::abs(d_[j]) > tol) return false;
          break;
      }
    }
    return true;
  }

  enum class DualOutcome { optimal, infeasible, iteration_limit, lost_dual_feasibility };

  double squared_infeasibility(int j) const {
    const double v = infeasibility(j);
    return v * v;
  }

  bool dual_refresh() {
    if (!refactor()) return false;
    compute_duals();
    infeas_.resize(m_);
    for (int k = 0; k < m_; ++k) infeas_[k] = squared_infeasibility(head_[k]);
    return true;
  }

  DualOutcome dual_iterate() {
    phase_one_ = false;
    if (!dual_refresh()) return DualOutcome::iteration_limit;
    dse_.assign(m_, 1.0);
    weight_floor_.assign(total_, 1.0);
    for (int j = 0; j < n_; ++j) {
      double s2 = 0.0;
      for_column(j, [&](int, double a) { s2 += a * a; });
      if (s2 > 0.0) weight_floor_[j] = 1.0 / s2;
    }
    rho_.resize(m_);
    alpha_.resize(m_);
    tau_.resize(m_);
    int since_check = 0;
    const double ptol = opt_.pivot_tolerance;
    const double dtol = opt_.dual_tolerance;

    while (true) {
      if (iterations_ >= opt_.max_iterations) return DualOutcome::iteration_limit;

      // Leaving row: largest infeasibility^2 / weight, lowest position on ties.
      int r = -1;
      double best = 0.0;
      for (int k = 0; k < m_; ++k) {
        if (infeas_[k] > best * dse_[k]) {
          best = infeas_[k] / dse_[k];
          r = k;
        }
      }
      if (r < 0) {
        if (since_check > 0) {
          since_check = 0;
          if (!dual_refresh()) return DualOutcome::iteration_limit;
          continue;
        }
        return dual_feasible() ? DualOutcome::optimal : DualOutcome::lost_dual_feasibility;
      }

      const int p = head_[r];
      const bool below = x_[p] < lo_[p];
      const double target = below ? lo_[p] : up_[p];

      rho_.setZero();
      rho_[r] = 1.0;
      factor_.btran(rho_);
      compute_pivot_row(rho_);

      // Harris ratio test on the pivot row. Moving x_p towards `target`
      // requires, when below, alpha_rj < 0 for increasing j and > 0 for
      // decreasing j; the signs swap when above.
      auto slack = [&](std::size_t k, double& a) -> double {
        const int j = piv_idx_[k];
        a = below ? piv_val_[k] : -piv_val_[k];
        if (lo_[j] == up_[j] || std::abs(a) <= ptol) return -1.0;
        if (state_[j] == State::at_lower && a < 0.0) return std::max(0.0, d_[j]);
        if (state_[j] == State::at_upper && a > 0.0) return std::max(0.0, -d_[j]);
        if (state_[j] == State::free_nb) return std::abs(d_[j]);
        return -1.0;
      };
      double bound_step = kNoLimit;
      for (std::size_t k = 0; k < piv_idx_.size(); ++k) {
        double a;
        const double dj = slack(k, a);
        if (dj >= 0.0) bound_step = std::min(bound_step, (dj + dtol) / std::abs(a));
      }
      int q = -1;
      double q_alpha = 0.0;
      if (bound_step < kNoLimit) {
        for (std::size_t k = 0; k < piv_idx_.size(); ++k) {
          double a;
          const double dj = slack(k, a);
          if (dj < 0.0 || dj / std::abs(a) > bound_step) continue;
          const int j = piv_idx_[k];
          if (std::abs(a) > std::abs(q_alpha) || (std::abs(a) == std::abs(q_alpha) && j < q)) {
            q = j;
            q_alpha = piv_val_[k];
          }
        }
      }
      if (q < 0) {
        if (since_check > 0) {
          since_check = 0;
          if (!dual_refresh()) return DualOutcome::iteration_limit;
          continue;
        }
        return DualOutcome::infeasible;
      }

      alpha_.setZero();
      for_column(q, [&](int row, double a) { alpha_[row] = a; });
      factor_.ftran(alpha_);
      const double piv = alpha_[r];
      if (std::abs(piv - q_alpha) > 1e-7 * (1.0 + std::abs(piv)) || std::abs(piv) <= ptol) {
        // Row and column disagree: refactorize and retry from fresh values.
        if (factor_.updates() == 0) return DualOutcome::lost_dual_feasibility;
        if (!dual_refresh()) return DualOutcome::iteration_limit;
        since_check = 0;
        continue;
      }
      alpha_idx_.clear();
      for (int k = 0; k < m_; ++k)
        if (alpha_[k] != 0.0) alpha_idx_.push_back(k);

      ++iterations_;
      ++since_check;

      // Duals.
      const double theta_d = d_[q] / piv;
      for (std::size_t k = 0; k < piv_idx_.size(); ++k) d_[piv_idx_[k]] -= theta_d * piv_val_[k];
      d_[p] = -theta_d;
      d_[q] = 0.0;

      // Primals.
      const double theta_p = (x_[p] - target) / piv;
      if (theta_p != 0.0)
        for (int k : alpha_idx_) {
          const int j = head_[k];
          x_[j] -= theta_p * alpha_[k];
          infeas_[k] = squared_infeasibility(j);
        }
      x_[q] += theta_p;
      if (std::abs(theta_p) <= 1e-12) ++degenerate_pivots_;

      // Dual steepest-edge weights; the leaving row's weight is exact since
      // rho is at hand, which keeps update drift from compounding.
      tau_ = rho_;
      factor_.ftran(tau_);
      const double wr = rho_.squaredNorm();
      for (int k : alpha_idx_) {
        if (k == r) continue;
        const double ratio = alpha_[k] / piv;
        dse_[k] = std::max(dse_[k] + ratio * (ratio * wr - 2.0 * tau_[k]), weight_floor_[head_[k]]);
      }
      dse_[r] = std::max(wr / (piv * piv), weight_floor_[q]);

      // Basis change.
      x_[p] = target;
      state_[p] = below ? State::at_lower : State::at_upper;
      position_[p] = -1;
      head_[r] = q;
      position_[q] = r;
      state_[q] = State::basic;
      infeas_[r] = squared_infeasibility(q);
      factor_.update(r, alpha_, alpha_idx_);

      if (static_cast<int>(factor_.updates()) >= opt_.refactor_interval && !dual_refresh())
        return DualOutcome::iteration_limit;
    }
  }

  using RowMajor = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  RowMajor rows_;
  std::vector<double> row_acc_;
  std::vector<int> touched_;
  std::vector<int> nz_rows_;
  std::vector<int> piv_idx_;
  std::vector<double> piv_val_;
  std::vector<double> dse_;
  std::vector<double> infeas_;  // squared primal infeasibility by basis position
  std::vector<int> alpha_idx_;
  Eigen::VectorXd rho_, alpha_, tau_;
  // A row rho of B^-1 with rho'a_j = 1 has |rho|^2 >= 1/|a_j|^2.
  std::vector<double> weight_floor_;
};

/// Results of solved programs keyed by their exact bytes and options, so a
/// block that recurs across a sweep is solved once. Thread safe.
class BlockCache {
 public:
  std::optional<SimplexResult> find(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }
  void store(const std::string& key, const SimplexResult& r) {
    std::lock_guard lock(mutex_);
    entries_.emplace(key, r);
  }
  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, SimplexResult> entries_;
};

namespace detail {

inline std::string program_key(const BoundedLp& lp, const SimplexOptions& o) {
  std::string bytes;
  auto put = [&](const void* p, std::size_t n) { bytes.append(static_cast<const char*>(p), n); };
  auto put_vec = [&](const auto& v) {
    const std::size_t n = v.size();
    put(&n, sizeof n);
    put(v.data(), n * sizeof(v[0]));
  };
  Eigen::SparseMatrix<double> a = lp.matrix;
  a.makeCompressed();
  put(&lp.rows, sizeof lp.rows);
  put(&lp.cols, sizeof lp.cols);
  put(a.outerIndexPtr(), (a.outerSize() + 1) * sizeof(int));
  put(a.innerIndexPtr(), a.nonZeros() * sizeof(int));
  put(a.valuePtr(), a.nonZeros() * sizeof(double));
  put_vec(lp.cost);
  put_vec(lp.lower);
  put_vec(lp.upper);
  put_vec(lp.row_lower);
  put_vec(lp.row_upper);
  for (double v : {o.primal_tolerance, o.dual_tolerance, o.pivot_tolerance, o.perturbation})
    put(&v, sizeof v);
  for (long v : {o.max_iterations, static_cast<long>(o.refactor_interval),
                 static_cast<long>(o.degenerate_limit), static_cast<long>(o.dual)})
    put(&v, sizeof v);
  return sha256_hex(bytes);
}

inline SimplexResult run_cached(const BoundedLp& lp, const SimplexOptions& options,
                                BlockCache* cache) {
  if (!cache) return SimplexSolver(lp, options).run();
  const std::string key = program_key(lp, options);
  if (auto hit = cache->find(key)) return *hit;
  SimplexResult r = SimplexSolver(lp, options).run();
  cache->store(key, r);
  return r;
}

}  // namespace detail

/// Runs the simplex separately on every connected block of the constraint
/// matrix and stitches the results together. Columns without rows join the
/// first block.
inline SimplexResult solve_by_blocks(const BoundedLp& lp, const SimplexOptions& options,
                                     BlockCache* cache = nullptr) {
  std::vector<int> parent(lp.rows);
  for (int i = 0; i < lp.rows; ++i) parent[i] = i;
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int j = 0; j < lp.cols; ++j) {
    int first = -1;
    for (Eigen::SparseMatrix<double>::InnerIterator it(lp.matrix, j); it; ++it) {
      const int r = find(static_cast<int>(it.row()));
      if (first < 0)
        first = r;
      else if (r != first)
        parent[std::max(r, first)] = std::min(r, first);
      first = find(first);
    }
  }
  // Blocks numbered by their lowest row.
  std::vector<int> block_of_row(lp.rows), row_local(lp.rows);
  std::vector<int> root_block(lp.rows, -1);
  std::vector<std::vector<int>> rows, cols;
  for (int i = 0; i < lp.rows; ++i) {
    const int r = find(i);
    if (root_block[r] < 0) {
      root_block[r] = static_cast<int>(rows.size());
      rows.emplace_back();
      cols.emplace_back();
    }
    block_of_row[i] = root_block[r];
    row_local[i] = static_cast<int>(rows[root_block[r]].size());
    rows[root_block[r]].push_back(i);
  }
  if (rows.size() <= 1) return detail::run_cached(lp, options, cache);
  for (int j = 0; j < lp.cols; ++j) {
    Eigen::SparseMatrix<double>::InnerIterator it(lp.matrix, j);
    cols[it ? block_of_row[it.row()] : 0].push_back(j);
  }

  SimplexResult out;
  out.status = SolveStatus::optimal;
  out.x.assign(lp.cols, 0.0);
  out.activity.assign(lp.rows, 0.0);
  out.duals.assign(lp.rows, 0.0);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    BoundedLp sub;
    sub.rows = static_cast<int>(rows[b].size());
    sub.cols = static_cast<int>(cols[b].size());
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < sub.cols; ++k) {
      const int j = cols[b][k];
      for (Eigen::SparseMatrix<double>::InnerIterator it(lp.matrix, j); it; ++it)
        trip.emplace_back(row_local[it.row()], k, it.value());
      sub.cost.push_back(lp.cost[j]);
      sub.lower.push_back(lp.lower[j]);
      sub.upper.push_back(lp.upper[j]);
    }
    for (int i : rows[b]) {
      sub.row_lower.push_back(lp.row_lower[i]);
      sub.row_upper.push_back(lp.row_upper[i]);
    }
    sub.matrix.resize(sub.rows, sub.cols);
    sub.matrix.setFromTriplets(trip.begin(), trip.end());
    sub.matrix.makeCompressed();

    const SimplexResult r = detail::run_cached(sub, options, cache);
    if (out.status == SolveStatus::optimal) out.status = r.status;
    out.iterations += r.iterations;
    out.refactorizations += r.refactorizations;
    out.degenerate_pivots += r.degenerate_pivots;
    out.bland_pivots += r.bland_pivots;
    for (int k = 0; k < sub.cols; ++k) out.x[cols[b][k]] = r.x[k];
    for (int k = 0; k < sub.rows; ++k) {
      out.activity[rows[b][k]] = r.activity[k];
      out.duals[rows[b][k]] = r.duals[k];
    }
  }
  double z = 0.0;
  for (int j = 0; j < lp.cols; ++j) z += lp.cost[j] * out.x[j];
  out.objective = z;
  return out;
}

}  // namespace geobal
