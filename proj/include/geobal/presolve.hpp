#pragma once

// Light presolve: fixed and empty columns, empty rows, singleton rows. Every
// reduction is recorded so that primal values and row duals of the original
// program can be rebuilt from the reduced solution.

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <vector>

#include "geobal/lp.hpp"
#include "geobal/simplex.hpp"

namespace geobal {

enum class PresolveStatus { reduced, infeasible };

class Presolver {
 public:
  explicit Presolver(const LinearProgram& lp, double tolerance = 1e-9)
      : lp_(lp), tol_(tolerance) {
    const int n = static_cast<int>(lp.num_columns());
    const int m = static_cast<int>(lp.num_rows());
    lo_.resize(n);
    up_.resize(n);
    x_.assign(n, 0.0);
    col_alive_.assign(n, 1);
    col_count_.assign(n, 0);
    col_entries_.resize(n);
    for (int j = 0; j < n; ++j) {
      lo_[j] = lp.columns()[j].lower;
      up_[j] = lp.columns()[j].upper;
    }
    row_lo_.resize(m);
    row_up_.resize(m);
    row_alive_.assign(m, 1);
    row_count_.assign(m, 0);
    for (int i = 0; i < m; ++i) {
      const Row& r = lp.rows()[i];
      row_lo_[i] = r.relation == Relation::le ? -kInf : r.rhs;
      row_up_[i] = r.relation == Relation::ge ? kInf : r.rhs;
      for (const Term& t : r.terms) {
        if (t.value == 0.0) continue;
        col_entries_[t.column].push_back({i, t.value});
        ++row_count_[i];
        ++col_count_[t.column];
      }
    }
  }

  PresolveStatus run() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (int j = 0; j < num_cols(); ++j) {
        if (!col_alive_[j]) continue;
        if (up_[j] - lo_[j] <= tol_ * (1.0 + std::abs(lo_[j]))) {
          if (up_[j] < lo_[j] - tol_ * (1.0 + std::abs(lo_[j]))) return PresolveStatus::infeasible;
          remove_column(j, lo_[j], Event::fixed_column, -1, 0.0);
          changed = true;
        } else if (col_count_[j] == 0) {
          const double c = lp_.columns()[j].cost;
          double v;
          if (c > 0.0 && std::isfinite(lo_[j])) v = lo_[j];
          else if (c < 0.0 && std::isfinite(up_[j])) v = up_[j];
          else if (c == 0.0) v = std::isfinite(lo_[j]) ? lo_[j] : (std::isfinite(up_[j]) ? up_[j] : 0.0);
          else continue;  // unbounded direction; left to the simplex
          remove_column(j, v, Event::fixed_column, -1, 0.0);
          changed = true;
        }
      }
      for (int i = 0; i < num_rows(); ++i) {
        if (!row_alive_[i]) continue;
        if (row_count_[i] == 0) {
          const double scale = tol_ * (1.0 + std::max(finite_abs(row_lo_[i]), finite_abs(row_up_[i])));
          if (row_lo_[i] > scale || row_up_[i] < -scale) return PresolveStatus::infeasible;
          row_alive_[i] = 0;
          events_.push_back({Event::empty_row, i, -1, 0.0, 0.0, 0.0, false, false});
          changed = true;
        } else if (row_count_[i] == 1) {
          if (!singleton_row(i)) return PresolveStatus::infeasible;
          changed = true;
        }
      }
    }
    return PresolveStatus::reduced;
  }

  /// The surviving program in bounded form.
  BoundedLp reduced() const {
    BoundedLp out;
    col_map_.clear();
    row_map_.clear();
    std::vector<int> row_new(num_rows(), -1);
    for (int i = 0; i < num_rows(); ++i)
      if (row_alive_[i]) {
        row_new[i] = static_cast<int>(row_map_.size());
        row_map_.push_back(i);
        out.row_lower.push_back(row_lo_[i]);
        out.row_upper.push_back(row_up_[i]);
      }
    std::vector<Eigen::Triplet<double>> trip;
    for (int j = 0; j < num_cols(); ++j) {
      if (!col_alive_[j]) continue;
      const int k = static_cast<int>(col_map_.size());
      col_map_.push_back(j);
      out.cost.push_back(lp_.columns()[j].cost);
      out.lower.push_back(lo_[j]);
      out.upper.push_back(up_[j]);
      for (const auto& e : col_entries_[j])
        if (row_alive_[e.row]) trip.emplace_back(row_new[e.row], k, e.value);
    }
    out.rows = static_cast<int>(row_map_.size());
    out.cols = static_cast<int>(col_map_.size());
    out.matrix.resize(out.rows, out.cols);
    out.matrix.setFromTriplets(trip.begin(), trip.end());
    out.matrix.makeCompressed();
    return out;
  }

  /// Original-space primal values and row duals from the reduced solution.
  /// Must follow a call to reduced().
  void postsolve(const std::vector<double>& x_reduced, const std::vector<double>& y_reduced,
                 std::vector<double>& x, std::vector<double>& y) const {
    x = x_;
    y.assign(num_rows(), 0.0);
    for (std::size_t k = 0; k < col_map_.size(); ++k) x[col_map_[k]] = x_reduced[k];
    for (std::size_t k = 0; k < row_map_.size(); ++k) y[row_map_[k]] = y_reduced[k];

    auto reduced_cost = [&](int j) {
      double d = lp_.columns()[j].cost;
      for (const auto& e : col_entries_[j]) d -= e.value * y[e.row];
      return d;
    };
    for (auto it = events_.rbegin(); it != events_.rend(); ++it) {
      switch (it->kind) {
        case Event::fixed_column:
        case Event::empty_row: break;
        case Event::fixed_by_row: y[it->row] = reduced_cost(it->col) / it->coef; break;
        case Event::singleton_row: {
          const double d = reduced_cost(it->col);
          const double xv = x[it->col];
          auto at = [&](double b) { return std::abs(xv - b) <= 1e-9 * (1.0 + std::abs(b)); };
          if (it->tightened_lower && d > 0.0 && at(it->new_lower))
            y[it->row] = d / it->coef;
          else if (it->tightened_upper && d < 0.0 && at(it->new_upper))
            y[it->row] = d / it->coef;
          break;
        }
      }
    }
  }

  double objective_offset() const {
    double z = 0.0;
    for (int j = 0; j < num_cols(); ++j)
      if (!col_alive_[j]) z += lp_.columns()[j].cost * x_[j];
    return z;
  }

  std::size_t removed_rows() const {
    return static_cast<std::size_t>(std::count(row_alive_.begin(), row_alive_.end(), 0));
  }
  std::size_t removed_columns() const {
    return static_cast<std::size_t>(std::count(col_alive_.begin(), col_alive_.end(), 0));
  }

 private:
  struct Entry {
    int row;
    double value;
  };
  struct Event {
    enum Kind { fixed_column, fixed_by_row, empty_row, singleton_row } kind;
    int row;
    int col;
    double coef;
    double new_lower;
    double new_upper;
    bool tightened_lower;
    bool tightened_upper;
  };

  const LinearProgram& lp_;
  double tol_;
  std::vector<double> lo_, up_, x_;
  std::vector<char> col_alive_;
  std::vector<int> col_count_;
  std::vector<std::vector<Entry>> col_entries_;
  std::vector<double> row_lo_, row_up_;
  std::vector<char> row_alive_;
  std::vector<int> row_count_;
  std::vector<Event> events_;
  mutable std::vector<int> col_map_, row_map_;

  int num_cols() const { return static_cast<int>(lo_.size()); }
  int num_rows() const { return static_cast<int>(row_lo_.size()); }
  static double finite_abs(double v) { return std::isfinite(v) ? std::abs(v) : 0.0; }

  void remove_column(int j, double value, Event::Kind kind, int row, double coef) {
    col_alive_[j] = 0;
    x_[j] = value;
    for (const auto& e : col_entries_[j]) {
      if (!row_alive_[e.row]) continue;
      row_lo_[e.row] -= e.value * value;
      row_up_[e.row] -= e.value * value;
      --row_count_[e.row];
    }
    events_.push_back({kind, row, j, coef, value, value, false, false});
  }

  bool singleton_row(int i) {
    int j = -1;
    double a = 0.0;
    for (const Term& t : lp_.rows()[i].terms)
      if (t.value != 0.0 && col_alive_[t.column]) {
        j = t.column;
        a = t.value;
        break;
      }
    // Merge duplicate terms of the same column.
    a = 0.0;
    for (const Term& t : lp_.rows()[i].terms)
      if (t.column == j) a += t.value;
    double lo = a > 0.0 ? row_lo_[i] / a : row_up_[i] / a;
    double up = a > 0.0 ? row_up_[i] / a : row_lo_[i] / a;
    const double slack = tol_ * (1.0 + std::max(finite_abs(lo_[j]), finite_abs(up_[j])));

    if (row_lo_[i] == row_up_[i]) {
      const double v = row_lo_[i] / a;
      if (v < lo_[j] - slack || v > up_[j] + slack) return false;
      row_alive_[i] = 0;
      for (const auto& e : col_entries_[j])
        if (e.row == i) --col_count_[j];
      remove_column(j, std::clamp(v, lo_[j], up_[j]), Event::fixed_by_row, i, a);
      return true;
    }

    Event ev{Event::singleton_row, i, j, a, lo_[j], up_[j], false, false};
    if (lo > lo_[j]) {
      ev.tightened_lower = true;
      ev.new_lower = lo;
    }
    if (up < up_[j]) {
      ev.tightened_upper = true;
      ev.new_upper = up;
    }
    if (ev.new_lower > ev.new_upper) {
      if (ev.new_lower > ev.new_upper + slack) return false;
      // Crossing within tolerance: collapse onto the original bound if one
      // side was not tightened, else onto the midpoint.
      const double v = !ev.tightened_lower   ? ev.new_lower
                       : !ev.tightened_upper ? ev.new_upper
                                             : 0.5 * (ev.new_lower + ev.new_upper);
      ev.new_lower = ev.new_upper = v;
    }
    lo_[j] = ev.new_lower;
    up_[j] = ev.new_upper;
    row_alive_[i] = 0;
    for (const auto& e : col_entries_[j])
      if (e.row == i) --col_count_[j];
    events_.push_back(ev);
    return true;
  }
};

}  // namespace geobal
