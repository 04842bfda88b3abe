#pragma once

// Solve pipeline: presolve, power-of-two scaling, bounded primal simplex,
// unscaling and postsolve. Plus optimality certificate checks and the
// column/row CSV interchange used to import external solutions.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "geobal/csv.hpp"
#include "geobal/lp.hpp"
#include "geobal/mps.hpp"
#include "geobal/presolve.hpp"
#include "geobal/simplex.hpp"

namespace geobal {

struct SolverOptions {
  SimplexOptions simplex;
  bool presolve = true;
  bool scale = true;
};

/// Duals follow the convention d = c - A'y with y >= 0 on active >= rows and
/// y <= 0 on active <= rows.
struct SolveResult {
  SolveStatus status = SolveStatus::iteration_limit;
  double objective = 0.0;  // EUR
  std::vector<double> primal;
  std::vector<double> duals;
  long iterations = 0;
  long degenerate_pivots = 0;
  long bland_pivots = 0;
  double wall_time_s = 0.0;
  std::size_t presolve_removed_rows = 0;
  std::size_t presolve_removed_columns = 0;
};

namespace detail {

inline double pow2_round(double v) { return std::exp2(std::round(std::log2(v))); }

struct Scaling {
  std::vector<double> row, col;  // a'_ij = a_ij * row_i * col_j; x = col_j * x'
  double cost = 1.0;
};

inline Scaling geometric_scaling(const BoundedLp& lp, int passes = 6) {
  Scaling s;
  s.row.assign(lp.rows, 1.0);
  s.col.assign(lp.cols, 1.0);
  for (int pass = 0; pass < passes; ++pass) {
    std::vector<double> rmin(lp.rows, kInf), rmax(lp.rows, 0.0);
    for (int j = 0; j < lp.cols; ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(lp.matrix, j); it; ++it) {
        const double v = std::abs(it.value()) * s.col[j];
        const int i = static_cast<int>(it.row());
        rmin[i] = std::min(rmin[i], v);
        rmax[i] = std::max(rmax[i], v);
      }
    for (int i = 0; i < lp.rows; ++i)
      if (rmax[i] > 0.0) s.row[i] = pow2_round(1.0 / std::sqrt(rmin[i] * rmax[i]));
    for (int j = 0; j < lp.cols; ++j) {
      double cmin = kInf, cmax = 0.0;
      for (Eigen::SparseMatrix<double>::InnerIterator it(lp.matrix, j); it; ++it) {
        const double v = std::abs(it.value()) * s.row[it.row()];
        cmin = std::min(cmin, v);
        cmax = std::max(cmax, v);
      }
      if (cmax > 0.0) s.col[j] = pow2_round(1.0 / std::sqrt(cmin * cmax));
    }
  }
  double cmax = 0.0;
  for (int j = 0; j < lp.cols; ++j) cmax = std::max(cmax, std::abs(lp.cost[j]) * s.col[j]);
  if (cmax > 0.0) s.cost = pow2_round(1.0 / cmax);
  return s;
}

inline BoundedLp apply_scaling(const BoundedLp& lp, const Scaling& s) {
  BoundedLp out = lp;
  for (int j = 0; j < lp.cols; ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(out.matrix, j); it; ++it)
      it.valueRef() *= s.row[it.row()] * s.col[j];
    out.cost[j] *= s.cost * s.col[j];
    out.lower[j] /= s.col[j];
    out.upper[j] /= s.col[j];
  }
  for (int i = 0; i < lp.rows; ++i) {
    out.row_lower[i] *= s.row[i];
    out.row_upper[i] *= s.row[i];
  }
  return out;
}

}  // namespace detail

inline SolveResult solve(const LinearProgram& lp, const SolverOptions& options = {},
                         BlockCache* cache = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  SolveResult res;
  const auto finish = [&]() {
    res.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
  };

  Presolver pre(lp, options.presolve ? 1e-9 : -1.0);
  if (options.presolve && pre.run() == PresolveStatus::infeasible) {
    res.status = SolveStatus::infeasible;
    res.primal.assign(lp.num_columns(), 0.0);
    res.duals.assign(lp.num_rows(), 0.0);
    return finish();
  }
  res.presolve_removed_rows = pre.removed_rows();
  res.presolve_removed_columns = pre.removed_columns();

  BoundedLp reduced = pre.reduced();
  detail::Scaling scaling;
  if (options.scale) {
    scaling = detail::geometric_scaling(reduced);
  } else {
    scaling.row.assign(reduced.rows, 1.0);
    scaling.col.assign(reduced.cols, 1.0);
  }
  const BoundedLp scaled = options.scale ? detail::apply_scaling(reduced, scaling) : reduced;

  const SimplexResult sr = solve_by_blocks(scaled, options.simplex, cache);
  res.status = sr.status;
  res.iterations = sr.iterations;
  res.degenerate_pivots = sr.degenerate_pivots;
  res.bland_pivots = sr.bland_pivots;

  std::vector<double> x(reduced.cols), y(reduced.rows);
  for (int j = 0; j < reduced.cols; ++j) x[j] = sr.x[j] * scaling.col[j];
  for (int i = 0; i < reduced.rows; ++i) y[i] = sr.duals[i] * scaling.row[i] / scaling.cost;
  pre.postsolve(x, y, res.primal, res.duals);

  const auto& cols = lp.columns();
  for (std::size_t j = 0; j < cols.size(); ++j)
    res.primal[j] = std::clamp(res.primal[j], cols[j].lower, cols[j].upper);
  res.objective = lp.objective(res.primal);
  return finish();
}

struct CertificateReport {
  double primal_residual = 0.0;  // worst bound or row violation, absolute
  double dual_residual = 0.0;    // worst wrong-signed dual or reduced cost
  double complementarity = 0.0;  // worst |dual| x distance to the bound it prices
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  std::string worst_primal;  // row or column name
  std::string worst_dual;
  std::string worst_complementarity;
  bool primal_ok = false;
  bool dual_ok = false;
  bool complementarity_ok = false;
  bool gap_ok = false;

  bool ok() const { return primal_ok && dual_ok && complementarity_ok && gap_ok; }
};

/// Checks a primal/dual pair against the original program. Tolerances:
/// 1e-6 absolute on primal feasibility, 1e-6 (1 + |z|) on the duality gap and
/// complementarity, 1e-6 (1 + max |c|) on dual feasibility.
inline CertificateReport verify_certificate(const LinearProgram& lp,
                                            const std::vector<double>& x,
                                            const std::vector<double>& y) {
  CertificateReport rep;
  const auto& cols = lp.columns();
  const auto& rows = lp.rows();
  if (x.size() != cols.size() || y.size() != rows.size())
    throw Error("certificate: solution size does not match the program");

  auto worse = [](double v, double& worst, std::string& where, const std::string& name) {
    if (v > worst) {
      worst = v;
      where = name;
    }
  };

  std::vector<double> d(cols.size());
  double cmax = 0.0;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    d[j] = cols[j].cost;
    cmax = std::max(cmax, std::abs(cols[j].cost));
  }
  double dual_obj = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const double act = lp.activity(i, x);
    double viol = 0.0;
    if (r.relation != Relation::le) viol = std::max(viol, r.rhs - act);
    if (r.relation != Relation::ge) viol = std::max(viol, act - r.rhs);
    worse(viol, rep.primal_residual, rep.worst_primal, r.name);
    for (const Term& t : r.terms) d[t.column] -= t.value * y[i];

    double wrong = 0.0;
    if (r.relation == Relation::le) wrong = std::max(0.0, y[i]);
    if (r.relation == Relation::ge) wrong = std::max(0.0, -y[i]);
    worse(wrong, rep.dual_residual, rep.worst_dual, r.name);
    dual_obj += y[i] * r.rhs;
    worse(std::abs(y[i]) * std::abs(act - r.rhs), rep.complementarity,
          rep.worst_complementarity, r.name);
  }
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const Column& c = cols[j];
    worse(std::max({0.0, c.lower - x[j], x[j] - c.upper}), rep.primal_residual, rep.worst_primal,
          c.name);
    // A positive reduced cost is priced by the lower bound, a negative one by the upper.
    const double bound = d[j] >= 0.0 ? c.lower : c.upper;
    if (!std::isfinite(bound)) {
      worse(std::abs(d[j]), rep.dual_residual, rep.worst_dual, c.name);
    } else {
      dual_obj += d[j] * bound;
      worse(std::abs(d[j]) * std::abs(x[j] - bound), rep.complementarity,
            rep.worst_complementarity, c.name);
    }
  }
  rep.primal_objective = lp.objective(x);
  rep.dual_objective = dual_obj;
  rep.gap = std::abs(rep.primal_objective - rep.dual_objective);
  const double ztol = 1e-6 * (1.0 + std::abs(rep.primal_objective));
  rep.primal_ok = rep.primal_residual <= 1e-6;
  rep.dual_ok = rep.dual_residual <= 1e-6 * (1.0 + cmax);
  rep.complementarity_ok = rep.complementarity <= ztol;
  rep.gap_ok = rep.gap <= ztol;
  return rep;
}

inline CertificateReport verify_certificate(const LinearProgram& lp, const SolveResult& r) {
  return verify_certificate(lp, r.primal, r.duals);
}

/// `column,value` with one line per LP column in program order.
inline std::string solution_csv(const LinearProgram& lp, const std::vector<double>& x) {
  std::string out = "column,value\n";
  for (std::size_t j = 0; j < lp.num_columns(); ++j)
    out += lp.columns()[j].name + ',' + format_double(x[j]) + '\n';
  return out;
}

/// `row,dual` with one line per LP row in program order.
inline std::string duals_csv(const LinearProgram& lp, const std::vector<double>& y) {
  std::string out = "row,dual\n";
  for (std::size_t i = 0; i < lp.num_rows(); ++i)
    out += lp.rows()[i].name + ',' + format_double(y[i]) + '\n';
  return out;
}

namespace detail {
inline std::vector<double> read_named_values(const std::filesystem::path& path,
                                             const std::string& key_header,
                                             const std::string& value_header,
                                             std::size_t size, auto&& index_of) {
  const CsvTable t = read_csv(path);
  if (t.header.size() != 2 || t.header[0] != key_header || t.header[1] != value_header)
    throw UsageError(path.string() + ": expected header " + key_header + "," + value_header);
  std::vector<double> out(size, 0.0);
  std::vector<char> seen(size, 0);
  for (const auto& row : t.rows) {
    auto idx = index_of(row[0]);
    if (!idx) throw UsageError(path.string() + ": unknown name " + row[0]);
    if (seen[*idx]) throw UsageError(path.string() + ": duplicate name " + row[0]);
    seen[*idx] = 1;
    out[*idx] = parse_double(row[1], path.string());
  }
  return out;
}
}  // namespace detail

/// Reads a `column,value` file; columns not listed are zero. Names may be
/// the program's own or the C0000000 form used in MPS exports.
inline std::vector<double> read_solution_csv(const std::filesystem::path& path,
                                             const LinearProgram& lp) {
  return detail::read_named_values(
      path, "column", "value", lp.num_columns(), [&](const std::string& n) -> std::optional<int> {
        if (auto j = lp.column_index(n)) return j;
        if (auto j = parse_mps_index(n, 'C'); j && *j < lp.num_columns()) return static_cast<int>(*j);
        return std::nullopt;
      });
}

/// Reads a `row,dual` file; rows not listed are zero. Accepts R0000000 names.
inline std::vector<double> read_duals_csv(const std::filesystem::path& path,
                                          const LinearProgram& lp) {
  return detail::read_named_values(
      path, "row", "dual", lp.num_rows(), [&](const std::string& n) -> std::optional<int> {
        if (auto i = lp.row_index(n)) return i;
        if (auto i = parse_mps_index(n, 'R'); i && *i < lp.num_rows()) return static_cast<int>(*i);
        return std::nullopt;
      });
}

}  // namespace geobal
