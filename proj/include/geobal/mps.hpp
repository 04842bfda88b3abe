#pragma once

// Fixed-format MPS.
//
// Writer layout (1-based character columns):
//   field 1: 2-3   field 2: 5-12   field 3: 15-22
//   field 4: 25-36 field 5: 40-47  field 6: 50-61
// Columns are named C0000000, C0000001, ... and rows R0000000, ... in program
// order; the objective row is COST. Numbers use the shortest round-trip form
// when it fits in 12 characters, otherwise the longest %g form that does.
// One matrix entry per COLUMNS line; each column lists its objective
// coefficient first (when nonzero) and then its rows in ascending order.
// BOUNDS uses FX, FR, MI, LO and UP relative to the default [0, +inf).
//
// The reader splits on whitespace, so it also accepts free-format files with
// names free of blanks. RANGES and integer markers are rejected.

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "geobal/csv.hpp"
#include "geobal/lp.hpp"

namespace geobal {

inline std::string mps_column_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "C%07zu", j);
  return buf;
}
inline std::string mps_row_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "R%07zu", i);
  return buf;
}

/// Index encoded in a C0000012 / R0000012 style name.
inline std::optional<std::size_t> parse_mps_index(std::string_view name, char prefix) {
  if (name.size() != 8 || name[0] != prefix) return std::nullopt;
  std::size_t v = 0;
  for (char c : name.substr(1)) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  return v;
}

inline std::string mps_number(double v) {
  std::string s = format_double(v);
  if (s.size() <= 12) return s;
  char buf[64];
  for (int prec = 17; prec >= 1; --prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::string_view(buf).size() <= 12) return buf;
  }
  throw Error("mps: cannot format " + s);
}

namespace detail {

class MpsLine {
 public:
  MpsLine& at(std::size_t column, std::string_view text) {
    if (line_.size() < column) line_.append(column - line_.size(), ' ');
    line_ += text;
    return *this;
  }
  std::string str() const { return line_ + '\n'; }

 private:
  std::string line_;
};

// 0-based starts of the six fields.
inline constexpr std::size_t kF1 = 1, kF2 = 4, kF3 = 14, kF4 = 24, kF5 = 39, kF6 = 49;

}  // namespace detail

inline std::string write_mps(const LinearProgram& lp, std::string_view name = "GEOBAL") {
  using detail::MpsLine;
  std::string out;
  out += MpsLine().at(0, "NAME").at(detail::kF3, name).str();
  out += "ROWS\n";
  out += MpsLine().at(detail::kF1, "N").at(detail::kF2, "COST").str();
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const char* tag = lp.rows()[i].relation == Relation::le   ? "L"
                      : lp.rows()[i].relation == Relation::ge ? "G"
                                                              : "E";
    out += MpsLine().at(detail::kF1, tag).at(detail::kF2, mps_row_name(i)).str();
  }

  std::vector<std::map<std::size_t, double>> by_column(lp.num_columns());
  for (std::size_t i = 0; i < lp.num_rows(); ++i)
    for (const Term& t : lp.rows()[i].terms) by_column[t.column][i] += t.value;

  out += "COLUMNS\n";
  for (std::size_t j = 0; j < lp.num_columns(); ++j) {
    const std::string cname = mps_column_name(j);
    auto entry = [&](const std::string& row, double v) {
      out += MpsLine().at(detail::kF2, cname).at(detail::kF3, row).at(detail::kF4, mps_number(v)).str();
    };
    const double c = lp.columns()[j].cost;
    bool any = false;
    if (c != 0.0) {
      entry("COST", c);
      any = true;
    }
    for (const auto& [i, v] : by_column[j])
      if (v != 0.0) {
        entry(mps_row_name(i), v);
        any = true;
      }
    if (!any) entry("COST", 0.0);
  }

  out += "RHS\n";
  for (std::size_t i = 0; i < lp.num_rows(); ++i)
    if (lp.rows()[i].rhs != 0.0)
      out += MpsLine()
                 .at(detail::kF2, "RHS")
                 .at(detail::kF3, mps_row_name(i))
                 .at(detail::kF4, mps_number(lp.rows()[i].rhs))
                 .str();

  out += "BOUNDS\n";
  for (std::size_t j = 0; j < lp.num_columns(); ++j) {
    const Column& col = lp.columns()[j];
    const std::string cname = mps_column_name(j);
    auto bound = [&](const char* tag, std::optional<double> v) {
      MpsLine l;
      l.at(detail::kF1, tag).at(detail::kF2, "BND").at(detail::kF3, cname);
      if (v) l.at(detail::kF4, mps_number(*v));
      out += l.str();
    };
    const bool lo_inf = std::isinf(col.lower), up_inf = std::isinf(col.upper);
    if (!lo_inf && col.lower == col.upper) {
      bound("FX", col.lower);
    } else if (lo_inf && up_inf) {
      bound("FR", std::nullopt);
    } else {
      if (lo_inf)
        bound("MI", std::nullopt);
      else if (col.lower != 0.0)
        bound("LO", col.lower);
      if (!up_inf) bound("UP", col.upper);
    }
  }
  out += "ENDATA\n";
  return out;
}

inline LinearProgram read_mps_text(std::string_view text, const std::string& source = "mps") {
  enum class Section { none, name, rows, columns, rhs, bounds, done } section = Section::none;
  auto fail = [&](const std::string& msg) -> void { throw UsageError(source + ": " + msg); };

  struct PendingRow {
    std::string name;
    Relation rel;
    double rhs = 0.0;
    std::vector<Term> terms;
  };
  std::string objective_name;
  std::vector<PendingRow> rows;
  std::map<std::string, std::size_t> row_index;
  struct PendingCol {
    std::string name;
    double lower = 0.0, upper = kInf, cost = 0.0;
  };
  std::vector<PendingCol> cols;
  std::map<std::string, std::size_t> col_index;

  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '*') continue;
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (raw[0] != ' ' && raw[0] != '\t') {
      const std::string& head = tok[0];
      if (head == "NAME") section = Section::name;
      else if (head == "ROWS") section = Section::rows;
      else if (head == "COLUMNS") section = Section::columns;
      else if (head == "RHS") section = Section::rhs;
      else if (head == "BOUNDS") section = Section::bounds;
      else if (head == "ENDATA") section = Section::done;
      else fail("unsupported section " + head);
      continue;
    }
    switch (section) {
      case Section::rows: {
        if (tok.size() != 2) fail("bad ROWS line: " + raw);
        const std::string& t = tok[0];
        if (t == "N") {
          if (objective_name.empty()) objective_name = tok[1];
          continue;
        }
        Relation rel = t == "L" ? Relation::le : t == "G" ? Relation::ge : Relation::eq;
        if (t != "L" && t != "G" && t != "E") fail("bad row type " + t);
        if (!row_index.emplace(tok[1], rows.size()).second) fail("duplicate row " + tok[1]);
        rows.push_back({tok[1], rel, 0.0, {}});
        break;
      }
      case Section::columns: {
        if (tok.size() != 3 && tok.size() != 5) fail("bad COLUMNS line: " + raw);
        if (tok[1] == "'MARKER'") fail("integer markers are not supported");
        auto [it, fresh] = col_index.emplace(tok[0], cols.size());
        if (fresh) cols.push_back({tok[0]});
        const int j = static_cast<int>(it->second);
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          const double v = parse_double(tok[k + 1], source);
          if (tok[k] == objective_name) {
            cols[j].cost += v;
            continue;
          }
          auto r = row_index.find(tok[k]);
          if (r == row_index.end()) fail("unknown row " + tok[k]);
          rows[r->second].terms.push_back({j, v});
        }
        break;
      }
      case Section::rhs: {
        if (tok.size() != 3 && tok.size() != 5) fail("bad RHS line: " + raw);
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          if (tok[k] == objective_name) continue;
          auto r = row_index.find(tok[k]);
          if (r == row_index.end()) fail("unknown row " + tok[k]);
          rows[r->second].rhs = parse_double(tok[k + 1], source);
        }
        break;
      }
      case Section::bounds: {
        if (tok.size() < 3) fail("bad BOUNDS line: " + raw);
        auto c = col_index.find(tok[2]);
        if (c == col_index.end()) fail("unknown column " + tok[2]);
        PendingCol& col = cols[c->second];
        const std::string& t = tok[0];
        auto value = [&]() {
          if (tok.size() < 4) fail("missing bound value: " + raw);
          return parse_double(tok[3], source);
        };
        if (t == "FX") col.lower = col.upper = value();
        else if (t == "FR") col.lower = -kInf, col.upper = kInf;
        else if (t == "MI") col.lower = -kInf;
        else if (t == "PL") col.upper = kInf;
        else if (t == "LO") col.lower = value();
        else if (t == "UP") {
          col.upper = value();
          if (col.upper < 0.0 && col.lower == 0.0) col.lower = -kInf;
        } else fail("unsupported bound type " + t);
        break;
      }
      case Section::name:
      case Section::none:
      case Section::done: fail("unexpected line: " + raw);
    }
  }
  if (section != Section::done) fail("missing ENDATA");

  LinearProgram lp;
  for (const auto& c : cols) lp.add_column_named(c.name, EntityRef{c.name, "", "", -1}, c.lower, c.upper, c.cost);
  for (auto& r : rows)
    lp.add_row_named(r.name, EntityRef{r.name, "", "", -1}, r.rel, r.rhs, std::move(r.terms));
  return lp;
}

inline LinearProgram read_mps(const std::filesystem::path& path) {
  return read_mps_text(read_text(path), path.string());
}

}  // namespace geobal
