#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "geobal/csv.hpp"
#include "geobal/error.hpp"

namespace geobal {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { le, eq, ge };

inline std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::le: return "<=";
    case Relation::eq: return "=";
    case Relation::ge: return ">=";
  }
  return "?";
}

/// Where an LP column or row comes from. `hour` is -1 for non-hourly entities.
/// Names are `family|country|entity|hour`, e.g. `G|DE|wind_onshore|12`.
struct EntityRef {
  std::string family;
  std::string country;
  std::string entity;
  int hour = -1;

  std::string name() const {
    std::string s = family + '|' + country + '|' + entity + '|';
    if (hour >= 0) s += std::to_string(hour);
    return s;
  }
  static EntityRef parse(std::string_view name) {
    auto parts = split(name, '|');
    if (parts.size() != 4) return EntityRef{std::string(name), "", "", -1};
    EntityRef e{parts[0], parts[1], parts[2], -1};
    if (!parts[3].empty()) e.hour = std::stoi(parts[3]);
    return e;
  }
  bool operator==(const EntityRef&) const = default;
};

struct Term {
  int column;
  double value;
};

struct Column {
  std::string name;
  EntityRef meta;
  double lower = 0.0;
  double upper = kInf;
  double cost = 0.0;
};

struct Row {
  std::string name;
  EntityRef meta;
  Relation relation = Relation::eq;
  double rhs = 0.0;
  std::vector<Term> terms;
};

/// min c'x  s.t.  rows (<=, =, >=),  lower <= x <= upper.
class LinearProgram {
 public:
  int add_column(EntityRef meta, double lower, double upper, double cost) {
    std::string name = meta.name();
    return add_column_named(std::move(name), std::move(meta), lower, upper, cost);
  }
  int add_column_named(std::string name, EntityRef meta, double lower, double upper,
                       double cost) {
    const int idx = static_cast<int>(columns_.size());
    if (!column_index_.emplace(name, idx).second) throw Error("duplicate LP column " + name);
    columns_.push_back({std::move(name), std::move(meta), lower, upper, cost});
    return idx;
  }
  int add_row(EntityRef meta, Relation rel, double rhs, std::vector<Term> terms) {
    std::string name = meta.name();
    return add_row_named(std::move(name), std::move(meta), rel, rhs, std::move(terms));
  }
  int add_row_named(std::string name, EntityRef meta, Relation rel, double rhs,
                    std::vector<Term> terms) {
    const int idx = static_cast<int>(rows_.size());
    if (!row_index_.emplace(name, idx).second) throw Error("duplicate LP row " + name);
    rows_.push_back({std::move(name), std::move(meta), rel, rhs, std::move(terms)});
    return idx;
  }

  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::vector<Column>& columns() { return columns_; }
  std::vector<Row>& rows() { return rows_; }
  std::size_t num_columns() const { return columns_.size(); }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_nonzeros() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.terms.size();
    return n;
  }

  std::optional<int> column_index(std::string_view name) const {
    auto it = column_index_.find(std::string(name));
    if (it == column_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<int> row_index(std::string_view name) const {
    auto it = row_index_.find(std::string(name));
    if (it == row_index_.end()) return std::nullopt;
    return it->second;
  }

  double objective(const std::vector<double>& x) const {
    double z = 0.0;
    for (std::size_t j = 0; j < columns_.size(); ++j) z += columns_[j].cost * x[j];
    return z;
  }
  double activity(std::size_t row, const std::vector<double>& x) const {
    double a = 0.0;
    for (const auto& t : rows_[row].terms) a += t.value * x[t.column];
    return a;
  }

  /// Empty when the structural invariants hold.
  std::vector<std::string> check() const {
    std::vector<std::string> problems;
    for (const auto& c : columns_)
      if (!(c.lower <= c.upper)) problems.push_back("column " + c.name + ": lower > upper");
    for (const auto& r : rows_)
      for (const auto& t : r.terms)
        if (t.column < 0 || t.column >= static_cast<int>(columns_.size()))
          problems.push_back("row " + r.name + " references a missing column");
    return problems;
  }

 private:
  std::vector<Column> columns_;
  std::vector<Row> rows_;
  std::unordered_map<std::string, int> column_index_;
  std::unordered_map<std::string, int> row_index_;
};

}  // namespace geobal
