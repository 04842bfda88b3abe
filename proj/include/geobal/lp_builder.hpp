#pragma once

// PowerSystemSpec -> LinearProgram.
//
// Column families (name = family|country|entity|hour):
//   N          installed power of generation, run-of-river and VRE   [MW]
//   N_p_in     storage charging power                                [MW]
//   N_p_out    storage / reservoir discharging power                 [MW]
//   N_e        storage / reservoir energy                            [MWh]
//   G          hourly generation                                     [MWh]
//   STO_in     hourly storage charging                               [MWh]
//   STO_out    hourly storage discharging                            [MWh]
//   L          storage level at the end of the hour                  [MWh]
//   RSV_out    reservoir release to the grid                         [MWh]
//   RSV_L      reservoir level                                       [MWh]
//   RSV_spill  reservoir spill                                       [MWh]
//   F          signed flow on a line (entity = line id, no country)  [MWh]
//
// Row families:
//   BAL        energy balance per country and hour (=)
//   CAP        G <= N, G <= cf N, or G <= efficiency cf N for run-of-river
//   LVL        L_h - retention L_{h-1} - eta_in STO_in + STO_out / eta_out = 0
//   LCAP, INCAP, OUTCAP   L <= N_e, STO_in <= N_p_in, STO_out <= N_p_out
//   RLVL       RSV_L_h - retention RSV_L_{h-1} + RSV_out / eta_out + spill = inflow
//   RCAP, RLCAP           RSV_out <= N_p_out, RSV_L <= N_e
// Levels are cyclic: hour 0 links to hour T-1.
//
// Non-expandable technologies get fixed capacity columns at their exogenous
// value and are skipped when that value is zero everywhere. VRE columns exist
// for every (country, technology) pair; offshore wind gets an upper bound of
// zero where the country is neither offshore eligible nor pinned.
//
// Ordering: countries and technologies in spec order; per (country, tech) the
// capacity columns first, then hourly families in the order above with hours
// ascending; lines last.

#include <map>
#include <string>
#include <vector>

#include "geobal/lp.hpp"
#include "geobal/model.hpp"

namespace geobal {

struct BuildReport {
  std::size_t horizon = 0;
  bool interconnection = false;
  std::map<std::string, std::size_t> column_counts;  // by family
  std::map<std::string, std::size_t> row_counts;
  std::size_t generation_pairs = 0;  // (country, tech) with G columns
  std::size_t storage_pairs = 0;
  std::size_t reservoir_pairs = 0;
  std::size_t lines = 0;             // lines with flow columns
  std::size_t balance_nodes = 0;

  std::size_t columns() const { return total(column_counts); }
  std::size_t rows() const { return total(row_counts); }

  /// Column count predicted from the pair counts:
  ///   g (1 + T) + s (3 + 3T) + r (2 + 3T) + lines T
  std::size_t closed_form_columns() const {
    const std::size_t t = horizon;
    return generation_pairs * (1 + t) + storage_pairs * (3 + 3 * t) +
           reservoir_pairs * (2 + 3 * t) + lines * t;
  }
  /// Row count predicted from the pair counts:
  ///   countries T + g T + 4 s T + 3 r T
  std::size_t closed_form_rows() const {
    const std::size_t t = horizon;
    return balance_nodes * t + generation_pairs * t + 4 * storage_pairs * t +
           3 * reservoir_pairs * t;
  }

 private:
  static std::size_t total(const std::map<std::string, std::size_t>& m) {
    std::size_t n = 0;
    for (const auto& [k, v] : m) n += v;
    return n;
  }
};

namespace detail {

inline bool has_generation(const PowerSystemSpec& spec, const Country& c, const Technology& t) {
  if (t.kind == TechKind::variable_renewable) return true;
  if (t.expandable) return true;
  const ExogenousCapacity* e = spec.find_exogenous(c.code, t.id);
  return e && e->power_discharge > 0.0;
}

inline bool has_storage(const PowerSystemSpec& spec, const Country& c, const Technology& t) {
  if (t.expandable) return true;
  const ExogenousCapacity* e = spec.find_exogenous(c.code, t.id);
  return e && (e->power_discharge > 0.0 || e->power_charge > 0.0 || e->energy > 0.0);
}

inline double per_mw(double per_kw_cost, double fixed_per_kw, const Technology& t,
                     const PowerSystemSpec& spec) {
  return (annuity(per_kw_cost, t.lifetime, spec.annuity_rate) + fixed_per_kw) * 1000.0 *
         spec.horizon_fraction();
}

/// Capacity column bounds for (country, tech): fixed at the exogenous value
/// for legacy technologies, fixed at the pinned value, zero for ineligible
/// offshore, free otherwise.
inline std::pair<double, double> capacity_bounds(const PowerSystemSpec& spec, const Country& c,
                                                 const Technology& t, double exogenous) {
  if (!t.expandable) return {exogenous, exogenous};
  if (const PinnedCapacity* p = spec.find_pinned(c.code, t.id)) return {p->power, p->power};
  if (t.role == TechRole::wind_offshore && !c.offshore_eligible) return {0.0, 0.0};
  return {0.0, kInf};
}

}  // namespace detail

/// Declares every column with its bounds and a zero cost.
inline LinearProgram declare_columns(const PowerSystemSpec& spec) {
  LinearProgram lp;
  const int horizon = static_cast<int>(spec.time_series.horizon);
  for (const Country& c : spec.countries) {
    for (const Technology& t : spec.technologies) {
      const ExogenousCapacity* exo = spec.find_exogenous(c.code, t.id);
      auto hourly = [&](const char* family, double lo, double up) {
        for (int h = 0; h < horizon; ++h) lp.add_column({family, c.code, t.id, h}, lo, up, 0.0);
      };
      switch (t.kind) {
        case TechKind::dispatchable:
        case TechKind::variable_renewable:
        case TechKind::run_of_river: {
          if (!detail::has_generation(spec, c, t)) break;
          auto [lo, up] = detail::capacity_bounds(spec, c, t, exo ? exo->power_discharge : 0.0);
          lp.add_column({"N", c.code, t.id, -1}, lo, up, 0.0);
          hourly("G", 0.0, kInf);
          break;
        }
        case TechKind::storage: {
          if (!detail::has_storage(spec, c, t)) break;
          auto pin = detail::capacity_bounds(spec, c, t, exo ? exo->power_charge : 0.0);
          auto pout = detail::capacity_bounds(spec, c, t, exo ? exo->power_discharge : 0.0);
          auto e = detail::capacity_bounds(spec, c, t, exo ? exo->energy : 0.0);
          lp.add_column({"N_p_in", c.code, t.id, -1}, pin.first, pin.second, 0.0);
          lp.add_column({"N_p_out", c.code, t.id, -1}, pout.first, pout.second, 0.0);
          lp.add_column({"N_e", c.code, t.id, -1}, e.first, e.second, 0.0);
          hourly("STO_in", 0.0, kInf);
          hourly("STO_out", 0.0, kInf);
          hourly("L", 0.0, kInf);
          break;
        }
        case TechKind::reservoir: {
          if (!detail::has_storage(spec, c, t)) break;
          auto pout = detail::capacity_bounds(spec, c, t, exo ? exo->power_discharge : 0.0);
          auto e = detail::capacity_bounds(spec, c, t, exo ? exo->energy : 0.0);
          lp.add_column({"N_p_out", c.code, t.id, -1}, pout.first, pout.second, 0.0);
          lp.add_column({"N_e", c.code, t.id, -1}, e.first, e.second, 0.0);
          hourly("RSV_out", 0.0, kInf);
          hourly("RSV_L", 0.0, kInf);
          hourly("RSV_spill", 0.0, kInf);
          break;
        }
      }
    }
  }
  if (spec.interconnection_enabled)
    for (const Interconnector& l : spec.interconnectors)
      for (int h = 0; h < horizon; ++h) lp.add_column({"F", "", l.id(), h}, -l.ntc, l.ntc, 0.0);
  return lp;
}

/// Cost coefficient per declared column: marginal costs on hourly dispatch,
/// annuitized investment plus fixed cost on expandable capacity, both per MW
/// or MWh and investment scaled by T/8760.
inline std::vector<double> build_objective(const PowerSystemSpec& spec, const LinearProgram& lp) {
  std::vector<double> cost(lp.num_columns(), 0.0);
  for (std::size_t j = 0; j < lp.num_columns(); ++j) {
    const EntityRef& m = lp.columns()[j].meta;
    if (m.family == "F") continue;
    const Technology* t = spec.find_technology(m.entity);
    if (!t) throw Error("objective: unknown technology " + m.entity);
    const std::string& f = m.family;
    if (f == "G" || f == "STO_in" || f == "STO_out" || f == "RSV_out") {
      cost[j] = t->marginal_cost;
      continue;
    }
    if (!t->expandable) continue;
    if (f == "N") {
      if (!(t->overnight_cost_power > 0.0 || t->fixed_cost > 0.0))
        throw Error("objective: missing power cost for expandable technology " + t->id);
      cost[j] = detail::per_mw(t->overnight_cost_power, t->fixed_cost, *t, spec);
    } else if (f == "N_p_in") {
      cost[j] = detail::per_mw(t->overnight_cost_charge, t->fixed_cost_charge, *t, spec);
    } else if (f == "N_p_out") {
      cost[j] = detail::per_mw(t->overnight_cost_discharge, t->fixed_cost, *t, spec);
    } else if (f == "N_e") {
      cost[j] = detail::per_mw(t->overnight_cost_energy, t->fixed_cost_energy, *t, spec);
    }
    if ((f == "N_p_in" || f == "N_p_out" || f == "N_e") && t->kind == TechKind::storage &&
        !(t->overnight_cost_energy > 0.0 && t->overnight_cost_charge > 0.0 &&
          t->overnight_cost_discharge > 0.0))
      throw Error("objective: missing storage cost for expandable technology " + t->id);
  }
  return cost;
}

inline std::vector<double> build_objective(const PowerSystemSpec& spec) {
  return build_objective(spec, declare_columns(spec));
}

namespace detail {

inline int require_column(const LinearProgram& lp, const EntityRef& ref) {
  auto j = lp.column_index(ref.name());
  if (!j) throw Error("LP column missing: " + ref.name());
  return *j;
}

}  // namespace detail

/// One equality per (country, hour):
///   sum G + sum STO_out - sum STO_in + sum RSV_out + sum_l i_ln F_l = load,
/// with i = +1 at the line's from-country and -1 at its to-country.
inline std::vector<Row> build_energy_balance(const PowerSystemSpec& spec, const LinearProgram& lp) {
  const int horizon = static_cast<int>(spec.time_series.horizon);
  std::vector<Row> rows;
  for (const Country& c : spec.countries) {
    const auto& load = spec.time_series.load.at(c.code);
    for (int h = 0; h < horizon; ++h) {
      Row r;
      r.meta = {"BAL", c.code, "", h};
      r.name = r.meta.name();
      r.relation = Relation::eq;
      r.rhs = load[h];
      for (const Technology& t : spec.technologies) {
        auto add = [&](const char* family, double coef) {
          if (auto j = lp.column_index(EntityRef{family, c.code, t.id, h}.name()))
            r.terms.push_back({*j, coef});
        };
        add("G", 1.0);
        add("STO_out", 1.0);
        add("STO_in", -1.0);
        add("RSV_out", 1.0);
      }
      if (spec.interconnection_enabled)
        for (const Interconnector& l : spec.interconnectors) {
          if (l.from_country != c.code && l.to_country != c.code) continue;
          const int j = detail::require_column(lp, {"F", "", l.id(), h});
          r.terms.push_back({j, l.from_country == c.code ? 1.0 : -1.0});
        }
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

inline std::vector<Row> build_capacity_and_storage_constraints(const PowerSystemSpec& spec,
                                                               const LinearProgram& lp) {
  const int horizon = static_cast<int>(spec.time_series.horizon);
  std::vector<Row> rows;
  auto emit = [&](EntityRef meta, Relation rel, double rhs, std::vector<Term> terms) {
    Row r;
    r.name = meta.name();
    r.meta = std::move(meta);
    r.relation = rel;
    r.rhs = rhs;
    r.terms = std::move(terms);
    rows.push_back(std::move(r));
  };
  // L_h - retention L_{h-1} + ...; merges the two level terms when T = 1.
  auto level_terms = [&](int self, int prev, double retention) {
    if (self == prev) return std::vector<Term>{{self, 1.0 - retention}};
    return std::vector<Term>{{self, 1.0}, {prev, -retention}};
  };

  for (const Country& c : spec.countries) {
    for (const Technology& t : spec.technologies) {
      auto col = [&](const char* family, int h) {
        return lp.column_index(EntityRef{family, c.code, t.id, h}.name());
      };
      switch (t.kind) {
        case TechKind::dispatchable:
        case TechKind::variable_renewable:
        case TechKind::run_of_river: {
          auto n = col("N", -1);
          if (!n) break;
          const std::vector<double>* cf = nullptr;
          double factor = 1.0;
          if (t.kind != TechKind::dispatchable) {
            cf = spec.find_capacity_factor(c.code, t.id);
            if (!cf) throw Error("missing capacity factor series " + c.code + "/" + t.id);
            if (t.kind == TechKind::run_of_river) factor = t.efficiency;
          }
          for (int h = 0; h < horizon; ++h) {
            const double avail = cf ? factor * (*cf)[h] : 1.0;
            emit({"CAP", c.code, t.id, h}, Relation::le, 0.0, {{*col("G", h), 1.0}, {*n, -avail}});
          }
          break;
        }
        case TechKind::storage: {
          auto ne = col("N_e", -1);
          if (!ne) break;
          const int pin = *col("N_p_in", -1), pout = *col("N_p_out", -1);
          for (int h = 0; h < horizon; ++h) {
            const int lvl = *col("L", h), prev = *col("L", (h + horizon - 1) % horizon);
            auto terms = level_terms(lvl, prev, t.self_discharge_retention);
            terms.push_back({*col("STO_in", h), -t.efficiency_in});
            terms.push_back({*col("STO_out", h), 1.0 / t.efficiency_out});
            emit({"LVL", c.code, t.id, h}, Relation::eq, 0.0, std::move(terms));
          }
          for (int h = 0; h < horizon; ++h)
            emit({"LCAP", c.code, t.id, h}, Relation::le, 0.0, {{*col("L", h), 1.0}, {*ne, -1.0}});
          for (int h = 0; h < horizon; ++h)
            emit({"INCAP", c.code, t.id, h}, Relation::le, 0.0,
                 {{*col("STO_in", h), 1.0}, {pin, -1.0}});
          for (int h = 0; h < horizon; ++h)
            emit({"OUTCAP", c.code, t.id, h}, Relation::le, 0.0,
                 {{*col("STO_out", h), 1.0}, {pout, -1.0}});
          break;
        }
        case TechKind::reservoir: {
          auto ne = col("N_e", -1);
          if (!ne) break;
          const int pout = *col("N_p_out", -1);
          auto inflow = spec.time_series.reservoir_inflow.find(c.code);
          if (inflow == spec.time_series.reservoir_inflow.end())
            throw Error("missing reservoir inflow series for " + c.code);
          for (int h = 0; h < horizon; ++h) {
            const int lvl = *col("RSV_L", h), prev = *col("RSV_L", (h + horizon - 1) % horizon);
            auto terms = level_terms(lvl, prev, t.self_discharge_retention);
            terms.push_back({*col("RSV_out", h), 1.0 / t.efficiency_out});
            terms.push_back({*col("RSV_spill", h), 1.0});
            emit({"RLVL", c.code, t.id, h}, Relation::eq, inflow->second[h], std::move(terms));
          }
          for (int h = 0; h < horizon; ++h)
            emit({"RCAP", c.code, t.id, h}, Relation::le, 0.0,
                 {{*col("RSV_out", h), 1.0}, {pout, -1.0}});
          for (int h = 0; h < horizon; ++h)
            emit({"RLCAP", c.code, t.id, h}, Relation::le, 0.0,
                 {{*col("RSV_L", h), 1.0}, {*ne, -1.0}});
          break;
        }
      }
    }
  }
  return rows;
}

inline std::vector<Row> build_energy_balance(const PowerSystemSpec& spec) {
  return build_energy_balance(spec, declare_columns(spec));
}
inline std::vector<Row> build_capacity_and_storage_constraints(const PowerSystemSpec& spec) {
  return build_capacity_and_storage_constraints(spec, declare_columns(spec));
}

struct AssembledLp {
  LinearProgram lp;
  BuildReport report;
};

/// Validates, declares columns, attaches costs, then appends balance rows
/// followed by capacity and storage rows.
inline AssembledLp assemble(const PowerSystemSpec& spec) {
  if (auto v = validate(spec); !v.empty()) throw Error("invalid system: " + v.front().str());
  AssembledLp out;
  out.lp = declare_columns(spec);
  const auto cost = build_objective(spec, out.lp);
  for (std::size_t j = 0; j < cost.size(); ++j) out.lp.columns()[j].cost = cost[j];
  for (Row& r : build_energy_balance(spec, out.lp))
    out.lp.add_row_named(std::move(r.name), std::move(r.meta), r.relation, r.rhs, std::move(r.terms));
  for (Row& r : build_capacity_and_storage_constraints(spec, out.lp))
    out.lp.add_row_named(std::move(r.name), std::move(r.meta), r.relation, r.rhs, std::move(r.terms));

  BuildReport& rep = out.report;
  rep.horizon = spec.time_series.horizon;
  rep.interconnection = spec.interconnection_enabled;
  rep.balance_nodes = spec.countries.size();
  for (const Column& c : out.lp.columns()) {
    ++rep.column_counts[c.meta.family];
    if (c.meta.hour >= 0) continue;
    if (c.meta.family == "N") ++rep.generation_pairs;
    if (c.meta.family == "N_p_in") ++rep.storage_pairs;
  }
  for (const Row& r : out.lp.rows()) ++rep.row_counts[r.meta.family];
  rep.reservoir_pairs = rep.column_counts.count("RSV_L") && rep.horizon > 0
                            ? rep.column_counts["RSV_L"] / rep.horizon
                            : 0;
  rep.lines = spec.interconnection_enabled ? spec.interconnectors.size() : 0;
  return out;
}

}  // namespace geobal
