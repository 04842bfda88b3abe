#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geobal/error.hpp"

namespace geobal {

inline constexpr double kHoursPerYear = 8760.0;

enum class TechKind { dispatchable, variable_renewable, storage, reservoir, run_of_river };

/// What a technology stands for when factors are harmonized and metrics are
/// aggregated. The LP only looks at TechKind.
enum class TechRole {
  wind_onshore,
  wind_offshore,
  solar,
  bioenergy,
  run_of_river,
  reservoir,
  pumped_hydro,
  short_storage,
  long_storage,
  other
};

inline std::string_view to_string(TechKind k) {
  switch (k) {
    case TechKind::dispatchable: return "dispatchable";
    case TechKind::variable_renewable: return "variable-renewable";
    case TechKind::storage: return "storage";
    case TechKind::reservoir: return "reservoir";
    case TechKind::run_of_river: return "run-of-river";
  }
  return "?";
}

inline std::string_view to_string(TechRole r) {
  switch (r) {
    case TechRole::wind_onshore: return "wind-onshore";
    case TechRole::wind_offshore: return "wind-offshore";
    case TechRole::solar: return "solar";
    case TechRole::bioenergy: return "bioenergy";
    case TechRole::run_of_river: return "run-of-river";
    case TechRole::reservoir: return "reservoir";
    case TechRole::pumped_hydro: return "pumped-hydro";
    case TechRole::short_storage: return "short-storage";
    case TechRole::long_storage: return "long-storage";
    case TechRole::other: return "other";
  }
  return "?";
}

inline TechKind parse_tech_kind(std::string_view s) {
  for (auto k : {TechKind::dispatchable, TechKind::variable_renewable, TechKind::storage,
                 TechKind::reservoir, TechKind::run_of_river})
    if (to_string(k) == s) return k;
  throw UsageError("unknown technology kind '" + std::string(s) + "'");
}

inline TechRole parse_tech_role(std::string_view s) {
  for (auto r : {TechRole::wind_onshore, TechRole::wind_offshore, TechRole::solar,
                 TechRole::bioenergy, TechRole::run_of_river, TechRole::reservoir,
                 TechRole::pumped_hydro, TechRole::short_storage, TechRole::long_storage,
                 TechRole::other})
    if (to_string(r) == s) return r;
  throw UsageError("unknown technology role '" + std::string(s) + "'");
}

inline bool is_hydro(TechRole r) {
  return r == TechRole::run_of_river || r == TechRole::reservoir || r == TechRole::pumped_hydro;
}
inline bool is_wind(TechRole r) {
  return r == TechRole::wind_onshore || r == TechRole::wind_offshore;
}

struct Country {
  std::string code;
  double yearly_load_total = 0.0;  // MWh
  bool offshore_eligible = false;

  bool operator==(const Country&) const = default;
};

/// Cost fields use the units of the published tables (EUR/kW, EUR/kWh);
/// the LP builder converts them to per-MW(h) coefficients.
struct Technology {
  std::string id;
  TechKind kind = TechKind::dispatchable;
  TechRole role = TechRole::other;
  double marginal_cost = 0.0;             // EUR/MWh
  double overnight_cost_power = 0.0;      // EUR/kW, generation capacity
  double overnight_cost_energy = 0.0;     // EUR/kWh, storage and reservoir only
  double overnight_cost_charge = 0.0;     // EUR/kW
  double overnight_cost_discharge = 0.0;  // EUR/kW
  double fixed_cost = 0.0;                // EUR/kW/a, generation or discharge power
  double fixed_cost_charge = 0.0;         // EUR/kW/a
  double fixed_cost_energy = 0.0;         // EUR/kWh/a
  double lifetime = 1.0;                  // years
  double efficiency = 1.0;                // run-of-river: multiplier on availability
  double efficiency_in = 1.0;
  double efficiency_out = 1.0;
  double self_discharge_retention = 1.0;  // per hour
  bool expandable = false;

  bool operator==(const Technology&) const = default;
};

using SeriesKey = std::pair<std::string, std::string>;  // (country, technology)

struct TimeSeriesSet {
  std::size_t horizon = 0;
  std::map<SeriesKey, std::vector<double>> capacity_factors;  // VRE and run-of-river
  std::map<std::string, std::vector<double>> load;             // MWh/h
  std::map<std::string, std::vector<double>> reservoir_inflow;  // MWh/h

  bool operator==(const TimeSeriesSet&) const = default;
};

struct Interconnector {
  std::string from_country;
  std::string to_country;
  double ntc = 0.0;  // MW

  std::string id() const { return from_country + "_" + to_country; }
  bool operator==(const Interconnector&) const = default;
};

/// Legacy capacity of a non-expandable technology; costs are sunk.
struct ExogenousCapacity {
  std::string country;
  std::string technology;
  double power_discharge = 0.0;  // MW (generation power for non-storage)
  double power_charge = 0.0;     // MW
  double energy = 0.0;           // MWh

  bool operator==(const ExogenousCapacity&) const = default;
};

/// Installed power of an expandable technology fixed by harmonization (the
/// reference offshore share); overrides offshore eligibility.
struct PinnedCapacity {
  std::string country;
  std::string technology;
  double power = 0.0;  // MW

  bool operator==(const PinnedCapacity&) const = default;
};

struct PowerSystemSpec {
  std::vector<Country> countries;
  std::vector<Technology> technologies;
  TimeSeriesSet time_series;
  std::vector<Interconnector> interconnectors;
  std::vector<ExogenousCapacity> exogenous_capacities;
  std::vector<PinnedCapacity> pinned_capacities;
  bool interconnection_enabled = true;
  double annuity_rate = 0.04;

  bool operator==(const PowerSystemSpec&) const = default;

  const Country* find_country(std::string_view code) const {
    for (const auto& c : countries)
      if (c.code == code) return &c;
    return nullptr;
  }
  const Technology* find_technology(std::string_view id) const {
    for (const auto& t : technologies)
      if (t.id == id) return &t;
    return nullptr;
  }
  const ExogenousCapacity* find_exogenous(std::string_view country, std::string_view tech) const {
    for (const auto& e : exogenous_capacities)
      if (e.country == country && e.technology == tech) return &e;
    return nullptr;
  }
  const PinnedCapacity* find_pinned(std::string_view country, std::string_view tech) const {
    for (const auto& p : pinned_capacities)
      if (p.country == country && p.technology == tech) return &p;
    return nullptr;
  }
  const std::vector<double>* find_capacity_factor(const std::string& country,
                                                  const std::string& tech) const {
    auto it = time_series.capacity_factors.find({country, tech});
    return it == time_series.capacity_factors.end() ? nullptr : &it->second;
  }

  /// Fraction of a year covered by the horizon; investment terms scale by it.
  double horizon_fraction() const {
    return static_cast<double>(time_series.horizon) / kHoursPerYear;
  }
};

/// Annualized equivalent of an overnight cost.
inline double annuity(double overnight_cost, double lifetime, double rate) {
  if (!(lifetime > 0.0)) throw Error("annuity: lifetime must be positive");
  if (rate < 0.0) throw Error("annuity: rate must be non-negative");
  if (rate == 0.0) return overnight_cost / lifetime;
  return overnight_cost * rate / (1.0 - std::pow(1.0 + rate, -lifetime));
}

struct Violation {
  std::string entity;
  std::string message;

  std::string str() const { return entity + ": " + message; }
  bool operator==(const Violation&) const = default;
};

inline std::vector<Violation> validate(const PowerSystemSpec& spec) {
  std::vector<Violation> out;
  auto add = [&](std::string entity, std::string msg) {
    out.push_back({std::move(entity), std::move(msg)});
  };
  const auto& ts = spec.time_series;
  const std::size_t horizon = ts.horizon;

  if (horizon == 0) add("time_series", "horizon must be at least 1 hour");
  if (!(spec.annuity_rate >= 0.0)) add("system", "annuity rate must be non-negative");
  if (spec.countries.empty()) add("system", "no countries");

  std::set<std::string> codes;
  for (const auto& c : spec.countries) {
    const std::string ent = "country " + c.code;
    if (c.code.size() != 2) add(ent, "code must have exactly 2 characters");
    if (!codes.insert(c.code).second) add(ent, "duplicate country code");
    if (!(c.yearly_load_total > 0.0)) add(ent, "yearly load total must be positive");
  }

  std::set<std::string> tech_ids;
  for (const auto& t : spec.technologies) {
    const std::string ent = "technology " + t.id;
    if (!tech_ids.insert(t.id).second) add(ent, "duplicate technology id");
    for (double v : {t.marginal_cost, t.overnight_cost_power, t.overnight_cost_energy,
                     t.overnight_cost_charge, t.overnight_cost_discharge, t.fixed_cost,
                     t.fixed_cost_charge, t.fixed_cost_energy})
      if (!(v >= 0.0)) {
        add(ent, "negative cost");
        break;
      }
    if (!(t.lifetime >= 1.0)) add(ent, "lifetime must be at least 1 year");
    for (double e : {t.efficiency, t.efficiency_in, t.efficiency_out})
      if (!(e > 0.0 && e <= 1.0)) {
        add(ent, "efficiency out of (0,1]");
        break;
      }
    if (!(t.self_discharge_retention >= 0.0 && t.self_discharge_retention <= 1.0))
      add(ent, "self-discharge retention out of [0,1]");
    if (t.kind == TechKind::storage && t.expandable &&
        !(t.overnight_cost_energy > 0.0 && t.overnight_cost_charge > 0.0 &&
          t.overnight_cost_discharge > 0.0))
      add(ent, "expandable storage requires energy, charge and discharge overnight costs");
  }

  auto check_series = [&](const std::string& ent, const std::vector<double>& s, double lo,
                          std::optional<double> hi, const char* what) {
    if (s.size() != horizon) add(ent, "series length mismatch");
    for (double v : s) {
      if (!std::isfinite(v) || v < lo || (hi && v > *hi)) {
        add(ent, what);
        break;
      }
    }
  };

  for (const auto& [key, series] : ts.capacity_factors) {
    const std::string ent = "capacity factor " + key.first + "/" + key.second;
    if (!codes.count(key.first)) add(ent, "unknown country");
    const Technology* t = spec.find_technology(key.second);
    if (!t)
      add(ent, "unknown technology");
    else if (t->kind != TechKind::variable_renewable && t->kind != TechKind::run_of_river)
      add(ent, "capacity factors only apply to variable-renewable and run-of-river technologies");
    check_series(ent, series, 0.0, 1.0, "capacity factor out of [0,1]");
  }
  for (const auto& c : spec.countries) {
    auto it = ts.load.find(c.code);
    if (it == ts.load.end())
      add("load " + c.code, "missing load series");
    else
      check_series("load " + c.code, it->second, 0.0, std::nullopt, "load must be non-negative");
    for (const auto& t : spec.technologies)
      if (t.kind == TechKind::variable_renewable && !spec.find_capacity_factor(c.code, t.id))
        add("capacity factor " + c.code + "/" + t.id, "missing capacity-factor series");
  }
  for (const auto& [code, s] : ts.load)
    if (!codes.count(code)) add("load " + code, "unknown country");
  for (const auto& [code, s] : ts.reservoir_inflow) {
    if (!codes.count(code)) add("inflow " + code, "unknown country");
    check_series("inflow " + code, s, 0.0, std::nullopt, "inflow must be non-negative");
  }

  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& l : spec.interconnectors) {
    const std::string ent = "interconnector " + l.id();
    if (!codes.count(l.from_country) || !codes.count(l.to_country)) add(ent, "unknown country");
    if (l.from_country == l.to_country) add(ent, "line connects a country to itself");
    if (!(l.ntc >= 0.0)) add(ent, "negative NTC");
    auto key = std::minmax(l.from_country, l.to_country);
    if (!pairs.insert({key.first, key.second}).second) add(ent, "duplicate country pair");
  }

  std::set<std::pair<std::string, std::string>> exo_keys;
  for (const auto& e : spec.exogenous_capacities) {
    const std::string ent = "exogenous " + e.country + "/" + e.technology;
    if (!codes.count(e.country)) add(ent, "unknown country");
    const Technology* t = spec.find_technology(e.technology);
    if (!t)
      add(ent, "unknown technology");
    else if (t->expandable)
      add(ent, "exogenous capacity references an expandable technology");
    if (!(e.power_discharge >= 0.0 && e.power_charge >= 0.0 && e.energy >= 0.0))
      add(ent, "negative capacity");
    if (!exo_keys.insert({e.country, e.technology}).second) add(ent, "duplicate entry");
    if (t && t->kind == TechKind::run_of_river && e.power_discharge > 0.0 &&
        !spec.find_capacity_factor(e.country, e.technology))
      add(ent, "missing run-of-river availability series");
    if (t && t->kind == TechKind::reservoir && !ts.reservoir_inflow.count(e.country))
      add(ent, "missing reservoir inflow series");
  }
  for (const auto& p : spec.pinned_capacities) {
    const std::string ent = "pinned " + p.country + "/" + p.technology;
    if (!codes.count(p.country)) add(ent, "unknown country");
    const Technology* t = spec.find_technology(p.technology);
    if (!t)
      add(ent, "unknown technology");
    else if (!t->expandable)
      add(ent, "pinned capacity references a non-expandable technology");
    if (!(p.power >= 0.0)) add(ent, "negative capacity");
  }
  return out;
}

}  // namespace geobal
