#pragma once

// Counterfactual systems for factor states. Harmonized factors take the
// reference country's series and its installed capacity per MWh of yearly
// load; the reference country itself is never modified.
//
//   wind      on- and offshore capacity factors copied; offshore power pinned
//             at share x yearly load in every country
//   solar     PV capacity factors copied
//   load      reference profile scaled by yearly_load_total ratios
//   hydro     run-of-river, reservoir and pumped-hydro capacities at share x
//             yearly load; run-of-river availability copied; reservoir inflow
//             is the reference series scaled by the ratio of reservoir power
//   bioenergy capacity at share x yearly load

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geobal/factor_state.hpp"
#include "geobal/lp_builder.hpp"
#include "geobal/model.hpp"
#include "geobal/solver.hpp"
#include "geobal/system_io.hpp"

namespace geobal {

/// Installed capacity per MWh of yearly load [MW/MWh, MWh/MWh].
struct CapacityShare {
  double power_discharge = 0.0;
  double power_charge = 0.0;
  double energy = 0.0;

  bool operator==(const CapacityShare&) const = default;
};

struct ReferenceShares {
  std::string reference_country;
  std::map<std::string, CapacityShare> technologies;  // by technology id
  // Provenance of the isolated reference run.
  std::string base_spec_hash;
  std::string reference_spec_hash;
  double reference_objective = 0.0;
  long reference_iterations = 0;

  bool operator==(const ReferenceShares&) const = default;

  const CapacityShare& at(const std::string& tech) const {
    auto it = technologies.find(tech);
    if (it == technologies.end())
      throw Error("reference shares have no entry for technology " + tech);
    return it->second;
  }
};

inline bool is_shared_role(TechRole r) {
  return r == TechRole::wind_offshore || r == TechRole::bioenergy || is_hydro(r);
}

/// The named country alone, without lines and with interconnection off.
inline PowerSystemSpec isolate_country(const PowerSystemSpec& spec, const std::string& code) {
  const Country* c = spec.find_country(code);
  if (!c) throw UsageError("country " + code + " is not part of the system");
  PowerSystemSpec out;
  out.countries = {*c};
  out.technologies = spec.technologies;
  out.annuity_rate = spec.annuity_rate;
  out.interconnection_enabled = false;
  auto& ts = out.time_series;
  ts.horizon = spec.time_series.horizon;
  for (const auto& [key, s] : spec.time_series.capacity_factors)
    if (key.first == code) ts.capacity_factors[key] = s;
  if (auto it = spec.time_series.load.find(code); it != spec.time_series.load.end())
    ts.load[code] = it->second;
  if (auto it = spec.time_series.reservoir_inflow.find(code);
      it != spec.time_series.reservoir_inflow.end())
    ts.reservoir_inflow[code] = it->second;
  for (const auto& e : spec.exogenous_capacities)
    if (e.country == code) out.exogenous_capacities.push_back(e);
  for (const auto& p : spec.pinned_capacities)
    if (p.country == code) out.pinned_capacities.push_back(p);
  return out;
}

/// Solves the reference country in isolation and records capacity over yearly
/// load for offshore wind, hydro and bioenergy technologies.
inline ReferenceShares derive_reference_shares(const PowerSystemSpec& spec,
                                               const std::string& reference,
                                               const SolverOptions& options = {}) {
  const PowerSystemSpec iso = isolate_country(spec, reference);
  const AssembledLp built = assemble(iso);
  const SolveResult r = solve(built.lp, options);
  if (r.status != SolveStatus::optimal)
    throw Error("reference run for " + reference + " is " + to_string(r.status));

  ReferenceShares out;
  out.reference_country = reference;
  out.base_spec_hash = spec_hash(spec);
  out.reference_spec_hash = spec_hash(iso);
  out.reference_objective = r.objective;
  out.reference_iterations = r.iterations;

  const double load = iso.countries.front().yearly_load_total;
  auto value = [&](const char* family, const std::string& tech) {
    auto j = built.lp.column_index(EntityRef{family, reference, tech, -1}.name());
    return j ? r.primal[*j] : 0.0;
  };
  for (const Technology& t : iso.technologies) {
    if (!is_shared_role(t.role)) continue;
    CapacityShare s;
    if (t.kind == TechKind::storage || t.kind == TechKind::reservoir) {
      s.power_discharge = value("N_p_out", t.id) / load;
      s.power_charge = value("N_p_in", t.id) / load;
      s.energy = value("N_e", t.id) / load;
    } else {
      s.power_discharge = value("N", t.id) / load;
    }
    out.technologies[t.id] = s;
  }
  return out;
}

inline nlohmann::json to_json(const ReferenceShares& s) {
  nlohmann::json techs = nlohmann::json::object();
  for (const auto& [id, v] : s.technologies)
    techs[id] = {{"power_discharge", v.power_discharge},
                 {"power_charge", v.power_charge},
                 {"energy", v.energy}};
  return {{"reference_country", s.reference_country},
          {"technologies", techs},
          {"base_spec_hash", s.base_spec_hash},
          {"reference_spec_hash", s.reference_spec_hash},
          {"reference_objective", s.reference_objective},
          {"reference_iterations", s.reference_iterations}};
}

inline ReferenceShares reference_shares_from_json(const nlohmann::json& j) {
  detail::require_keys(j,
                       {"reference_country", "technologies", "base_spec_hash",
                        "reference_spec_hash", "reference_objective", "reference_iterations"},
                       {"reference_country", "technologies"}, "reference shares");
  ReferenceShares s;
  try {
    s.reference_country = j.at("reference_country").get<std::string>();
    for (auto it = j.at("technologies").begin(); it != j.at("technologies").end(); ++it) {
      detail::require_keys(it.value(), {"power_discharge", "power_charge", "energy"}, {},
                           "reference shares " + it.key());
      CapacityShare v;
      v.power_discharge = detail::get_or(it.value(), "power_discharge", 0.0);
      v.power_charge = detail::get_or(it.value(), "power_charge", 0.0);
      v.energy = detail::get_or(it.value(), "energy", 0.0);
      if (v.power_discharge < 0.0 || v.power_charge < 0.0 || v.energy < 0.0)
        throw UsageError("reference shares " + it.key() + ": negative share");
      s.technologies[it.key()] = v;
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("reference shares: ") + e.what());
  }
  s.base_spec_hash = detail::get_or<std::string>(j, "base_spec_hash", "");
  s.reference_spec_hash = detail::get_or<std::string>(j, "reference_spec_hash", "");
  s.reference_objective = detail::get_or(j, "reference_objective", 0.0);
  s.reference_iterations = detail::get_or(j, "reference_iterations", 0L);
  return s;
}

namespace detail {

inline void set_capacity(PowerSystemSpec& s, const Country& c, const Technology& t,
                         const CapacityShare& share) {
  const double y = c.yearly_load_total;
  if (t.expandable) {
    if (t.kind == TechKind::storage || t.kind == TechKind::reservoir)
      throw Error("cannot harmonize expandable storage technology " + t.id);
    std::erase_if(s.pinned_capacities, [&](const PinnedCapacity& p) {
      return p.country == c.code && p.technology == t.id;
    });
    s.pinned_capacities.push_back({c.code, t.id, share.power_discharge * y});
    return;
  }
  std::erase_if(s.exogenous_capacities, [&](const ExogenousCapacity& e) {
    return e.country == c.code && e.technology == t.id;
  });
  const ExogenousCapacity e{c.code, t.id, share.power_discharge * y, share.power_charge * y,
                            share.energy * y};
  if (e.power_discharge > 0.0 || e.power_charge > 0.0 || e.energy > 0.0)
    s.exogenous_capacities.push_back(e);
}

/// Country order of the system, then technology order.
template <class T>
void sort_by_spec_order(const PowerSystemSpec& s, std::vector<T>& v) {
  auto rank = [&](const T& e) {
    std::size_t ci = 0, ti = 0;
    while (ci < s.countries.size() && s.countries[ci].code != e.country) ++ci;
    while (ti < s.technologies.size() && s.technologies[ti].id != e.technology) ++ti;
    return std::pair{ci, ti};
  };
  std::stable_sort(v.begin(), v.end(), [&](const T& a, const T& b) { return rank(a) < rank(b); });
}

inline double reservoir_power(const PowerSystemSpec& s, const std::string& code) {
  double p = 0.0;
  for (const Technology& t : s.technologies)
    if (t.kind == TechKind::reservoir)
      if (const ExogenousCapacity* e = s.find_exogenous(code, t.id)) p += e->power_discharge;
  return p;
}

}  // namespace detail

inline PowerSystemSpec apply_factor_state(const PowerSystemSpec& base, FactorState state,
                                          const ReferenceShares& shares) {
  PowerSystemSpec s = base;
  s.interconnection_enabled = state.interconnection_allowed();
  const bool wind = state.harmonized(Factor::wind), solar = state.harmonized(Factor::solar),
             load = state.harmonized(Factor::load), hydro = state.harmonized(Factor::hydro),
             bio = state.harmonized(Factor::bioenergy);
  if (!(wind || solar || load || hydro || bio)) return s;

  const std::string& ref = shares.reference_country;
  const Country* rc = base.find_country(ref);
  if (!rc) throw Error("reference country " + ref + " is not part of the system");
  auto& ts = s.time_series;

  auto copy_cf = [&](auto&& pick) {
    for (const Technology& t : base.technologies) {
      if (!pick(t.role)) continue;
      const std::vector<double>* src = base.find_capacity_factor(ref, t.id);
      if (!src) continue;
      for (const Country& c : base.countries)
        if (c.code != ref) ts.capacity_factors[{c.code, t.id}] = *src;
    }
  };
  auto set_shares = [&](auto&& pick, bool include_reference) {
    for (const Technology& t : base.technologies) {
      if (!pick(t.role)) continue;
      const CapacityShare& share = shares.at(t.id);
      for (const Country& c : base.countries)
        if (include_reference || c.code != ref) detail::set_capacity(s, c, t, share);
    }
  };

  if (wind) {
    copy_cf(is_wind);
    // Offshore follows the isolated reference optimum, the reference included.
    set_shares([](TechRole r) { return r == TechRole::wind_offshore; }, true);
  }
  if (solar) copy_cf([](TechRole r) { return r == TechRole::solar; });
  if (load) {
    const auto& profile = base.time_series.load.at(ref);
    for (const Country& c : base.countries) {
      if (c.code == ref) continue;
      const double k = c.yearly_load_total / rc->yearly_load_total;
      std::vector<double> v(profile.size());
      for (std::size_t h = 0; h < v.size(); ++h) v[h] = profile[h] * k;
      ts.load[c.code] = std::move(v);
    }
  }
  if (hydro) {
    set_shares(is_hydro, false);
    copy_cf([](TechRole r) { return r == TechRole::run_of_river; });
    const double p_ref = detail::reservoir_power(base, ref);
    auto src = base.time_series.reservoir_inflow.find(ref);
    for (const Country& c : base.countries) {
      if (c.code == ref) continue;
      if (p_ref > 0.0 && src != base.time_series.reservoir_inflow.end()) {
        const double k = detail::reservoir_power(s, c.code) / p_ref;
        std::vector<double> v(src->second.size());
        for (std::size_t h = 0; h < v.size(); ++h) v[h] = src->second[h] * k;
        ts.reservoir_inflow[c.code] = std::move(v);
      } else {
        ts.reservoir_inflow.erase(c.code);
      }
    }
  }
  if (bio) set_shares([](TechRole r) { return r == TechRole::bioenergy; }, false);

  detail::sort_by_spec_order(s, s.exogenous_capacities);
  detail::sort_by_spec_order(s, s.pinned_capacities);
  return s;
}

}  // namespace geobal
