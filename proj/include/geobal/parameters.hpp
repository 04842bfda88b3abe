#pragma once

// Built-in techno-economic tables for the central European setup: generation
// and storage costs, legacy hydro/bioenergy fleets, and cross-border NTCs.
// Values are kept in the published units (GW, GWh, EUR/kW, EUR/kWh, %).

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geobal/model.hpp"

namespace geobal::parameters {

inline constexpr std::array<std::string_view, 12> kCountries = {
    "AT", "BE", "CH", "CZ", "DE", "DK", "ES", "FR", "IT", "NL", "PL", "PT"};

inline constexpr double kAnnuityRate = 0.04;

struct GenerationRow {
  std::string_view technology;
  double thermal_efficiency;
  double overnight_cost;  // EUR/kW
  double lifetime;        // years
};

inline constexpr std::array<GenerationRow, 5> kGenerationTable = {{
    {"Bioenergy", 0.487, 1951, 30},
    {"Run-of-river", 0.9, 600, 25},
    {"PV", 1, 3000, 50},
    {"Wind offshore", 1, 2506, 25},
    {"Wind onshore", 1, 1182, 25},
}};

struct StorageRow {
  std::string_view technology;
  std::optional<double> marginal_cost_in;   // EUR/MWh
  double marginal_cost_out;                 // EUR/MWh
  std::optional<double> efficiency_in;      // %
  double efficiency_out;                    // %
  double self_discharge_efficiency;         // %
  double overnight_cost_energy;             // EUR/kWh
  std::optional<double> overnight_cost_charge;  // EUR/kW
  double overnight_cost_discharge;          // EUR/kW
  double lifetime;                          // years
};

inline const std::array<StorageRow, 4>& storage_table() {
  static const std::array<StorageRow, 4> rows = {{
      {"Lithium-Ion", 0.5, 0.5, 92, 92, 100, 200, 150, 150, 13},
      {"Power-to-gas-to-power", 0.5, 0.5, 50, 50, 100, 1, 3000, 3000, 20},
      {"Pumped-hydro", 0.5, 0.5, 80, 80, 100, 80, 1100, 1100, 60},
      {"Reservoir", std::nullopt, 0.1, std::nullopt, 95, 100, 10, std::nullopt, 200, 50},
  }};
  return rows;
}

struct ExogenousRow {
  std::string_view technology;
  std::string_view variable;
  std::array<double, 12> values;  // ordered as kCountries
};

inline constexpr std::array<ExogenousRow, 10> kExogenousTable = {{
    {"Bioenergy", "Power [GW]",
     {0.50, 0.62, 0, 0.40, 7.75, 1.72, 0.51, 1.93, 1.54, 0.46, 0.85, 0.61}},
    {"Run-of-River", "Power [GW]",
     {5.56, 0.17, 0.64, 0.33, 3.99, 0.01, 1.16, 10.96, 10.65, 0.04, 0.44, 2.86}},
    {"Pumped-hydro (closed)", "Discharging power [GW]",
     {0, 1.31, 3.99, 0.69, 6.06, 0, 3.33, 1.96, 4.01, 0, 1.32, 0}},
    {"Pumped-hydro (closed)", "Charging power [GW]",
     {0, 1.15, 3.94, 0.65, 6.07, 0, 3.14, 1.95, 4.07, 0, 1.49, 0}},
    {"Pumped-hydro (closed)", "Energy [GWh]",
     {0, 5.30, 670, 3.70, 355, 0, 95.40, 10, 22.40, 0, 6.34, 0}},
    {"Pumped-hydro (open)", "Discharging power [GW]",
     {3.46, 0, 0, 0.47, 1.64, 0, 2.68, 1.85, 3.57, 0, 0.18, 2.95}},
    {"Pumped-hydro (open)", "Charging power [GW]",
     {2.56, 0, 0, 0.44, 1.36, 0, 2.42, 1.85, 2.34, 0, 0.17, 2.70}},
    {"Pumped-hydro (open)", "Energy [GWh]",
     {1722, 0, 0, 2, 417, 0, 6185, 90, 382, 0, 2, 1966}},
    {"Reservoir", "Discharging power [GW]",
     {2.43, 0, 8.15, 0.70, 1.30, 0, 10.97, 8.48, 9.96, 0, 0.18, 3.49}},
    {"Reservoir", "Energy [GWh]",
     {762, 0, 8155, 3, 258, 0, 11840, 10000, 5649, 0, 1, 1187}},
}};

struct NtcRow {
  std::string_view link;  // "AT_DE"
  double capacity;        // MW
};

inline constexpr std::array<NtcRow, 20> kNtcTable = {{
    {"AT_CH", 1700}, {"AT_CZ", 1100}, {"AT_DE", 7500}, {"AT_IT", 1470}, {"BE_DE", 1000},
    {"BE_FR", 5050}, {"BE_NL", 4900}, {"CH_DE", 5300}, {"CH_FR", 4000}, {"CH_IT", 4850},
    {"CZ_DE", 2300}, {"CZ_PL", 700},  {"DE_DK", 4000}, {"DE_FR", 4800}, {"DE_NL", 5000},
    {"DE_PL", 3750}, {"DK_PL", 500},  {"ES_FR", 9000}, {"ES_PT", 4350}, {"FR_IT", 3255},
}};

/// Technology ids used by the default tables and the synthetic generator.
namespace tech {
inline constexpr std::string_view bioenergy = "bioenergy";
inline constexpr std::string_view run_of_river = "run_of_river";
inline constexpr std::string_view pv = "pv";
inline constexpr std::string_view wind_offshore = "wind_offshore";
inline constexpr std::string_view wind_onshore = "wind_onshore";
inline constexpr std::string_view li_ion = "li_ion";
inline constexpr std::string_view p2g = "p2g";
inline constexpr std::string_view phs_closed = "phs_closed";
inline constexpr std::string_view phs_open = "phs_open";
inline constexpr std::string_view reservoir = "reservoir";
}  // namespace tech

inline const GenerationRow& generation_row(std::string_view name) {
  for (const auto& r : kGenerationTable)
    if (r.technology == name) return r;
  throw Error("no generation row " + std::string(name));
}
inline const StorageRow& storage_row(std::string_view name) {
  for (const auto& r : storage_table())
    if (r.technology == name) return r;
  throw Error("no storage row " + std::string(name));
}

inline std::vector<Technology> default_technologies() {
  std::vector<Technology> out;
  auto generation = [&](std::string_view id, std::string_view row, TechKind kind, TechRole role,
                        bool expandable) {
    const auto& r = generation_row(row);
    Technology t;
    t.id = std::string(id);
    t.kind = kind;
    t.role = role;
    t.overnight_cost_power = r.overnight_cost;
    t.lifetime = r.lifetime;
    t.efficiency = r.thermal_efficiency;
    t.expandable = expandable;
    out.push_back(t);
  };
  generation(tech::bioenergy, "Bioenergy", TechKind::dispatchable, TechRole::bioenergy, false);
  generation(tech::run_of_river, "Run-of-river", TechKind::run_of_river, TechRole::run_of_river,
             false);
  generation(tech::pv, "PV", TechKind::variable_renewable, TechRole::solar, true);
  generation(tech::wind_offshore, "Wind offshore", TechKind::variable_renewable,
             TechRole::wind_offshore, true);
  generation(tech::wind_onshore, "Wind onshore", TechKind::variable_renewable,
             TechRole::wind_onshore, true);

  auto storage = [&](std::string_view id, std::string_view row, TechKind kind, TechRole role,
                     bool expandable) {
    const auto& r = storage_row(row);
    Technology t;
    t.id = std::string(id);
    t.kind = kind;
    t.role = role;
    t.marginal_cost = r.marginal_cost_out;
    t.overnight_cost_energy = r.overnight_cost_energy;
    t.overnight_cost_charge = r.overnight_cost_charge.value_or(0.0);
    t.overnight_cost_discharge = r.overnight_cost_discharge;
    t.lifetime = r.lifetime;
    t.efficiency_in = r.efficiency_in.value_or(100.0) / 100.0;
    t.efficiency_out = r.efficiency_out / 100.0;
    t.self_discharge_retention = r.self_discharge_efficiency / 100.0;
    t.expandable = expandable;
    out.push_back(t);
  };
  storage(tech::li_ion, "Lithium-Ion", TechKind::storage, TechRole::short_storage, true);
  storage(tech::p2g, "Power-to-gas-to-power", TechKind::storage, TechRole::long_storage, true);
  storage(tech::phs_closed, "Pumped-hydro", TechKind::storage, TechRole::pumped_hydro, false);
  storage(tech::phs_open, "Pumped-hydro", TechKind::storage, TechRole::pumped_hydro, false);
  storage(tech::reservoir, "Reservoir", TechKind::reservoir, TechRole::reservoir, false);
  return out;
}

inline std::optional<std::size_t> country_index(std::string_view code) {
  for (std::size_t i = 0; i < kCountries.size(); ++i)
    if (kCountries[i] == code) return i;
  return std::nullopt;
}

/// Legacy fleet of one country converted to MW / MWh. Zero entries are omitted.
inline std::vector<ExogenousCapacity> default_exogenous_capacities(std::string_view code) {
  auto idx = country_index(code);
  if (!idx) throw Error("no exogenous capacities for country " + std::string(code));
  auto value = [&](std::string_view techname, std::string_view variable) {
    for (const auto& r : kExogenousTable)
      if (r.technology == techname && r.variable == variable) return r.values[*idx] * 1000.0;
    throw Error("missing exogenous row");
  };
  std::vector<ExogenousCapacity> out;
  auto push = [&](std::string_view id, double dis, double ch, double e) {
    if (dis > 0.0 || ch > 0.0 || e > 0.0)
      out.push_back({std::string(code), std::string(id), dis, ch, e});
  };
  push(tech::bioenergy, value("Bioenergy", "Power [GW]"), 0, 0);
  push(tech::run_of_river, value("Run-of-River", "Power [GW]"), 0, 0);
  push(tech::phs_closed, value("Pumped-hydro (closed)", "Discharging power [GW]"),
       value("Pumped-hydro (closed)", "Charging power [GW]"),
       value("Pumped-hydro (closed)", "Energy [GWh]"));
  push(tech::phs_open, value("Pumped-hydro (open)", "Discharging power [GW]"),
       value("Pumped-hydro (open)", "Charging power [GW]"),
       value("Pumped-hydro (open)", "Energy [GWh]"));
  push(tech::reservoir, value("Reservoir", "Discharging power [GW]"), 0,
       value("Reservoir", "Energy [GWh]"));
  return out;
}

/// NTC for an unordered pair, if the pair is listed.
inline std::optional<double> default_ntc(std::string_view a, std::string_view b) {
  for (const auto& r : kNtcTable) {
    auto sep = r.link.find('_');
    auto x = r.link.substr(0, sep), y = r.link.substr(sep + 1);
    if ((x == a && y == b) || (x == b && y == a)) return r.capacity;
  }
  return std::nullopt;
}

inline std::vector<Interconnector> default_interconnectors() {
  std::vector<Interconnector> out;
  for (const auto& r : kNtcTable) {
    auto sep = r.link.find('_');
    out.push_back({std::string(r.link.substr(0, sep)), std::string(r.link.substr(sep + 1)),
                   r.capacity});
  }
  return out;
}

}  // namespace geobal::parameters
