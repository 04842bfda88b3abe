#pragma once

// System manifest: a JSON document with scalar parameters that references one
// CSV file per series family. Every CSV has the header `hour,<country>...`
// with 0-indexed hours. Unknown JSON keys are rejected.
//
// {
//   "format": "geobal-system/1",
//   "horizon": 336, "annuity_rate": 0.04, "interconnection_enabled": true,
//   "countries": [{"code": "DE", "yearly_load_total": 1.0e6, "offshore_eligible": true}],
//   "technologies": [{"id": "li_ion", "kind": "storage", "role": "short-storage", ...}],
//   "interconnectors": [{"from": "DE", "to": "FR", "ntc": 100}],
//   "exogenous_capacities": [{"country": "DE", "technology": "reservoir",
//                             "power_discharge": 5, "power_charge": 0, "energy": 500}],
//   "pinned_capacities": [{"country": "FR", "technology": "wind_offshore", "power": 12}],
//   "time_series": {"load": "load.csv", "reservoir_inflow": "reservoir_inflow.csv",
//                   "capacity_factors": {"wind_onshore": "cf_wind_onshore.csv"}}
// }

#include <filesystem>
#include <initializer_list>
#include <map>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "geobal/csv.hpp"
#include "geobal/hash.hpp"
#include "geobal/model.hpp"

namespace geobal {

using json = nlohmann::json;

inline constexpr const char* kSystemFormat = "geobal-system/1";

namespace detail {

inline void require_keys(const json& j, std::initializer_list<const char*> allowed,
                         std::initializer_list<const char*> required, const std::string& where) {
  if (!j.is_object()) throw UsageError(where + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw UsageError(where + ": unknown key '" + it.key() + "'");
  for (const char* r : required)
    if (!j.contains(r)) throw UsageError(where + ": missing key '" + std::string(r) + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline json technology_to_json(const Technology& t) {
  return json{{"id", t.id},
              {"kind", std::string(to_string(t.kind))},
              {"role", std::string(to_string(t.role))},
              {"marginal_cost", t.marginal_cost},
              {"overnight_cost_power", t.overnight_cost_power},
              {"overnight_cost_energy", t.overnight_cost_energy},
              {"overnight_cost_charge", t.overnight_cost_charge},
              {"overnight_cost_discharge", t.overnight_cost_discharge},
              {"fixed_cost", t.fixed_cost},
              {"fixed_cost_charge", t.fixed_cost_charge},
              {"fixed_cost_energy", t.fixed_cost_energy},
              {"lifetime", t.lifetime},
              {"efficiency", t.efficiency},
              {"efficiency_in", t.efficiency_in},
              {"efficiency_out", t.efficiency_out},
              {"self_discharge_retention", t.self_discharge_retention},
              {"expandable", t.expandable}};
}

inline Technology technology_from_json(const json& j) {
  require_keys(j,
               {"id", "kind", "role", "marginal_cost", "overnight_cost_power",
                "overnight_cost_energy", "overnight_cost_charge", "overnight_cost_discharge",
                "fixed_cost", "fixed_cost_charge", "fixed_cost_energy", "lifetime", "efficiency",
                "efficiency_in", "efficiency_out", "self_discharge_retention", "expandable"},
               {"id", "kind", "role", "lifetime", "expandable"}, "technology");
  Technology t;
  t.id = j.at("id").get<std::string>();
  t.kind = parse_tech_kind(j.at("kind").get<std::string>());
  t.role = parse_tech_role(j.at("role").get<std::string>());
  t.marginal_cost = get_or(j, "marginal_cost", 0.0);
  t.overnight_cost_power = get_or(j, "overnight_cost_power", 0.0);
  t.overnight_cost_energy = get_or(j, "overnight_cost_energy", 0.0);
  t.overnight_cost_charge = get_or(j, "overnight_cost_charge", 0.0);
  t.overnight_cost_discharge = get_or(j, "overnight_cost_discharge", 0.0);
  t.fixed_cost = get_or(j, "fixed_cost", 0.0);
  t.fixed_cost_charge = get_or(j, "fixed_cost_charge", 0.0);
  t.fixed_cost_energy = get_or(j, "fixed_cost_energy", 0.0);
  t.lifetime = get_or(j, "lifetime", 1.0);
  t.efficiency = get_or(j, "efficiency", 1.0);
  t.efficiency_in = get_or(j, "efficiency_in", 1.0);
  t.efficiency_out = get_or(j, "efficiency_out", 1.0);
  t.self_discharge_retention = get_or(j, "self_discharge_retention", 1.0);
  t.expandable = get_or(j, "expandable", false);
  return t;
}

/// Scalars and entity lists; time series are handled separately.
inline json scalars_to_json(const PowerSystemSpec& s) {
  json j;
  j["format"] = kSystemFormat;
  j["horizon"] = s.time_series.horizon;
  j["annuity_rate"] = s.annuity_rate;
  j["interconnection_enabled"] = s.interconnection_enabled;
  j["countries"] = json::array();
  for (const auto& c : s.countries)
    j["countries"].push_back(json{{"code", c.code},
                                  {"yearly_load_total", c.yearly_load_total},
                                  {"offshore_eligible", c.offshore_eligible}});
  j["technologies"] = json::array();
  for (const auto& t : s.technologies) j["technologies"].push_back(technology_to_json(t));
  j["interconnectors"] = json::array();
  for (const auto& l : s.interconnectors)
    j["interconnectors"].push_back(
        json{{"from", l.from_country}, {"to", l.to_country}, {"ntc", l.ntc}});
  j["exogenous_capacities"] = json::array();
  for (const auto& e : s.exogenous_capacities)
    j["exogenous_capacities"].push_back(json{{"country", e.country},
                                             {"technology", e.technology},
                                             {"power_discharge", e.power_discharge},
                                             {"power_charge", e.power_charge},
                                             {"energy", e.energy}});
  j["pinned_capacities"] = json::array();
  for (const auto& p : s.pinned_capacities)
    j["pinned_capacities"].push_back(
        json{{"country", p.country}, {"technology", p.technology}, {"power", p.power}});
  return j;
}

inline void scalars_from_json(const json& j, PowerSystemSpec& s) {
  require_keys(j,
               {"format", "horizon", "annuity_rate", "interconnection_enabled", "countries",
                "technologies", "interconnectors", "exogenous_capacities", "pinned_capacities",
                "time_series"},
               {"format", "horizon", "countries", "technologies", "time_series"}, "system");
  if (j.at("format") != kSystemFormat)
    throw UsageError("unsupported system format " + j.at("format").dump());
  try {
    s.time_series.horizon = j.at("horizon").get<std::size_t>();
    s.annuity_rate = get_or(j, "annuity_rate", 0.04);
    s.interconnection_enabled = get_or(j, "interconnection_enabled", true);
    for (const auto& c : j.at("countries")) {
      require_keys(c, {"code", "yearly_load_total", "offshore_eligible"},
                   {"code", "yearly_load_total"}, "country");
      s.countries.push_back({c.at("code").get<std::string>(),
                             c.at("yearly_load_total").get<double>(),
                             get_or(c, "offshore_eligible", false)});
    }
    for (const auto& t : j.at("technologies")) s.technologies.push_back(technology_from_json(t));
    if (j.contains("interconnectors"))
      for (const auto& l : j.at("interconnectors")) {
        require_keys(l, {"from", "to", "ntc"}, {"from", "to", "ntc"}, "interconnector");
        s.interconnectors.push_back({l.at("from").get<std::string>(),
                                     l.at("to").get<std::string>(), l.at("ntc").get<double>()});
      }
    if (j.contains("exogenous_capacities"))
      for (const auto& e : j.at("exogenous_capacities")) {
        require_keys(e, {"country", "technology", "power_discharge", "power_charge", "energy"},
                     {"country", "technology"}, "exogenous capacity");
        s.exogenous_capacities.push_back(
            {e.at("country").get<std::string>(), e.at("technology").get<std::string>(),
             get_or(e, "power_discharge", 0.0), get_or(e, "power_charge", 0.0),
             get_or(e, "energy", 0.0)});
      }
    if (j.contains("pinned_capacities"))
      for (const auto& p : j.at("pinned_capacities")) {
        require_keys(p, {"country", "technology", "power"}, {"country", "technology", "power"},
                     "pinned capacity");
        s.pinned_capacities.push_back({p.at("country").get<std::string>(),
                                       p.at("technology").get<std::string>(),
                                       p.at("power").get<double>()});
      }
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed system manifest: ") + e.what());
  }
}

inline std::string series_csv(const std::map<std::string, const std::vector<double>*>& columns,
                              std::size_t horizon) {
  CsvTable t;
  t.header.push_back("hour");
  for (const auto& [code, s] : columns) t.header.push_back(code);
  for (std::size_t h = 0; h < horizon; ++h) {
    std::vector<std::string> row{std::to_string(h)};
    for (const auto& [code, s] : columns)
      row.push_back(h < s->size() ? format_double((*s)[h]) : std::string());
    t.rows.push_back(std::move(row));
  }
  return to_csv(t);
}

/// Reads `hour,<country>...`; returns one series per country column.
inline std::map<std::string, std::vector<double>> read_series_csv(
    const std::filesystem::path& path) {
  CsvTable t = read_csv(path);
  if (t.header.empty() || t.header[0] != "hour")
    throw UsageError(path.string() + ": first column must be 'hour'");
  std::map<std::string, std::vector<double>> out;
  for (std::size_t c = 1; c < t.header.size(); ++c) out[t.header[c]].reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r][0] != std::to_string(r))
      throw UsageError(path.string() + ": hours must be consecutive and 0-indexed");
    for (std::size_t c = 1; c < t.header.size(); ++c)
      out[t.header[c]].push_back(parse_double(t.rows[r][c], path.string()));
  }
  return out;
}

}  // namespace detail

/// Writes `<dir>/<manifest_name>` plus one CSV per series family.
inline std::filesystem::path write_system(const PowerSystemSpec& spec,
                                          const std::filesystem::path& dir,
                                          const std::string& manifest_name = "system.json") {
  std::filesystem::create_directories(dir);
  json j = detail::scalars_to_json(spec);
  const auto& ts = spec.time_series;
  json files;
  {
    std::map<std::string, const std::vector<double>*> cols;
    for (const auto& [code, s] : ts.load) cols[code] = &s;
    write_text(dir / "load.csv", detail::series_csv(cols, ts.horizon));
    files["load"] = "load.csv";
  }
  if (!ts.reservoir_inflow.empty()) {
    std::map<std::string, const std::vector<double>*> cols;
    for (const auto& [code, s] : ts.reservoir_inflow) cols[code] = &s;
    write_text(dir / "reservoir_inflow.csv", detail::series_csv(cols, ts.horizon));
    files["reservoir_inflow"] = "reservoir_inflow.csv";
  }
  std::map<std::string, std::map<std::string, const std::vector<double>*>> by_tech;
  for (const auto& [key, s] : ts.capacity_factors) by_tech[key.second][key.first] = &s;
  files["capacity_factors"] = json::object();
  for (const auto& [tech, cols] : by_tech) {
    const std::string name = "cf_" + tech + ".csv";
    write_text(dir / name, detail::series_csv(cols, ts.horizon));
    files["capacity_factors"][tech] = name;
  }
  j["time_series"] = files;
  const auto path = dir / manifest_name;
  write_text(path, j.dump(2) + "\n");
  return path;
}

inline PowerSystemSpec read_system(const std::filesystem::path& manifest) {
  json j;
  try {
    j = json::parse(read_text(manifest));
  } catch (const json::parse_error& e) {
    throw UsageError(manifest.string() + ": " + e.what());
  }
  PowerSystemSpec s;
  detail::scalars_from_json(j, s);
  const auto base = manifest.parent_path();
  const json& files = j.at("time_series");
  detail::require_keys(files, {"load", "reservoir_inflow", "capacity_factors"}, {"load"},
                       "time_series");
  auto resolve = [&](const json& v) {
    std::filesystem::path p = v.get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  s.time_series.load = detail::read_series_csv(resolve(files.at("load")));
  if (files.contains("reservoir_inflow"))
    s.time_series.reservoir_inflow = detail::read_series_csv(resolve(files.at("reservoir_inflow")));
  if (files.contains("capacity_factors")) {
    if (!files.at("capacity_factors").is_object())
      throw UsageError("time_series.capacity_factors must be an object");
    for (auto it = files.at("capacity_factors").begin(); it != files.at("capacity_factors").end();
         ++it)
      for (auto& [code, series] : detail::read_series_csv(resolve(it.value())))
        s.time_series.capacity_factors[{code, it.key()}] = std::move(series);
  }
  return s;
}

/// Self-contained JSON form with series inlined; the input to spec_hash.
inline json canonical_json(const PowerSystemSpec& spec) {
  json j = detail::scalars_to_json(spec);
  json ts;
  ts["load"] = spec.time_series.load;
  ts["reservoir_inflow"] = spec.time_series.reservoir_inflow;
  json cf = json::array();
  for (const auto& [key, s] : spec.time_series.capacity_factors)
    cf.push_back(json{{"country", key.first}, {"technology", key.second}, {"values", s}});
  ts["capacity_factors"] = cf;
  j["time_series"] = ts;
  return j;
}

inline std::string spec_hash(const PowerSystemSpec& spec) {
  return sha256_hex(canonical_json(spec).dump());
}

}  // namespace geobal
