#pragma once

// Scenario metrics read off an optimal solution: storage energy and discharge
// power of the short- and long-duration technologies, per country and summed,
// plus mean hourly line utilization |F| / NTC.

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geobal/lp.hpp"
#include "geobal/model.hpp"

namespace geobal {

enum class Metric { short_energy, long_energy, short_power, long_power };

inline constexpr int kMetricCount = 4;
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "short_energy_mwh", "long_energy_mwh", "short_discharge_power_mw",
    "long_discharge_power_mw"};

inline std::string_view metric_name(int m) { return kMetricNames.at(m); }

struct StorageMetrics {
  std::array<double, kMetricCount> values{};

  double& operator[](Metric m) { return values[static_cast<int>(m)]; }
  double operator[](Metric m) const { return values[static_cast<int>(m)]; }
  bool operator==(const StorageMetrics&) const = default;
};

struct ScenarioMetrics {
  StorageMetrics total;
  std::map<std::string, StorageMetrics> by_country;
  std::map<std::string, double> line_utilization;  // by line id, in [0,1]

  bool operator==(const ScenarioMetrics&) const = default;
};

/// Works from `name,value` pairs so that persisted solutions can be
/// re-extracted without rebuilding the program.
inline ScenarioMetrics extract_metrics(const PowerSystemSpec& spec,
                                       const std::vector<std::pair<std::string, double>>& values) {
  ScenarioMetrics out;
  for (const Country& c : spec.countries) out.by_country[c.code] = {};
  std::map<std::string, const Interconnector*> lines;
  if (spec.interconnection_enabled)
    for (const Interconnector& l : spec.interconnectors) {
      lines[l.id()] = &l;
      out.line_utilization[l.id()] = 0.0;
    }
  const double horizon = static_cast<double>(spec.time_series.horizon);

  for (const auto& [name, v] : values) {
    const EntityRef e = EntityRef::parse(name);
    if (e.family == "F") {
      auto it = lines.find(e.entity);
      if (it != lines.end() && it->second->ntc > 0.0)
        out.line_utilization[e.entity] += std::abs(v) / it->second->ntc / horizon;
      continue;
    }
    const bool energy = e.family == "N_e";
    if (!energy && e.family != "N_p_out") continue;
    const Technology* t = spec.find_technology(e.entity);
    if (!t) continue;
    int m;
    if (t->role == TechRole::short_storage)
      m = static_cast<int>(energy ? Metric::short_energy : Metric::short_power);
    else if (t->role == TechRole::long_storage)
      m = static_cast<int>(energy ? Metric::long_energy : Metric::long_power);
    else
      continue;
    auto c = out.by_country.find(e.country);
    if (c == out.by_country.end()) continue;
    c->second.values[m] += v;
  }
  for (const Country& c : spec.countries)
    for (int m = 0; m < kMetricCount; ++m)
      out.total.values[m] += out.by_country[c.code].values[m];
  return out;
}

inline ScenarioMetrics extract_metrics(const PowerSystemSpec& spec, const LinearProgram& lp,
                                       const std::vector<double>& x) {
  std::vector<std::pair<std::string, double>> values;
  values.reserve(lp.num_columns());
  for (std::size_t j = 0; j < lp.num_columns(); ++j)
    values.emplace_back(lp.columns()[j].name, x[j]);
  return extract_metrics(spec, values);
}

/// Optimal installed power of every (country, technology) generation column.
inline std::map<SeriesKey, double> installed_power(const LinearProgram& lp,
                                                   const std::vector<double>& x) {
  std::map<SeriesKey, double> out;
  for (std::size_t j = 0; j < lp.num_columns(); ++j) {
    const EntityRef& e = lp.columns()[j].meta;
    if (e.family == "N") out[{e.country, e.entity}] = x[j];
  }
  return out;
}

inline std::map<SeriesKey, double> installed_power(
    const std::vector<std::pair<std::string, double>>& values) {
  std::map<SeriesKey, double> out;
  for (const auto& [name, v] : values) {
    const EntityRef e = EntityRef::parse(name);
    if (e.family == "N") out[{e.country, e.entity}] = v;
  }
  return out;
}

}  // namespace geobal
