#pragma once

// Residual load r_{n,h} = load_{n,h} - sum_vre cf_{n,vre,h} N_{n,vre} and the
// diagnostics built on it: peak hours, positive residual load events, the
// cross-country view at each peak hour, and peak coincidence.
//
// A positive event opens on an hour with r > 0 and extends while the running
// sum since its opening stays above zero; it ends on the hour before the sum
// would drop to zero or below, or at the end of the series. Its magnitude is
// the largest running sum reached.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "geobal/csv.hpp"
#include "geobal/model.hpp"

namespace geobal {

struct ResidualSeries {
  std::string country;
  std::vector<double> values;  // MWh/h
};

struct ResidualEvent {
  std::string country;
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  double peak_cumulative = 0.0;  // MWh
  double gross_positive = 0.0;   // MWh

  bool operator==(const ResidualEvent&) const = default;
};

/// `capacities` maps (country, technology) to installed power and must cover
/// every variable-renewable technology of every country.
inline std::vector<ResidualSeries> residual_series(const PowerSystemSpec& spec,
                                                   const std::map<SeriesKey, double>& capacities) {
  std::vector<ResidualSeries> out;
  for (const Country& c : spec.countries) {
    auto load = spec.time_series.load.find(c.code);
    if (load == spec.time_series.load.end()) throw Error("no load series for " + c.code);
    ResidualSeries r{c.code, load->second};
    for (const Technology& t : spec.technologies) {
      if (t.kind != TechKind::variable_renewable) continue;
      auto cap = capacities.find({c.code, t.id});
      if (cap == capacities.end())
        throw Error("no installed capacity for " + c.code + "/" + t.id);
      const std::vector<double>* cf = spec.find_capacity_factor(c.code, t.id);
      if (!cf) throw Error("no capacity factors for " + c.code + "/" + t.id);
      for (std::size_t h = 0; h < r.values.size(); ++h) r.values[h] -= (*cf)[h] * cap->second;
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Largest value; ties go to the earliest hour.
inline std::pair<std::size_t, double> peak_residual_hour(const std::vector<double>& r) {
  if (r.empty()) throw Error("peak of an empty series");
  std::size_t best = 0;
  for (std::size_t h = 1; h < r.size(); ++h)
    if (r[h] > r[best]) best = h;
  return {best, r[best]};
}

inline std::vector<ResidualEvent> positive_events(const std::vector<double>& r,
                                                  const std::string& country = "") {
  std::vector<ResidualEvent> out;
  std::size_t h = 0;
  while (h < r.size()) {
    if (!(r[h] > 0.0)) {
      ++h;
      continue;
    }
    ResidualEvent e{country, h, h, r[h], r[h]};
    double cum = r[h];
    std::size_t k = h + 1;
    for (; k < r.size(); ++k) {
      const double next = cum + r[k];
      if (next <= 0.0) break;
      cum = next;
      e.end = k;
      e.peak_cumulative = std::max(e.peak_cumulative, cum);
      if (r[k] > 0.0) e.gross_positive += r[k];
    }
    out.push_back(e);
    h = e.end + 1;
  }
  return out;
}

struct CoincidenceReport {
  double sum_of_peaks = 0.0;  // sum_n max_h r
  double system_peak = 0.0;   // max_h sum_n r
};

inline CoincidenceReport peak_coincidence(const std::vector<ResidualSeries>& series) {
  if (series.empty()) throw Error("peak coincidence needs at least one country");
  const std::size_t horizon = series.front().values.size();
  std::vector<double> system(horizon, 0.0);
  CoincidenceReport rep;
  for (const ResidualSeries& s : series) {
    if (s.values.size() != horizon) throw Error("residual series lengths differ");
    rep.sum_of_peaks += peak_residual_hour(s.values).second;
    for (std::size_t h = 0; h < horizon; ++h) system[h] += s.values[h];
  }
  rep.system_peak = peak_residual_hour(system).second;
  return rep;
}

struct CrossSectionRow {
  std::string country;  // whose peak hour
  std::size_t peak_hour = 0;
  double peak_residual = 0.0;
  std::string other;
  double wind_onshore_cf = 0.0;
  double wind_offshore_cf = 0.0;
  double solar_cf = 0.0;
  double relative_load = 0.0;  // load_h / max_h load of the other country
};

/// For every country's peak residual hour, the other countries' wind and PV
/// availability and relative load in that hour. Series are looked up by the
/// first technology with the matching role; missing series read as NaN.
inline std::vector<CrossSectionRow> peak_hour_cross_section(
    const PowerSystemSpec& spec, const std::vector<ResidualSeries>& series) {
  if (series.size() < 2) throw Error("cross-section needs at least two countries");
  auto tech_for = [&](TechRole role) -> const Technology* {
    for (const Technology& t : spec.technologies)
      if (t.role == role && t.kind == TechKind::variable_renewable) return &t;
    return nullptr;
  };
  const Technology* on = tech_for(TechRole::wind_onshore);
  const Technology* off = tech_for(TechRole::wind_offshore);
  const Technology* pv = tech_for(TechRole::solar);
  auto cf_at = [&](const Technology* t, const std::string& code, std::size_t h) {
    if (!t) return std::numeric_limits<double>::quiet_NaN();
    const std::vector<double>* s = spec.find_capacity_factor(code, t->id);
    return s ? (*s)[h] : std::numeric_limits<double>::quiet_NaN();
  };
  std::map<std::string, double> max_load;
  for (const ResidualSeries& s : series) {
    const auto& load = spec.time_series.load.at(s.country);
    max_load[s.country] = load.empty() ? 0.0 : *std::max_element(load.begin(), load.end());
  }

  std::vector<CrossSectionRow> out;
  for (const ResidualSeries& s : series) {
    const auto [hour, value] = peak_residual_hour(s.values);
    for (const ResidualSeries& o : series) {
      if (o.country == s.country) continue;
      const double peak_load = max_load[o.country];
      const double load = spec.time_series.load.at(o.country)[hour];
      out.push_back({s.country, hour, value, o.country, cf_at(on, o.country, hour),
                     cf_at(off, o.country, hour), cf_at(pv, o.country, hour),
                     peak_load > 0.0 ? load / peak_load : 0.0});
    }
  }
  return out;
}

struct ResidualReport {
  std::string scenario;
  std::vector<std::string> excluded;  // countries left out of the event table
  std::vector<ResidualSeries> series;
  std::vector<ResidualEvent> events;
  std::vector<CrossSectionRow> cross_section;
  CoincidenceReport coincidence;
};

inline ResidualReport analyze_residuals(const PowerSystemSpec& spec,
                                        const std::map<SeriesKey, double>& capacities,
                                        const std::string& scenario,
                                        const std::vector<std::string>& excluded = {}) {
  ResidualReport rep;
  rep.scenario = scenario;
  rep.excluded = excluded;
  rep.series = residual_series(spec, capacities);
  const std::set<std::string> skip(excluded.begin(), excluded.end());
  for (const ResidualSeries& s : rep.series) {
    if (skip.count(s.country)) continue;
    for (ResidualEvent& e : positive_events(s.values, s.country)) rep.events.push_back(e);
  }
  if (rep.series.size() >= 2) rep.cross_section = peak_hour_cross_section(spec, rep.series);
  rep.coincidence = peak_coincidence(rep.series);
  return rep;
}

inline std::string events_csv(const std::vector<ResidualEvent>& events) {
  std::string out = "country,start_hour,end_hour,duration_h,peak_cumulative_mwh,gross_positive_mwh\n";
  for (const ResidualEvent& e : events)
    out += e.country + ',' + std::to_string(e.start) + ',' + std::to_string(e.end) + ',' +
           std::to_string(e.end - e.start + 1) + ',' + format_double(e.peak_cumulative) + ',' +
           format_double(e.gross_positive) + '\n';
  return out;
}

/// Files: residual.csv, peak_hours.csv, events.csv, cross_section.csv,
/// coincidence.csv and residual.json (scenario and exclusions).
inline void write_residual_report(const ResidualReport& rep, const std::filesystem::path& dir) {
  std::string series = "hour";
  for (const ResidualSeries& s : rep.series) series += ',' + s.country + "_mwh";
  series += '\n';
  const std::size_t horizon = rep.series.empty() ? 0 : rep.series.front().values.size();
  for (std::size_t h = 0; h < horizon; ++h) {
    series += std::to_string(h);
    for (const ResidualSeries& s : rep.series) series += ',' + format_double(s.values[h]);
    series += '\n';
  }
  write_text(dir / "residual.csv", series);

  std::string peaks = "country,peak_hour,residual_mwh\n";
  for (const ResidualSeries& s : rep.series) {
    const auto [h, v] = peak_residual_hour(s.values);
    peaks += s.country + ',' + std::to_string(h) + ',' + format_double(v) + '\n';
  }
  write_text(dir / "peak_hours.csv", peaks);
  write_text(dir / "events.csv", events_csv(rep.events));

  std::string cross =
      "country,peak_hour,residual_mwh,other_country,wind_onshore_cf,wind_offshore_cf,solar_cf,"
      "relative_load\n";
  for (const CrossSectionRow& r : rep.cross_section)
    cross += r.country + ',' + std::to_string(r.peak_hour) + ',' + format_double(r.peak_residual) +
             ',' + r.other + ',' + format_double(r.wind_onshore_cf) + ',' +
             format_double(r.wind_offshore_cf) + ',' + format_double(r.solar_cf) + ',' +
             format_double(r.relative_load) + '\n';
  write_text(dir / "cross_section.csv", cross);

  write_text(dir / "coincidence.csv", "sum_of_peaks_mw,system_peak_mw\n" +
                                          format_double(rep.coincidence.sum_of_peaks) + ',' +
                                          format_double(rep.coincidence.system_peak) + '\n');
  const nlohmann::json meta = {{"scenario", rep.scenario},
                               {"excluded_from_events", rep.excluded},
                               {"countries", rep.series.size()},
                               {"events", rep.events.size()}};
  write_text(dir / "residual.json", meta.dump(2) + "\n");
}

}  // namespace geobal
