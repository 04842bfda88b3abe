#pragma once

// Desk-scale stand-in for climate-database inputs. Produces a small system
// with persistent wind regimes (AR(1) with hourly persistence 0.985), shared
// cloudiness for PV, near-identical load shapes, and modest legacy hydro and
// bioenergy fleets. `correlation` sets the cross-country correlation of the
// latent wind process; negative values alternate the sign of the common
// component between neighbouring countries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "geobal/parameters.hpp"

namespace geobal {

namespace detail {

inline double round_to(double v, double step) { return std::round(v / step) * step; }

inline std::string synthetic_code(int i) {
  static constexpr std::array<std::string_view, 12> order = {
      "DE", "FR", "AT", "BE", "CH", "CZ", "DK", "ES", "IT", "NL", "PL", "PT"};
  if (i < static_cast<int>(order.size())) return std::string(order[i]);
  const int k = i - static_cast<int>(order.size());
  return std::string{static_cast<char>('Q' + k / 26 % 10), static_cast<char>('A' + k % 26)};
}

class Ar1 {
 public:
  Ar1(double persistence, std::mt19937_64& rng) : phi_(persistence), rng_(rng) {
    state_ = normal_(rng_);
  }
  double next() {
    state_ = phi_ * state_ + std::sqrt(1.0 - phi_ * phi_) * normal_(rng_);
    return state_;
  }

 private:
  double phi_;
  std::mt19937_64& rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double state_ = 0.0;
};

}  // namespace detail

inline PowerSystemSpec synthesize_system(std::uint64_t seed, int n_countries, std::size_t horizon,
                                         double correlation) {
  namespace tech = parameters::tech;
  if (n_countries < 1) throw UsageError("synthesize: need at least one country");
  if (horizon < 2) throw UsageError("synthesize: horizon must be at least 2 hours");
  if (!(correlation >= -1.0 && correlation <= 1.0))
    throw UsageError("synthesize: correlation must lie in [-1,1]");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unif(rng); };

  PowerSystemSpec spec;
  spec.annuity_rate = parameters::kAnnuityRate;
  spec.technologies = parameters::default_technologies();
  spec.time_series.horizon = horizon;
  spec.interconnection_enabled = true;

  const double rho = std::abs(correlation);
  const double common_w = std::sqrt(rho), own_w = std::sqrt(1.0 - rho);

  std::vector<double> mean_load(n_countries);
  for (int c = 0; c < n_countries; ++c) mean_load[c] = detail::round_to(uniform(60, 140), 0.001);

  // Common drivers first so that adding countries keeps earlier series stable.
  detail::Ar1 common_wind(0.985, rng);
  std::vector<double> wind_common(horizon);
  for (auto& v : wind_common) v = common_wind.next();
  const std::size_t days = (horizon + 23) / 24;
  std::vector<double> cloud(days);
  for (auto& v : cloud) v = uniform(0.25, 1.0);

  auto& ts = spec.time_series;
  for (int c = 0; c < n_countries; ++c) {
    const std::string code = detail::synthetic_code(c);
    const double sign = (correlation < 0.0 && c % 2 == 1) ? -1.0 : 1.0;

    detail::Ar1 own_wind(0.985, rng), own_offshore(0.95, rng), ror_state(0.995, rng);
    std::vector<double> onshore(horizon), offshore(horizon), pv(horizon), load(horizon),
        ror(horizon), inflow(horizon);
    const double load_phase = uniform(-0.5, 0.5);
    const double pv_bias = uniform(-0.04, 0.04);
    for (std::size_t h = 0; h < horizon; ++h) {
      const double latent = sign * common_w * wind_common[h] + own_w * own_wind.next();
      onshore[h] = detail::round_to(std::clamp(0.30 + 0.22 * latent, 0.0, 1.0), 1e-4);
      const double off_latent = 0.8 * latent + 0.6 * own_offshore.next();
      offshore[h] = detail::round_to(std::clamp(0.45 + 0.25 * off_latent, 0.0, 1.0), 1e-4);

      const double hod = static_cast<double>(h % 24);
      const double sun = std::max(0.0, std::sin(std::numbers::pi * (hod - 6.0) / 12.0));
      const double clear = std::clamp(cloud[h / 24] + pv_bias + 0.03 * normal(rng), 0.0, 1.0);
      pv[h] = detail::round_to(std::clamp(0.75 * sun * clear, 0.0, 1.0), 1e-4);

      const double daily = std::sin(2.0 * std::numbers::pi * (hod - 9.0 - load_phase) / 24.0);
      const double weekly = (h / 24) % 7 >= 5 ? -0.06 : 0.0;
      load[h] = detail::round_to(
          mean_load[c] * (1.0 + 0.12 * daily + weekly + 0.015 * normal(rng)), 0.001);

      ror[h] = detail::round_to(std::clamp(0.55 + 0.1 * ror_state.next(), 0.0, 1.0), 1e-4);
    }

    double total = 0.0;
    for (double v : load) total += v;
    spec.countries.push_back(
        {code, total * kHoursPerYear / static_cast<double>(horizon), c % 2 == 0});

    const double m = mean_load[c];
    const double bio = detail::round_to(m * uniform(0.02, 0.06), 0.001);
    const double ror_power = detail::round_to(m * uniform(0.03, 0.08), 0.001);
    const double rsv_power = detail::round_to(m * uniform(0.02, 0.08), 0.001);
    const double rsv_energy = detail::round_to(rsv_power * uniform(50.0, 150.0), 0.001);
    const double phs_power = detail::round_to(m * uniform(0.0, 0.05), 0.001);
    spec.exogenous_capacities.push_back({code, std::string(tech::bioenergy), bio, 0, 0});
    spec.exogenous_capacities.push_back({code, std::string(tech::run_of_river), ror_power, 0, 0});
    spec.exogenous_capacities.push_back(
        {code, std::string(tech::phs_closed), phs_power, phs_power, 6.0 * phs_power});
    spec.exogenous_capacities.push_back(
        {code, std::string(tech::reservoir), rsv_power, 0, rsv_energy});
    const double inflow_mean = 0.3 * rsv_power;
    for (std::size_t h = 0; h < horizon; ++h)
      inflow[h] = detail::round_to(std::max(0.0, inflow_mean * (1.0 + 0.2 * normal(rng))), 0.001);

    ts.load[code] = std::move(load);
    ts.reservoir_inflow[code] = std::move(inflow);
    ts.capacity_factors[{code, std::string(tech::wind_onshore)}] = std::move(onshore);
    ts.capacity_factors[{code, std::string(tech::wind_offshore)}] = std::move(offshore);
    ts.capacity_factors[{code, std::string(tech::pv)}] = std::move(pv);
    ts.capacity_factors[{code, std::string(tech::run_of_river)}] = std::move(ror);
  }

  for (int c = 0; c + 1 < n_countries; ++c) {
    const double ntc =
        detail::round_to(0.3 * std::min(mean_load[c], mean_load[c + 1]), 0.001);
    spec.interconnectors.push_back(
        {detail::synthetic_code(c), detail::synthetic_code(c + 1), ntc});
  }
  return spec;
}

}  // namespace geobal
