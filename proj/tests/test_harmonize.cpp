#include <gtest/gtest.h>

#include <numeric>

#include "geobal/harmonize.hpp"
#include "geobal/synthetic.hpp"
#include "test_support.hpp"

using namespace geobal;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

PowerSystemSpec scaled(PowerSystemSpec s, double k) {
  for (auto& c : s.countries) c.yearly_load_total *= k;
  for (auto& [code, v] : s.time_series.load)
    for (double& x : v) x *= k;
  for (auto& [code, v] : s.time_series.reservoir_inflow)
    for (double& x : v) x *= k;
  for (auto& e : s.exogenous_capacities) {
    e.power_discharge *= k;
    e.power_charge *= k;
    e.energy *= k;
  }
  return s;
}

const PowerSystemSpec& base() {
  static const PowerSystemSpec s = synthesize_system(13, 3, 48, -0.4);
  return s;
}

const ReferenceShares& shares() {
  static const ReferenceShares r = derive_reference_shares(base(), "DE");
  return r;
}

}  // namespace

TEST(Harmonize, NativeStateIsIdentity) {
  EXPECT_EQ(apply_factor_state(base(), FactorState::native(), shares()), base());
}

TEST(Harmonize, InterconnectionOnlyTogglesLines) {
  PowerSystemSpec s = apply_factor_state(base(), FactorState::parse("f_23456"), shares());
  EXPECT_FALSE(s.interconnection_enabled);
  s.interconnection_enabled = true;
  EXPECT_EQ(s, base());
}

TEST(Harmonize, Idempotent) {
  for (FactorState st : enumerate_states(6)) {
    const PowerSystemSpec once = apply_factor_state(base(), st, shares());
    const PowerSystemSpec twice = apply_factor_state(once, st, shares());
    EXPECT_EQ(once, twice) << st.str();
    EXPECT_TRUE(validate(once).empty()) << st.str();
  }
}

TEST(Harmonize, ReferenceCountryIsAFixedPoint) {
  const PowerSystemSpec h = apply_factor_state(base(), FactorState(0), shares());
  const auto& ts = h.time_series;
  EXPECT_EQ(ts.load.at("DE"), base().time_series.load.at("DE"));
  EXPECT_EQ(ts.reservoir_inflow.at("DE"), base().time_series.reservoir_inflow.at("DE"));
  for (const auto& [key, v] : ts.capacity_factors)
    if (key.first == "DE") EXPECT_EQ(v, base().time_series.capacity_factors.at(key));
  for (const auto& e : base().exogenous_capacities)
    if (e.country == "DE") {
      const ExogenousCapacity* got = h.find_exogenous("DE", e.technology);
      ASSERT_NE(got, nullptr);
      EXPECT_EQ(*got, e);
    }
  const PinnedCapacity* pin = h.find_pinned("DE", "wind_offshore");
  ASSERT_NE(pin, nullptr);
  EXPECT_DOUBLE_EQ(pin->power,
                   shares().at("wind_offshore").power_discharge * base().countries[0].yearly_load_total);
}

TEST(Harmonize, LoadTotalsPreserved) {
  const PowerSystemSpec h = apply_factor_state(base(), FactorState::parse("f_12356"), shares());
  const auto& ref = base().time_series.load.at("DE");
  for (const auto& c : base().countries) {
    const auto& before = base().time_series.load.at(c.code);
    const auto& after = h.time_series.load.at(c.code);
    EXPECT_NEAR(sum(after), sum(before), 1e-9 * sum(before)) << c.code;
    EXPECT_NEAR(after[5] / after[17], ref[5] / ref[17], 1e-12) << c.code;
  }
}

TEST(Harmonize, WindCopiesProfilesAndPinsOffshoreEverywhere) {
  const PowerSystemSpec h = apply_factor_state(base(), FactorState::parse("f_13456"), shares());
  const auto& ts = h.time_series;
  for (const auto& c : base().countries) {
    EXPECT_EQ(ts.capacity_factors.at({c.code, "wind_onshore"}),
              base().time_series.capacity_factors.at({"DE", "wind_onshore"}));
    const PinnedCapacity* pin = h.find_pinned(c.code, "wind_offshore");
    ASSERT_NE(pin, nullptr) << c.code;
    EXPECT_DOUBLE_EQ(pin->power, shares().at("wind_offshore").power_discharge * c.yearly_load_total);
  }
  // FR has no coast in the synthetic system but still receives the reference share.
  EXPECT_FALSE(base().find_country("FR")->offshore_eligible);
  EXPECT_EQ(ts.capacity_factors.at({"FR", "pv"}), base().time_series.capacity_factors.at({"FR", "pv"}));
}

TEST(Harmonize, HydroFollowsReferenceShares) {
  const PowerSystemSpec h = apply_factor_state(base(), FactorState::parse("f_12346"), shares());
  const Country& fr = *base().find_country("FR");
  for (const char* t : {"reservoir", "run_of_river", "phs_closed"}) {
    const CapacityShare& sh = shares().at(t);
    const ExogenousCapacity* e = h.find_exogenous("FR", t);
    if (sh.power_discharge == 0 && sh.energy == 0) {
      EXPECT_EQ(e, nullptr);
      continue;
    }
    ASSERT_NE(e, nullptr) << t;
    EXPECT_DOUBLE_EQ(e->power_discharge, sh.power_discharge * fr.yearly_load_total);
    EXPECT_DOUBLE_EQ(e->energy, sh.energy * fr.yearly_load_total);
  }
  const double k = h.find_exogenous("FR", "reservoir")->power_discharge /
                   base().find_exogenous("DE", "reservoir")->power_discharge;
  const auto& ref_inflow = base().time_series.reservoir_inflow.at("DE");
  const auto& fr_inflow = h.time_series.reservoir_inflow.at("FR");
  for (std::size_t t = 0; t < ref_inflow.size(); ++t) EXPECT_DOUBLE_EQ(fr_inflow[t], ref_inflow[t] * k);
  // Bioenergy untouched.
  EXPECT_EQ(*h.find_exogenous("FR", "bioenergy"), *base().find_exogenous("FR", "bioenergy"));
}

TEST(Harmonize, BioenergyShare) {
  const PowerSystemSpec h = apply_factor_state(base(), FactorState::parse("f_12345"), shares());
  for (const auto& c : base().countries)
    EXPECT_DOUBLE_EQ(h.find_exogenous(c.code, "bioenergy")->power_discharge,
                     shares().at("bioenergy").power_discharge * c.yearly_load_total);
}

TEST(Harmonize, UnknownReferenceCountry) {
  ReferenceShares r = shares();
  r.reference_country = "XX";
  EXPECT_THROW(apply_factor_state(base(), FactorState(0), r), Error);
  EXPECT_THROW(derive_reference_shares(base(), "XX"), UsageError);
}

TEST(ReferenceShares, InvariantUnderUniformScaling) {
  const PowerSystemSpec one = synthesize_system(17, 1, 48, 0.0);
  const ReferenceShares a = derive_reference_shares(one, "DE");
  for (double k : {0.1, 7.0}) {
    const ReferenceShares b = derive_reference_shares(scaled(one, k), "DE");
    for (const auto& [tech, s] : a.technologies) {
      const CapacityShare& t = b.at(tech);
      EXPECT_NEAR(t.power_discharge, s.power_discharge, 1e-9 * std::max(1e-9, s.power_discharge)) << tech;
      EXPECT_NEAR(t.energy, s.energy, 1e-9 * std::max(1e-9, s.energy)) << tech;
    }
  }
}

TEST(ReferenceShares, GermanReservoirEnergy) {
  PowerSystemSpec s = scaled(synthesize_system(19, 1, 24, 0.0), 570.0);
  s.exogenous_capacities = parameters::default_exogenous_capacities("DE");
  const ReferenceShares r = derive_reference_shares(s, "DE");
  EXPECT_NEAR(r.at("reservoir").energy, 258000.0 / s.countries[0].yearly_load_total, 1e-15);
  EXPECT_NEAR(r.at("phs_open").energy, 417000.0 / s.countries[0].yearly_load_total, 1e-15);
}

TEST(ReferenceShares, JsonRoundTrip) {
  const nlohmann::json j = to_json(shares());
  EXPECT_EQ(reference_shares_from_json(nlohmann::json::parse(j.dump())), shares());
}

TEST(ReferenceShares, IsolationDropsNeighbours) {
  const PowerSystemSpec iso = isolate_country(base(), "FR");
  EXPECT_EQ(iso.countries.size(), 1u);
  EXPECT_TRUE(iso.interconnectors.empty());
  EXPECT_FALSE(iso.interconnection_enabled);
  EXPECT_TRUE(validate(iso).empty());
}
