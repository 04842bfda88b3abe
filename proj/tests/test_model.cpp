#include <gtest/gtest.h>

#include <algorithm>

#include "geobal/lp_builder.hpp"
#include "geobal/solver.hpp"
#include "geobal/synthetic.hpp"
#include "geobal/system_io.hpp"
#include "test_support.hpp"

using namespace geobal;
using testing_support::TempDir;

TEST(Annuity, OneYearStraightLine) { EXPECT_DOUBLE_EQ(annuity(123.0, 1.0, 0.0), 123.0); }

TEST(Annuity, MatchesClosedForm) {
  const double a = annuity(1000.0, 25.0, 0.04);
  EXPECT_NEAR(a, 1000.0 * 0.04 / (1.0 - std::pow(1.04, -25.0)), 1e-12);
  EXPECT_THROW(annuity(1.0, 0.0, 0.04), Error);
  EXPECT_THROW(annuity(1.0, 10.0, -0.1), Error);
}

TEST(Validate, SyntheticSystemIsClean) {
  const PowerSystemSpec s = synthesize_system(3, 3, 48, 0.2);
  const auto v = validate(s);
  EXPECT_TRUE(v.empty()) << (v.empty() ? "" : v.front().str());
}

TEST(Validate, ReportsBrokenInputs) {
  PowerSystemSpec s = synthesize_system(3, 2, 24, 0.0);
  s.countries.push_back(s.countries.front());
  s.time_series.capacity_factors[{"DE", "pv"}][3] = 1.5;
  s.time_series.load["FR"].pop_back();
  s.interconnectors.push_back({"DE", "DE", -1.0});
  s.technologies.front().lifetime = 0.5;
  const auto v = validate(s);
  auto has = [&](const std::string& msg) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.message == msg; });
  };
  EXPECT_TRUE(has("duplicate country code"));
  EXPECT_TRUE(has("capacity factor out of [0,1]"));
  EXPECT_TRUE(has("series length mismatch"));
  EXPECT_TRUE(has("line connects a country to itself"));
  EXPECT_TRUE(has("negative NTC"));
  EXPECT_TRUE(has("lifetime must be at least 1 year"));
  EXPECT_THROW(assemble(s), Error);
}

TEST(Validate, ExogenousOnExpandableTechnology) {
  PowerSystemSpec s = synthesize_system(3, 1, 24, 0.0);
  s.exogenous_capacities.push_back({"DE", "pv", 1.0, 0.0, 0.0});
  const auto v = validate(s);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v.front().message, "exogenous capacity references an expandable technology");
}

TEST(SystemIo, RoundTripIsExact) {
  TempDir dir("roundtrip");
  const PowerSystemSpec s = synthesize_system(5, 3, 72, -0.5);
  const auto manifest = write_system(s, dir.path());
  const PowerSystemSpec back = read_system(manifest);
  EXPECT_EQ(back, s);
  EXPECT_EQ(spec_hash(back), spec_hash(s));
}

TEST(SystemIo, HashTracksContent) {
  PowerSystemSpec s = synthesize_system(5, 2, 24, 0.0);
  const std::string h = spec_hash(s);
  s.time_series.load["DE"][0] += 1e-9;
  EXPECT_NE(spec_hash(s), h);
}

TEST(SystemIo, MalformedManifestIsUsageError) {
  TempDir dir("malformed");
  write_text(dir / "system.json", "{ not json");
  EXPECT_THROW(read_system(dir / "system.json"), UsageError);
  EXPECT_THROW(read_system(dir / "missing.json"), UsageError);
}

TEST(Synthetic, DeterministicInSeed) {
  EXPECT_EQ(synthesize_system(9, 2, 48, -0.9), synthesize_system(9, 2, 48, -0.9));
  EXPECT_NE(synthesize_system(9, 2, 48, -0.9), synthesize_system(10, 2, 48, -0.9));
  EXPECT_THROW(synthesize_system(9, 0, 48, 0.0), UsageError);
  EXPECT_THROW(synthesize_system(9, 2, 48, 1.5), UsageError);
}

TEST(Synthetic, AntiCorrelatedWind) {
  const PowerSystemSpec s = synthesize_system(7, 2, 2000, -0.9);
  const auto& a = s.time_series.capacity_factors.at({"DE", "wind_onshore"});
  const auto& b = s.time_series.capacity_factors.at({"FR", "wind_onshore"});
  double ma = 0, mb = 0;
  for (std::size_t h = 0; h < a.size(); ++h) ma += a[h], mb += b[h];
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t h = 0; h < a.size(); ++h) {
    sab += (a[h] - ma) * (b[h] - mb);
    saa += (a[h] - ma) * (a[h] - ma);
    sbb += (b[h] - mb) * (b[h] - mb);
  }
  EXPECT_LT(sab / std::sqrt(saa * sbb), -0.5);
}

TEST(Builder, CountsMatchClosedForm) {
  for (bool interconnection : {true, false}) {
    PowerSystemSpec s = synthesize_system(2, 3, 24, 0.0);
    s.interconnection_enabled = interconnection;
    const AssembledLp a = assemble(s);
    EXPECT_EQ(a.lp.num_columns(), a.report.columns());
    EXPECT_EQ(a.lp.num_rows(), a.report.rows());
    EXPECT_EQ(a.report.columns(), a.report.closed_form_columns());
    EXPECT_EQ(a.report.rows(), a.report.closed_form_rows());
    EXPECT_EQ(a.report.lines, interconnection ? 2u : 0u);
    EXPECT_TRUE(a.lp.check().empty());
  }
}

TEST(Builder, DeterministicColumnOrder) {
  const PowerSystemSpec s = synthesize_system(2, 2, 12, 0.0);
  const AssembledLp a = assemble(s), b = assemble(s);
  ASSERT_EQ(a.lp.num_columns(), b.lp.num_columns());
  for (std::size_t j = 0; j < a.lp.num_columns(); ++j)
    EXPECT_EQ(a.lp.columns()[j].name, b.lp.columns()[j].name);
}

TEST(Builder, WindOnlyCountryNeedsTwiceTheLoad) {
  const PowerSystemSpec s = testing_support::wind_only_system(1.0, 0.5);
  const AssembledLp a = assemble(s);
  const SolveResult r = solve(a.lp);
  ASSERT_EQ(r.status, SolveStatus::optimal);
  const auto j = a.lp.column_index(EntityRef{"N", "DE", "wind_onshore", -1}.name());
  ASSERT_TRUE(j.has_value());
  EXPECT_NEAR(r.primal[*j], 2.0, 1e-9);
  const double per_mw = annuity(1182.0 * 1000.0, 25.0, 0.04) * s.horizon_fraction();
  EXPECT_NEAR(r.objective, 2.0 * per_mw, 1e-9 * r.objective);
}

TEST(Builder, WindOnlyScalesWithLoadAndAvailability) {
  const PowerSystemSpec s = testing_support::wind_only_system(3.0, 0.25);
  const AssembledLp a = assemble(s);
  const SolveResult r = solve(a.lp);
  ASSERT_EQ(r.status, SolveStatus::optimal);
  const auto j = a.lp.column_index(EntityRef{"N", "DE", "wind_onshore", -1}.name());
  EXPECT_NEAR(r.primal[*j], 12.0, 1e-9);
}

TEST(Parameters, MatchTranscribedTables) {
  const auto bad = testing_support::parameter_fixture_mismatches(
      std::filesystem::path(GEOBAL_FIXTURE_DIR) / "parameter_tables.csv");
  EXPECT_TRUE(bad.empty()) << bad.size() << " mismatches, first: " << bad.front();
}

TEST(Parameters, SpotValues) {
  namespace p = parameters;
  EXPECT_EQ(p::generation_row("Wind onshore").overnight_cost, 1182);
  EXPECT_EQ(p::storage_row("Power-to-gas-to-power").efficiency_in, 50);
  EXPECT_EQ(p::storage_row("Power-to-gas-to-power").efficiency_out, 50);
  EXPECT_EQ(p::default_ntc("DE", "AT"), 7500);
  double reservoir = 0;
  for (const auto& e : p::default_exogenous_capacities("DE"))
    if (e.technology == "reservoir") reservoir = e.energy;
  EXPECT_DOUBLE_EQ(reservoir, 258000.0);
}

TEST(Parameters, DefaultTechnologiesAreValid) {
  PowerSystemSpec s = testing_support::wind_only_system();
  s.technologies = parameters::default_technologies();
  for (const auto& t : s.technologies)
    if (t.kind == TechKind::variable_renewable)
      s.time_series.capacity_factors[{"DE", t.id}] = std::vector<double>(4, 0.5);
  EXPECT_TRUE(validate(s).empty());
  const Technology* p2g = s.find_technology("p2g");
  ASSERT_NE(p2g, nullptr);
  EXPECT_DOUBLE_EQ(p2g->efficiency_in, 0.5);
  EXPECT_EQ(p2g->role, TechRole::long_storage);
}
