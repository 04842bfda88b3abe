#include <gtest/gtest.h>

#include <random>

#include "geobal/residual.hpp"
#include "geobal/synthetic.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace geobal;

namespace {

PowerSystemSpec two_hour_fixture() {
  PowerSystemSpec s = testing_support::wind_only_system(1.0, 0.5, 2);
  s.time_series.load["DE"] = {3.0, 1.0};
  s.time_series.capacity_factors[{"DE", "wind_onshore"}] = {0.5, 1.0};
  return s;
}

std::vector<double> random_integer_series(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 500), val(-20, 20);
  std::vector<double> r(len(rng));
  for (auto& x : r) x = val(rng);
  return r;
}

}  // namespace

TEST(Residual, ArithmeticFixture) {
  const auto r = residual_series(two_hour_fixture(), {{{"DE", "wind_onshore"}, 2.0}});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].values, (std::vector<double>{2.0, -1.0}));
}

TEST(Residual, ZeroCapacityLeavesLoad) {
  const PowerSystemSpec s = two_hour_fixture();
  const auto r = residual_series(s, {{{"DE", "wind_onshore"}, 0.0}});
  EXPECT_EQ(r[0].values, s.time_series.load.at("DE"));
}

TEST(Residual, SaturatedCapacityIsNeverPositive) {
  PowerSystemSpec s = two_hour_fixture();
  s.time_series.capacity_factors[{"DE", "wind_onshore"}] = {1.0, 1.0};
  const auto r = residual_series(s, {{{"DE", "wind_onshore"}, 3.0}});
  for (double v : r[0].values) EXPECT_LE(v, 0.0);
  EXPECT_TRUE(positive_events(r[0].values).empty());
}

TEST(Residual, MissingCapacityIsAnError) {
  EXPECT_THROW(residual_series(two_hour_fixture(), {}), Error);
}

TEST(PeakHour, EarliestMaximumWins) {
  EXPECT_EQ(peak_residual_hour({1, 4, 2, 4}), (std::pair<std::size_t, double>{1, 4}));
  EXPECT_EQ(peak_residual_hour({-3, -1, -2}).first, 1u);
  EXPECT_THROW(peak_residual_hour({}), Error);
}

TEST(Events, HandScannedSeries) {
  const auto e = positive_events({5, -2, 3, -7, 4}, "XX");
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0], (ResidualEvent{"XX", 0, 2, 6, 8}));
  EXPECT_EQ(e[1], (ResidualEvent{"XX", 4, 4, 4, 4}));
}

TEST(Events, ZeroDoesNotOpenAnEvent) {
  EXPECT_TRUE(positive_events({0, 0, -1}).empty());
  const auto e = positive_events({0, 2, -2, 1});
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].start, 1u);
  EXPECT_EQ(e[0].end, 1u);
  EXPECT_EQ(e[1].start, 3u);
}

TEST(Events, LeadingZerosOnlyShiftIndices) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto r = random_integer_series(rng);
    const std::size_t pad = trial % 7 + 1;
    std::vector<double> padded(pad, 0.0);
    padded.insert(padded.end(), r.begin(), r.end());
    const auto a = positive_events(r), b = positive_events(padded);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].start + pad, b[i].start);
      EXPECT_EQ(a[i].end + pad, b[i].end);
      EXPECT_EQ(a[i].peak_cumulative, b[i].peak_cumulative);
    }
  }
}

TEST(Events, MatchBruteForceScanner) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto r = random_integer_series(rng);
    const auto got = positive_events(r);
    const auto want = oracle::brute_force_events(r);
    ASSERT_EQ(got.size(), want.size()) << "trial " << trial;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].start, want[i].start);
      EXPECT_EQ(got[i].end, want[i].end);
      EXPECT_EQ(got[i].peak_cumulative, want[i].peak);
    }
  }
}

TEST(Events, Invariants) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const auto r = random_integer_series(rng);
    double positive_mass = 0.0;
    for (double v : r) positive_mass += std::max(v, 0.0);
    double covered = 0.0;
    std::size_t last_end = 0;
    bool first = true;
    for (const auto& e : positive_events(r)) {
      EXPECT_LE(e.start, e.end);
      EXPECT_GT(e.peak_cumulative, 0.0);
      EXPECT_GE(e.gross_positive, e.peak_cumulative);
      if (!first) EXPECT_GT(e.start, last_end);
      first = false;
      last_end = e.end;
      double cum = 0.0;
      for (std::size_t h = e.start; h <= e.end; ++h) {
        cum += r[h];
        EXPECT_GT(cum, 0.0);
      }
      covered += e.gross_positive;
    }
    EXPECT_LE(covered, positive_mass);
  }
}

TEST(Events, GapFreeSeriesIsFullyCovered) {
  const std::vector<double> r = {1, 2, -1, 3, 0, 2};
  const auto e = positive_events(r);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].gross_positive, 8.0);
  EXPECT_EQ(e[0].peak_cumulative, 7.0);
}

TEST(Coincidence, SystemPeakNeverExceedsSumOfPeaks) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 5, len = 1 + trial % 97;
    std::vector<ResidualSeries> s(n);
    for (std::size_t c = 0; c < n; ++c) {
      s[c].country = std::string(1, static_cast<char>('A' + c)) + "X";
      for (std::size_t h = 0; h < len; ++h) s[c].values.push_back(u(rng));
    }
    const auto rep = peak_coincidence(s);
    EXPECT_LE(rep.system_peak, rep.sum_of_peaks + 1e-9);
  }
}

TEST(Coincidence, AlignedSeriesAreEqual) {
  const std::vector<ResidualSeries> s = {{"AA", {1, 5, 2}}, {"BB", {2, 10, 4}}};
  const auto rep = peak_coincidence(s);
  EXPECT_EQ(rep.system_peak, 15.0);
  EXPECT_EQ(rep.sum_of_peaks, 15.0);
  EXPECT_THROW(peak_coincidence({{"AA", {1}}, {"BB", {1, 2}}}), Error);
}

TEST(CrossSection, OtherCountriesAtEachPeak) {
  const PowerSystemSpec s = synthesize_system(4, 3, 48, 0.0);
  std::map<SeriesKey, double> caps;
  for (const auto& c : s.countries)
    for (const char* t : {"pv", "wind_onshore", "wind_offshore"}) caps[{c.code, t}] = 50.0;
  const auto rep = analyze_residuals(s, caps, "f_23456", {"FR"});
  ASSERT_EQ(rep.cross_section.size(), 6u);
  for (const auto& row : rep.cross_section) {
    EXPECT_NE(row.country, row.other);
    const auto& load = s.time_series.load.at(row.other);
    EXPECT_DOUBLE_EQ(row.relative_load,
                     load[row.peak_hour] / *std::max_element(load.begin(), load.end()));
    EXPECT_DOUBLE_EQ(row.solar_cf, s.time_series.capacity_factors.at({row.other, "pv"})[row.peak_hour]);
  }
  for (const auto& e : rep.events) EXPECT_NE(e.country, "FR");
  EXPECT_EQ(rep.series.size(), 3u);
}

TEST(Report, AllNegativeSeriesWritesHeaderOnlyEvents) {
  testing_support::TempDir dir("residual");
  PowerSystemSpec s = two_hour_fixture();
  s.time_series.capacity_factors[{"DE", "wind_onshore"}] = {1.0, 1.0};
  const auto rep = analyze_residuals(s, {{{"DE", "wind_onshore"}, 10.0}}, "f_0");
  write_residual_report(rep, dir.path());
  EXPECT_EQ(read_text(dir / "events.csv"),
            "country,start_hour,end_hour,duration_h,peak_cumulative_mwh,gross_positive_mwh\n");
  for (const char* f : {"residual.csv", "peak_hours.csv", "cross_section.csv", "coincidence.csv",
                        "residual.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
}
