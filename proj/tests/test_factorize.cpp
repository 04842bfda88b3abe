#include <gtest/gtest.h>

#include <boost/rational.hpp>

#include <algorithm>
#include <numeric>
#include <random>

#include "geobal/factorize.hpp"
#include "oracles.hpp"

using namespace geobal;
using Rational = boost::rational<long long>;

namespace {

MetricTable full_table(const SubsetArray<double>& v) {
  MetricTable t{"m", Design(), {}, {}};
  for (unsigned s = 0; s < kStateCount; ++s) t.set(FactorState(s), v[s]);
  return t;
}

SubsetArray<double> random_values(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1000.0, 1000.0);
  SubsetArray<double> v{};
  for (auto& x : v) x = u(rng);
  return v;
}

/// Relabels factors: bit b of `s` moves to bit perm[b].
unsigned permute(unsigned s, const std::array<int, kFactorCount>& perm) {
  unsigned out = 0;
  for (int b = 0; b < kFactorCount; ++b)
    if (s & (1u << b)) out |= 1u << perm[b];
  return out;
}

}  // namespace

TEST(FactorState, Labels) {
  EXPECT_EQ(FactorState(0).str(), "f_0");
  EXPECT_EQ(FactorState(kAllFactorsMask).str(), "f_123456");
  EXPECT_EQ(FactorState(0b111110).str(), "f_23456");
  EXPECT_EQ(FactorState::parse("f_135").mask(), 0b10101u);
  EXPECT_EQ(FactorState::parse("f_0").mask(), 0u);
  for (const char* bad : {"f_07", "f_31", "f_11", "g_1", "f_", "f_7", "f_1a"})
    EXPECT_THROW(FactorState::parse(bad), UsageError) << bad;
}

TEST(FactorState, Semantics) {
  const FactorState s = FactorState::parse("f_13");
  EXPECT_TRUE(s.interconnection_allowed());
  EXPECT_FALSE(s.harmonized(Factor::solar));
  EXPECT_TRUE(s.harmonized(Factor::wind));
  EXPECT_FALSE(FactorState::parse("f_23456").interconnection_allowed());
}

TEST(FactorState, RoundTripAll) {
  for (unsigned m = 0; m < kStateCount; ++m)
    EXPECT_EQ(FactorState::parse(FactorState(m).str()).mask(), m);
}

TEST(FactorState, EnumerateTwoFactors) {
  const auto s = enumerate_states(2);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].str(), "f_0");
  EXPECT_EQ(s[1].str(), "f_1");
  EXPECT_EQ(s[2].str(), "f_2");
  EXPECT_EQ(s[3].str(), "f_12");
}

TEST(FactorState, CanonicalOrder) {
  const auto s = enumerate_states(6);
  ASSERT_EQ(s.size(), 64u);
  EXPECT_EQ(s.front().str(), "f_0");
  EXPECT_EQ(s[1].str(), "f_1");
  EXPECT_EQ(s[7].str(), "f_12");
  EXPECT_EQ(s.back().str(), "f_123456");
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_TRUE(canonical_less(s[i - 1].mask(), s[i].mask()));
}

TEST(Design, ReducedDesignHoldsOthersNative) {
  const Design d = Design::from_names({"interconnection", "wind"});
  EXPECT_EQ(d.size(), 2);
  const auto s = d.states();
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s.front().str(), "f_3456");
  EXPECT_EQ(s.back().str(), "f_123456");
  EXPECT_THROW(Design::from_names({"wind", "2"}), UsageError);
  EXPECT_THROW(Design::from_names({"sunshine"}), UsageError);
}

TEST(Interaction, SingletonIsDifferenceFromBaseline) {
  std::mt19937_64 rng(1);
  const auto v = random_values(rng);
  const auto g = interaction_terms(v, kAllFactorsMask);
  for (int f = 1; f <= kFactorCount; ++f)
    EXPECT_DOUBLE_EQ(g[factor_bit(f)], v[factor_bit(f)] - v[0]);
}

TEST(Interaction, TwoFactorToy) {
  SubsetArray<double> v{};
  v[0] = 0, v[1] = 1, v[2] = 2, v[3] = 4;
  EXPECT_EQ(interaction_term(v, 3u), 1.0);
  EXPECT_EQ(interaction_terms(v, 3u)[3], 1.0);
}

TEST(Interaction, FastTransformMatchesOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_values(rng);
    std::map<unsigned, double> f;
    for (unsigned s = 0; s < kStateCount; ++s) f[s] = v[s];
    const auto g = interaction_terms(v, kAllFactorsMask);
    for (unsigned s = 0; s < kStateCount; ++s) {
      const double want = oracle::interaction_term(f, s);
      EXPECT_NEAR(g[s], want, 1e-9 * std::max(1.0, std::abs(want)));
      EXPECT_NEAR(interaction_term(v, s), want, 1e-9 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST(Interaction, AdditiveTableHasNoInteractions) {
  const std::array<double, kFactorCount> a = {3, -1, 7, 0.5, 2, -4};
  SubsetArray<double> v{};
  for (unsigned s = 0; s < kStateCount; ++s)
    for (int b = 0; b < kFactorCount; ++b)
      if (s & (1u << b)) v[s] += a[b];
  const auto g = interaction_terms(v, kAllFactorsMask);
  for (unsigned s = 0; s < kStateCount; ++s)
    if (std::popcount(s) >= 2) EXPECT_NEAR(g[s], 0.0, 1e-12);
}

TEST(Interaction, CompletenessIsExactOnRationals) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long long> num(-500, 500), den(1, 12);
  for (int trial = 0; trial < 20; ++trial) {
    SubsetArray<Rational> v{};
    for (auto& x : v) x = Rational(num(rng), den(rng));
    const auto g = interaction_terms(v, kAllFactorsMask);
    Rational sum(0);
    for (unsigned s = 1; s < kStateCount; ++s) sum += g[s];
    EXPECT_EQ(sum, v[kAllFactorsMask] - v[0]);
  }
}

TEST(SharedTotals, TwoFactorClosedFormExact) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<long long> num(-1000, 1000), den(1, 30);
  for (int trial = 0; trial < 200; ++trial) {
    SubsetArray<Rational> v{};
    for (unsigned s = 0; s < 4; ++s) v[s] = Rational(num(rng), den(rng));
    const auto g = interaction_terms(v, 3u);
    const Rational want1 = Rational(1, 2) * ((v[1] - v[0]) + (v[3] - v[2]));
    const Rational want2 = Rational(1, 2) * ((v[2] - v[0]) + (v[3] - v[1]));
    EXPECT_EQ(shared_total(g, 3u, 1), want1);
    EXPECT_EQ(shared_total(g, 3u, 2), want2);
    EXPECT_EQ(shared_total(g, 3u, 1) + shared_total(g, 3u, 2), v[3] - v[0]);
  }
}

TEST(SharedTotals, HalfOfThreeWayTermInEachPairTotal) {
  SubsetArray<Rational> g{};
  g[0b111] = Rational(6);
  EXPECT_EQ(interconnection_total(g, 0b111u, 2), Rational(3));
  EXPECT_EQ(interconnection_total(g, 0b111u, 3), Rational(3));
}

TEST(Decompose, DifferenceOfInterestToy) {
  SubsetArray<double> v{};
  v[kAllFactorsMask] = 70;
  v[kAllFactorsMask & ~1u] = 100;
  const auto t = full_table(v);
  EXPECT_EQ(difference_of_interest(t), -30.0);
  const auto d = decompose(t);
  EXPECT_EQ(d.int_value, -30.0);
  EXPECT_FALSE(d.degenerate);
}

TEST(Decompose, TotalsAndBaselineAddUpToInt) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = decompose(full_table(random_values(rng)));
    double sum = d.baseline;
    for (const auto& t : d.totals) sum += t.value;
    EXPECT_NEAR(sum, d.int_value, 1e-9 * std::max(1.0, std::abs(d.int_value)));
    double with_one = 0;
    for (unsigned s = 0; s < kStateCount; ++s)
      if (s & 1u) with_one += d.terms[s];
    EXPECT_NEAR(with_one, d.int_value, 1e-9 * std::max(1.0, std::abs(d.int_value)));
    ASSERT_TRUE(d.baseline_share.has_value());
    double shares = 0;
    for (const auto& t : d.totals) shares += *t.share;
    EXPECT_NEAR(shares, (d.int_value - d.baseline) / d.int_value, 1e-9 * std::max(1.0, std::abs(shares)));
  }
}

TEST(Decompose, ConstantTableIsDegenerate) {
  SubsetArray<double> v{};
  v.fill(42.0);
  const auto d = decompose(full_table(v));
  EXPECT_EQ(d.int_value, 0.0);
  EXPECT_TRUE(d.degenerate);
  EXPECT_TRUE(d.shares_suppressed);
  EXPECT_FALSE(d.baseline_share.has_value());
  for (const auto& t : d.totals) EXPECT_FALSE(t.share.has_value());
  const std::string csv = decomposition_csv({d});
  EXPECT_EQ(csv.find("nan"), std::string::npos);
  EXPECT_EQ(to_json(d)["totals"]["wind"]["share"], nullptr);
}

TEST(Decompose, MissingStateIsNamed) {
  MetricTable t{"m", Design(), {}, {}};
  for (unsigned s = 1; s < kStateCount; ++s) t.set(FactorState(s), 1.0);
  try {
    decompose(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("f_0"), std::string::npos);
  }
  std::map<FactorState, StorageMetrics> results;
  EXPECT_THROW(decompose_metrics(results, Design(0b11)), Error);
}

TEST(Decompose, NeedsInterconnectionFactor) {
  const Design d(0b110);
  MetricTable t{"m", d, {}, {}};
  for (FactorState s : d.states()) t.set(s, 1.0);
  EXPECT_THROW(decompose(t), Error);
}

TEST(Decompose, PermutationEquivariance) {
  std::mt19937_64 rng(6);
  std::array<int, kFactorCount> perm = {0, 1, 2, 3, 4, 5};
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(perm.begin() + 1, perm.end(), rng);  // interconnection stays bit 0
    const auto v = random_values(rng);
    SubsetArray<double> w{};
    for (unsigned s = 0; s < kStateCount; ++s) w[permute(s, perm)] = v[s];
    const auto a = decompose(full_table(v)), b = decompose(full_table(w));
    for (unsigned s = 0; s < kStateCount; ++s)
      EXPECT_NEAR(a.terms[s], b.terms[permute(s, perm)], 1e-9 * std::max(1.0, std::abs(a.terms[s])));
    for (const auto& t : a.totals) {
      const int mapped = perm[t.factor - 1] + 1;
      auto it = std::find_if(b.totals.begin(), b.totals.end(),
                             [&](const FactorTotal& x) { return x.factor == mapped; });
      ASSERT_NE(it, b.totals.end());
      EXPECT_NEAR(t.value, it->value, 1e-9 * std::max(1.0, std::abs(t.value)));
    }
  }
}

TEST(Decompose, ReducedDesign) {
  const Design d = Design::from_names({"interconnection", "wind"});
  MetricTable t{"m", d, {}, {}};
  // f_3456 = 10, f_13456 = 8, f_23456 = 6, f_123456 = 1
  t.set(FactorState::parse("f_3456"), 10);
  t.set(FactorState::parse("f_13456"), 8);
  t.set(FactorState::parse("f_23456"), 6);
  t.set(FactorState::parse("f_123456"), 1);
  const auto r = decompose(t);
  EXPECT_EQ(r.int_value, -5.0);
  EXPECT_EQ(r.baseline, -2.0);
  ASSERT_EQ(r.totals.size(), 1u);
  EXPECT_EQ(r.totals[0].factor, 2);
  EXPECT_EQ(r.totals[0].value, -3.0);
  EXPECT_DOUBLE_EQ(*r.totals[0].share, 0.6);
}

TEST(Decompose, CsvLayout) {
  std::mt19937_64 rng(7);
  const auto d = decompose(full_table(random_values(rng)));
  const CsvTable t = parse_csv(decomposition_csv({d}));
  EXPECT_EQ(t.header, (std::vector<std::string>{"metric", "term", "subset", "value", "share"}));
  // 64 states, 63 interactions, INT, baseline, 5 totals
  EXPECT_EQ(t.rows.size(), 64u + 63u + 1u + 1u + 5u);
  EXPECT_EQ(t.rows.back()[1], "total");
  EXPECT_EQ(t.rows.back()[2], "bioenergy");
}
