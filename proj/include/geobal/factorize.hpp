#pragma once

// Factor separation over a 2^n table of scenario values.
//
// Tables are indexed by the varied part of a state: bit f-1 of the index is
// factor f of the design. Interaction terms are the Moebius inversion
//   fhat_S = sum_{T subset S} (-1)^{|S|-|T|} f_T.
// With interconnection as factor 1, INT = f_D - f_{D\1}, and the
// interconnection-relevant total of factor j distributes every interaction
// that involves 1 and j equally among the non-interconnection members:
//   total_j = sum_{S subset D\1, j in S} fhat_{S+1} / |S|.
// fhat_1 itself is kept as a separate baseline row, so baseline plus totals
// add up to INT.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geobal/csv.hpp"
#include "geobal/factor_state.hpp"
#include "geobal/metrics.hpp"

namespace geobal {

inline constexpr std::size_t kStateCount = 1u << kFactorCount;

template <class T>
using SubsetArray = std::array<T, kStateCount>;

/// Subsets of `mask`, largest first, canonical order within a size.
inline std::vector<unsigned> subsets_descending(unsigned mask) {
  std::vector<unsigned> out;
  for (unsigned s = mask;; s = (s - 1) & mask) {
    out.push_back(s);
    if (s == 0) break;
  }
  std::sort(out.begin(), out.end(), [](unsigned a, unsigned b) {
    if (std::popcount(a) != std::popcount(b)) return std::popcount(a) > std::popcount(b);
    return canonical_less(a, b);
  });
  return out;
}

/// All interaction terms at once. Entries outside the subsets of `design` are
/// left untouched.
template <class T>
SubsetArray<T> interaction_terms(const SubsetArray<T>& f, unsigned design) {
  SubsetArray<T> g = f;
  for (int b = 0; b < kFactorCount; ++b) {
    const unsigned bit = 1u << b;
    if (!(design & bit)) continue;
    for (unsigned s = design;; s = (s - 1) & design) {
      if (s & bit) g[s] = g[s] - g[s ^ bit];
      if (s == 0) break;
    }
  }
  return g;
}

/// One term by direct inclusion-exclusion.
template <class T>
T interaction_term(const SubsetArray<T>& f, unsigned subset) {
  T total = T(0);
  for (unsigned t = subset;; t = (t - 1) & subset) {
    if ((std::popcount(subset) - std::popcount(t)) % 2 == 0)
      total = total + f[t];
    else
      total = total - f[t];
    if (t == 0) break;
  }
  return total;
}

/// Equal sharing of every interaction among its members:
///   sum_{S subset design, factor in S} fhat_S / |S|.
template <class T>
T shared_total(const SubsetArray<T>& fhat, unsigned design, int factor) {
  const unsigned bit = factor_bit(factor);
  T total = T(0);
  for (unsigned s : subsets_descending(design))
    if (s & bit) total = total + fhat[s] / T(std::popcount(s));
  return total;
}

/// Interconnection-relevant total of factor j (j != 1).
template <class T>
T interconnection_total(const SubsetArray<T>& fhat, unsigned design, int factor) {
  const unsigned one = factor_bit(Factor::interconnection), bit = factor_bit(factor);
  T total = T(0);
  for (unsigned s : subsets_descending(design & ~one))
    if (s & bit) total = total + fhat[s | one] / T(std::popcount(s));
  return total;
}

/// Values of one metric over every state of a design.
struct MetricTable {
  std::string metric;
  Design design;
  SubsetArray<double> values{};  // by varied subset
  SubsetArray<bool> present{};

  void set(FactorState s, double v) {
    const unsigned sub = s.mask() & design.factors();
    values[sub] = v;
    present[sub] = true;
  }
  double at(unsigned subset) const {
    if (!present.at(subset)) throw Error(metric + ": no value for state " + design.state(subset).str());
    return values[subset];
  }
  void require_complete() const {
    for (FactorState s : design.states()) at(s.mask() & design.factors());
  }
};

inline double difference_of_interest(const MetricTable& t) {
  if (!t.design.contains(1)) throw Error("difference of interest needs the interconnection factor");
  const unsigned d = t.design.factors();
  return t.at(d) - t.at(d & ~factor_bit(Factor::interconnection));
}

struct FactorTotal {
  int factor;
  double value;
  std::optional<double> share;
};

struct FactorDecomposition {
  std::string metric;
  Design design;
  SubsetArray<double> values{};
  SubsetArray<double> terms{};  // fhat by subset
  double native = 0.0;          // all design factors set (f_123456)
  double isolated = 0.0;        // interconnection off, the rest native (f_23456)
  double int_value = 0.0;
  double baseline = 0.0;        // fhat_1
  std::optional<double> baseline_share;
  std::vector<FactorTotal> totals;  // factors 2..6 of the design
  bool degenerate = false;          // INT == 0
  bool shares_suppressed = false;   // |INT| < 1e-6 |isolated|
};

inline constexpr double kShareThreshold = 1e-6;

inline FactorDecomposition decompose(const MetricTable& table) {
  table.require_complete();
  if (!table.design.contains(1))
    throw Error("decomposition needs the interconnection factor in the design");
  const unsigned d = table.design.factors();
  const unsigned one = factor_bit(Factor::interconnection);

  FactorDecomposition out;
  out.metric = table.metric;
  out.design = table.design;
  out.values = table.values;
  out.terms = interaction_terms(table.values, d);
  out.native = table.at(d);
  out.isolated = table.at(d & ~one);
  out.int_value = out.native - out.isolated;
  out.baseline = out.terms[one];
  out.degenerate = out.int_value == 0.0;
  out.shares_suppressed =
      out.degenerate || std::abs(out.int_value) < kShareThreshold * std::abs(out.isolated);
  auto share = [&](double v) -> std::optional<double> {
    if (out.shares_suppressed) return std::nullopt;
    return v / out.int_value;
  };
  out.baseline_share = share(out.baseline);
  for (int f : table.design.factor_list()) {
    if (f == 1) continue;
    const double v = interconnection_total(out.terms, d, f);
    out.totals.push_back({f, v, share(v)});
  }
  return out;
}

/// Label of a subset of factors in state notation, e.g. "f_123".
inline std::string subset_label(unsigned subset) { return FactorState(subset).str(); }

inline std::string decomposition_csv_header() { return "metric,term,subset,value,share\n"; }

/// Rows: one `state` per table entry, one `interaction` per non-empty subset,
/// then `INT`, `baseline` and one `total` per non-interconnection factor.
inline std::string decomposition_csv_rows(const FactorDecomposition& dcmp) {
  std::string out;
  auto row = [&](const char* term, const std::string& subset, double v,
                 std::optional<double> share) {
    out += dcmp.metric + ',' + term + ',' + subset + ',' + format_double(v) + ',' +
           (share ? format_double(*share) : std::string()) + '\n';
  };
  const auto states = dcmp.design.states();
  for (FactorState s : states) row("state", s.str(), dcmp.values[s.mask() & dcmp.design.factors()], {});
  for (FactorState s : states) {
    const unsigned sub = s.mask() & dcmp.design.factors();
    if (sub != 0) row("interaction", subset_label(sub), dcmp.terms[sub], {});
  }
  row("INT", "", dcmp.int_value,
      dcmp.shares_suppressed ? std::nullopt : std::optional<double>(1.0));
  row("baseline", std::string(factor_name(1)), dcmp.baseline, dcmp.baseline_share);
  for (const FactorTotal& t : dcmp.totals)
    row("total", std::string(factor_name(t.factor)), t.value, t.share);
  return out;
}

inline std::string decomposition_csv(const std::vector<FactorDecomposition>& all) {
  std::string out = decomposition_csv_header();
  for (const auto& d : all) out += decomposition_csv_rows(d);
  return out;
}

inline nlohmann::json to_json(const FactorDecomposition& d) {
  auto opt = [](std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  nlohmann::json totals = nlohmann::json::object();
  for (const FactorTotal& t : d.totals)
    totals[std::string(factor_name(t.factor))] = {{"value", t.value}, {"share", opt(t.share)}};
  return {{"metric", d.metric},
          {"factors", d.design.names()},
          {"native", d.native},
          {"isolated", d.isolated},
          {"INT", d.int_value},
          {"baseline", {{"value", d.baseline}, {"share", opt(d.baseline_share)}}},
          {"totals", totals},
          {"degenerate", d.degenerate},
          {"shares_suppressed", d.shares_suppressed}};
}

/// One decomposition per storage metric. Every state of the design must be
/// present.
inline std::vector<FactorDecomposition> decompose_metrics(
    const std::map<FactorState, StorageMetrics>& results, const Design& design) {
  std::vector<FactorDecomposition> out;
  for (FactorState s : design.states())
    if (!results.count(s)) throw Error("no result for state " + s.str());
  for (int m = 0; m < kMetricCount; ++m) {
    MetricTable t{std::string(metric_name(m)), design, {}, {}};
    for (FactorState s : design.states()) t.set(s, results.at(s).values[m]);
    out.push_back(decompose(t));
  }
  return out;
}

}  // namespace geobal
