#pragma once

// Binary factor states. Factor 1 is interconnection (set = allowed); factors
// 2..6 are wind, solar, load, hydro and bioenergy (set = native, clear =
// harmonized to the reference country). f_0 is everything harmonized and
// isolated; f_123456 is the native interconnected system.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "geobal/error.hpp"

namespace geobal {

enum class Factor : int { interconnection = 1, wind, solar, load, hydro, bioenergy };

inline constexpr int kFactorCount = 6;
inline constexpr unsigned kAllFactorsMask = (1u << kFactorCount) - 1;

inline constexpr std::array<std::string_view, kFactorCount> kFactorNames = {
    "interconnection", "wind", "solar", "load", "hydro", "bioenergy"};

inline constexpr unsigned factor_bit(int factor) { return 1u << (factor - 1); }
inline constexpr unsigned factor_bit(Factor f) { return factor_bit(static_cast<int>(f)); }

inline std::string_view factor_name(int factor) { return kFactorNames.at(factor - 1); }

/// Accepts names ("wind") and numbers ("2").
inline int parse_factor(std::string_view s) {
  for (int i = 0; i < kFactorCount; ++i)
    if (kFactorNames[i] == s) return i + 1;
  if (s.size() == 1 && s[0] >= '1' && s[0] <= '6') return s[0] - '0';
  throw UsageError("unknown factor '" + std::string(s) + "'");
}

class FactorState {
 public:
  constexpr FactorState() = default;
  explicit constexpr FactorState(unsigned mask) : mask_(mask & kAllFactorsMask) {}

  static constexpr FactorState native() { return FactorState(kAllFactorsMask); }

  constexpr unsigned mask() const { return mask_; }
  constexpr bool has(int factor) const { return (mask_ & factor_bit(factor)) != 0; }
  constexpr bool has(Factor f) const { return has(static_cast<int>(f)); }

  constexpr bool interconnection_allowed() const { return has(Factor::interconnection); }
  /// True when factor 2..6 is set to the reference country.
  constexpr bool harmonized(Factor f) const { return !has(f); }

  std::string str() const {
    if (mask_ == 0) return "f_0";
    std::string s = "f_";
    for (int f = 1; f <= kFactorCount; ++f)
      if (has(f)) s += static_cast<char>('0' + f);
    return s;
  }

  /// Canonical form only: "f_0" or strictly ascending digits 1..6.
  static FactorState parse(std::string_view s) {
    auto bad = [&]() { return UsageError("malformed factor state '" + std::string(s) + "'"); };
    if (s.size() < 3 || s.substr(0, 2) != "f_") throw bad();
    const std::string_view digits = s.substr(2);
    if (digits == "0") return FactorState(0);
    unsigned mask = 0;
    int last = 0;
    for (char c : digits) {
      if (c < '1' || c > '6') throw bad();
      const int f = c - '0';
      if (f <= last) throw bad();
      last = f;
      mask |= factor_bit(f);
    }
    return FactorState(mask);
  }

  constexpr auto operator<=>(const FactorState&) const = default;

 private:
  unsigned mask_ = 0;
};

/// Orders subset masks by size, then lexicographically on ascending factor
/// numbers: {}, {1}, ..., {6}, {1,2}, {1,3}, ..., {1,2,3,4,5,6}.
inline bool canonical_less(unsigned a, unsigned b) {
  const int pa = std::popcount(a), pb = std::popcount(b);
  if (pa != pb) return pa < pb;
  for (int f = 1; f <= kFactorCount; ++f) {
    const bool ia = a & factor_bit(f), ib = b & factor_bit(f);
    if (ia != ib) return ia;
  }
  return false;
}

/// Set of factors varied in an experiment; the others stay native (set).
class Design {
 public:
  Design() : Design(kAllFactorsMask) {}
  explicit Design(unsigned factors) : factors_(factors & kAllFactorsMask) {
    if (factors_ == 0) throw UsageError("a design needs at least one factor");
  }

  static Design from_names(const std::vector<std::string>& names) {
    unsigned m = 0;
    for (const auto& n : names) {
      const unsigned bit = factor_bit(parse_factor(n));
      if (m & bit) throw UsageError("factor '" + n + "' listed twice");
      m |= bit;
    }
    return Design(m);
  }

  unsigned factors() const { return factors_; }
  unsigned fixed() const { return kAllFactorsMask & ~factors_; }
  bool contains(int factor) const { return (factors_ & factor_bit(factor)) != 0; }
  int size() const { return std::popcount(factors_); }

  std::vector<int> factor_list() const {
    std::vector<int> out;
    for (int f = 1; f <= kFactorCount; ++f)
      if (contains(f)) out.push_back(f);
    return out;
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (int f : factor_list()) out.emplace_back(factor_name(f));
    return out;
  }

  /// Full state for a subset of the design's factors.
  FactorState state(unsigned subset) const { return FactorState(fixed() | (subset & factors_)); }

  /// All 2^n states of the design, in canonical order of their varied part.
  std::vector<FactorState> states() const {
    std::vector<unsigned> subsets;
    for (unsigned s = factors_;; s = (s - 1) & factors_) {
      subsets.push_back(s);
      if (s == 0) break;
    }
    std::sort(subsets.begin(), subsets.end(), canonical_less);
    std::vector<FactorState> out;
    for (unsigned s : subsets) out.push_back(state(s));
    return out;
  }

  bool operator==(const Design&) const = default;

 private:
  unsigned factors_;
};

/// Power set of factors 1..n in canonical order; n = 2 gives f_0, f_1, f_2, f_12.
inline std::vector<FactorState> enumerate_states(int n_factors) {
  if (n_factors < 1 || n_factors > kFactorCount)
    throw UsageError("number of factors must lie in [1,6]");
  std::vector<unsigned> subsets(1u << n_factors);
  for (unsigned s = 0; s < subsets.size(); ++s) subsets[s] = s;
  std::sort(subsets.begin(), subsets.end(), canonical_less);
  std::vector<FactorState> out;
  for (unsigned s : subsets) out.emplace_back(s);
  return out;
}

}  // namespace geobal
