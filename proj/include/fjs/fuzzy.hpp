#pragma once

// Triangular fuzzy numbers: arithmetic, defuzzification and ranking.

#include <algorithm>
#include <compare>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fjs {

/// Weights of the Z-value ranking: Z = beta*Vmax + (1-beta)*Vmin + omega*spread.
struct RankConfig {
  double beta = 0.5;
  double omega = 0.4;
};

/// Triangular fuzzy number (a1, a2, a3) with a1 <= a2 <= a3.
template <typename Scalar>
struct BasicTfn {
  Scalar a1 = 0;
  Scalar a2 = 0;
  Scalar a3 = 0;

  constexpr BasicTfn() = default;
  constexpr BasicTfn(Scalar lo, Scalar mode, Scalar hi) : a1(lo), a2(mode), a3(hi) {}

  static constexpr BasicTfn crisp(Scalar c) { return {c, c, c}; }

  constexpr bool valid() const { return a1 <= a2 && a2 <= a3; }

  friend constexpr bool operator==(const BasicTfn&, const BasicTfn&) = default;
};

using Tfn = BasicTfn<double>;

inline constexpr Tfn kZero{};

template <typename Scalar>
constexpr BasicTfn<Scalar> operator+(const BasicTfn<Scalar>& a, const BasicTfn<Scalar>& b) {
  return {a.a1 + b.a1, a.a2 + b.a2, a.a3 + b.a3};
}

template <typename Scalar>
constexpr BasicTfn<Scalar>& operator+=(BasicTfn<Scalar>& a, const BasicTfn<Scalar>& b) {
  a = a + b;
  return a;
}

template <typename Scalar>
constexpr BasicTfn<Scalar> add(const BasicTfn<Scalar>& a, const BasicTfn<Scalar>& b) {
  return a + b;
}

/// Piecewise-linear membership degree. Zero-width branches are skipped and
/// the modal value always has degree 1.
template <typename Scalar>
constexpr Scalar membership(const BasicTfn<Scalar>& t, Scalar x) {
  if (x == t.a2) return Scalar(1);
  if (t.a1 < x && x < t.a2) return (x - t.a1) / (t.a2 - t.a1);
  if (t.a2 < x && x <= t.a3) return (t.a3 - x) / (t.a3 - t.a2);
  return Scalar(0);
}

template <typename Scalar>
struct Interval {
  Scalar lo;
  Scalar hi;
  friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

template <typename Scalar>
constexpr Interval<Scalar> alpha_cut(const BasicTfn<Scalar>& t, Scalar alpha) {
  return {t.a1 + alpha * (t.a2 - t.a1), t.a3 - alpha * (t.a3 - t.a2)};
}

template <typename Scalar>
constexpr Scalar defuzz(const BasicTfn<Scalar>& a) {
  return (a.a1 + 2 * a.a2 + a.a3) / 4;
}

template <typename Scalar>
constexpr Scalar spread(const BasicTfn<Scalar>& a) {
  return a.a3 - a.a1;
}

/// Expected-value-plus-spread ranking index. The integrals of the triangular
/// membership over [a2,a3] and [a1,a2] reduce to half the segment widths.
template <typename Scalar>
constexpr Scalar z_value(const BasicTfn<Scalar>& a, const RankConfig& cfg = {}) {
  const Scalar v_max = a.a2 + (a.a3 - a.a2) / 2;
  const Scalar v_min = a.a2 - (a.a2 - a.a1) / 2;
  const Scalar beta = static_cast<Scalar>(cfg.beta);
  return beta * v_max + (1 - beta) * v_min + static_cast<Scalar>(cfg.omega) * spread(a);
}

/// Whole-operand maximum by Z-value; the first operand wins ties.
template <typename Scalar>
constexpr const BasicTfn<Scalar>& fuzzy_max(const BasicTfn<Scalar>& a, const BasicTfn<Scalar>& b,
                                            const RankConfig& cfg = {}) {
  return z_value(a, cfg) >= z_value(b, cfg) ? a : b;
}

/// Lexicographic ranking on (defuzz, mode, spread).
template <typename Scalar>
constexpr std::partial_ordering rank_sakawa(const BasicTfn<Scalar>& a, const BasicTfn<Scalar>& b) {
  if (auto c = defuzz(a) <=> defuzz(b); c != 0) return c;
  if (auto c = a.a2 <=> b.a2; c != 0) return c;
  return spread(a) <=> spread(b);
}

struct Quartiles {
  double q1 = 0;
  double q2 = 0;
  double q3 = 0;
  friend constexpr bool operator==(const Quartiles&, const Quartiles&) = default;
};

/// Quartiles of sorted values by linear interpolation at rank q*(k-1).
inline Quartiles quartiles_sorted(std::span<const double> sorted) {
  if (sorted.empty()) throw std::domain_error("quartiles of an empty list");
  const auto at = [&](double q) {
    const double rank = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

/// Quartiles over the defuzzified values of a list of TFNs.
inline Quartiles quartiles_defuzz(std::span<const Tfn> values) {
  std::vector<double> crisp(values.size());
  std::transform(values.begin(), values.end(), crisp.begin(), [](const Tfn& t) { return defuzz(t); });
  std::sort(crisp.begin(), crisp.end());
  return quartiles_sorted(crisp);
}

/// Shortest decimal that parses back to exactly `x`.
std::string format_real(double x);

/// Renders as "(a1,a2,a3)", e.g. "(57,83,108)".
std::string format_tfn(const Tfn& t);

}  // namespace fjs
