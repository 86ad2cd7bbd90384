#pragma once

// Tail bounds for probabilistic recurrences: the companion solution u, its
// inverse above d, the piecewise D_r function and the theorem-level bounds
// built on it (unary, span, work and the expectation-based bound).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "prr/error.hpp"
#include "prr/recspec.hpp"

namespace prr {

enum class CaseTag { r_le_ud, below_d, u_ge_r, general, simplified_w };
enum class Theorem { karp_unary, karp_expectation, span, work };

inline std::string_view to_string(CaseTag c) {
  switch (c) {
    case CaseTag::r_le_ud:
      return "r_le_ud";
    case CaseTag::below_d:
      return "below_d";
    case CaseTag::u_ge_r:
      return "u_ge_r";
    case CaseTag::general:
      return "general";
    case CaseTag::simplified_w:
      return "simplified_w";
  }
  return "?";
}

inline std::string_view to_string(Theorem t) {
  switch (t) {
    case Theorem::karp_unary:
      return "karp_unary";
    case Theorem::karp_expectation:
      return "karp_expectation";
    case Theorem::span:
      return "span";
    case Theorem::work:
      return "work";
  }
  return "?";
}

struct BoundValue {
  double threshold_r = 0.0;
  double bound = 1.0;  // clamped to [0, 1]
  double raw = 1.0;    // before clamping; > 1 means the bound is vacuous
  CaseTag case_tag = CaseTag::r_le_ud;
  Theorem theorem = Theorem::karp_unary;
};

inline constexpr double kBisectRelTol = 1e-9;
inline constexpr int kBisectMaxIter = 200;
inline constexpr double kCeilSnap = 1e-12;

namespace detail {

inline BoundValue make_bound(double r, double raw, CaseTag c, Theorem t) {
  BoundValue b;
  b.threshold_r = r;
  b.raw = raw;
  b.bound = std::isnan(raw) ? 1.0 : std::clamp(raw, 0.0, 1.0);
  b.case_tag = c;
  b.theorem = t;
  return b;
}

// ceil(t), treating t within 1e-12 of an integer as that integer so that
// r = u(x) + w a(x) lands on exactly w.
inline double snapped_ceil(double t) {
  const double n = std::round(t);
  if (std::abs(t - n) < kCeilSnap) return n;
  return std::ceil(t);
}

// (m/x)^k * x / u', with 0^k = 0 taking precedence over a vanishing u'.
inline double karp_term(double ratio, double k, double x, double u_inv) {
  if (ratio <= 0.0) return 0.0;
  if (u_inv <= 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(ratio, k) * (x / u_inv);
}

}  // namespace detail

// Which u backs the bounds, and where it comes from.
class USolution {
 public:
  enum class Source { analytic, iterated };

  explicit USolution(const RecurrenceSpec& spec, std::size_t max_iter = kSolveIterCap)
      : spec_(&spec), max_iter_(max_iter) {}

  Source source() const { return spec_->u ? Source::analytic : Source::iterated; }
  double u_of_d() const { return spec_->u_base; }
  std::size_t max_iter() const { return max_iter_; }

  double operator()(double x) const {
    return spec_->u ? spec_->u_analytic(x) : iterate_u(*spec_, x, max_iter_);
  }

 private:
  const RecurrenceSpec* spec_;
  std::size_t max_iter_;
};

// Minimal solution of u(x) = toll_eff(x) + u(shrink(x)) with u = u_base on
// [0, d]. Ignores any analytic u in the spec.
inline double solve_u(const RecurrenceSpec& spec, double x) { return iterate_u(spec, x); }

// Inverse of u above d: the smallest x with u(x) >= y, or d when y <= u(d).
inline double invert_u(const RecurrenceSpec& spec, double y) {
  const USolution u(spec);
  const double d = spec.terminal_d;
  if (std::isnan(y)) throw DomainError("invert_u of NaN");
  if (y <= u(d)) return d;

  double lo = d;
  double hi = d > 0.0 ? 2.0 * d : 1.0;
  constexpr double kGuard = 0x1p1000;
  while (u(hi) < y) {
    lo = hi;
    hi *= 2.0;
    if (hi > kGuard) throw SolverError("u stays below " + std::to_string(y) + " (unbounded-u bracket failed)");
  }
  for (int it = 0; it < kBisectMaxIter && hi - lo > kBisectRelTol * hi; ++it) {
    const double mid = lo + (hi - lo) / 2;
    if (u(mid) >= y)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

// Karp's D_r(x) on the recurrence's toll_eff and u. The general case is clamped
// to [0, 1]; `raw` keeps the unclamped value.
inline BoundValue d_r(const RecurrenceSpec& spec, double r, double x, Theorem theorem = Theorem::karp_unary) {
  if (std::isnan(x) || x < 0.0) throw DomainError("D_r evaluated at x < 0");
  const USolution u(spec);
  const double d = spec.terminal_d;
  if (r <= u(d)) return detail::make_bound(r, 1.0, CaseTag::r_le_ud, theorem);
  if (x <= d) return detail::make_bound(r, 0.0, CaseTag::below_d, theorem);
  const double ux = u(x);
  if (ux >= r) return detail::make_bound(r, 1.0, CaseTag::u_ge_r, theorem);

  const double a = spec.toll_eff(x);
  if (!(a > 0.0)) throw HypothesisError("zero toll above threshold at x = " + std::to_string(x));
  const double k = detail::snapped_ceil((r - ux) / a);
  const double y = r - a * k;
  // u'(u(x)) = x by definition of the inverse; avoids bisection noise and
  // lands exactly on the w-form when r = u(x) + w a(x).
  const double u_inv = std::abs(y - ux) <= kCeilSnap * std::max(1.0, std::abs(ux)) ? x : invert_u(spec, y);
  const double ratio = spec.shrink(x) / x;
  return detail::make_bound(r, detail::karp_term(ratio, k, x, u_inv), CaseTag::general, theorem);
}

namespace detail {

inline void require_kind(const RecurrenceSpec& s, Kind k, const char* op) {
  if (s.kind != k)
    throw HypothesisError(std::string(op) + " needs a " + std::string(to_string(k)) + " spec, got " +
                          std::string(to_string(s.kind)));
}

inline double require_g1(const RecurrenceSpec& s, double x) {
  const double g = s.g1_at(x);
  if (g < 1.0) throw HypothesisError("g1(x) < 1 at x = " + std::to_string(x));
  return g;
}

inline void require_w(std::int64_t w) {
  if (w < 1) throw HypothesisError("w must be a positive integer");
}

// Shared w-form: P[cost > u(x) + w a(x)] <= weight (m(x)/x)^w above d, and
// 0 at or below d where u bounds the terminal cost.
inline BoundValue w_form(const RecurrenceSpec& s, double x, std::int64_t w, double weight, double scale,
                         Theorem theorem) {
  require_w(w);
  const USolution u(s);
  const double threshold = scale * u(x) + static_cast<double>(w) * s.toll(x);
  if (x <= s.terminal_d) return make_bound(threshold, 0.0, CaseTag::below_d, theorem);
  if (!(s.toll_eff(x) > 0.0)) throw HypothesisError("zero toll above threshold at x = " + std::to_string(x));
  const double ratio = s.shrink(x) / x;
  const double raw = ratio <= 0.0 ? 0.0 : weight * std::pow(ratio, static_cast<double>(w));
  return make_bound(threshold, raw, CaseTag::simplified_w, theorem);
}

}  // namespace detail

// P[W(x) > u(x) + w a(x)] <= (m(x)/x)^w for a single recursive call.
inline BoundValue karp_unary_bound(const RecurrenceSpec& spec, double x, std::int64_t w) {
  detail::require_kind(spec, Kind::unary, "karp_unary_bound");
  return detail::w_form(spec, x, w, 1.0, 1.0, Theorem::karp_unary);
}

inline BoundValue span_bound(const RecurrenceSpec& spec, double r, double x) {
  detail::require_kind(spec, Kind::span, "span_bound");
  const double g1 = detail::require_g1(spec, x);
  BoundValue dr = d_r(spec, r, x, Theorem::span);
  return detail::make_bound(r, g1 * dr.raw, dr.case_tag, Theorem::span);
}

// g1(x) (m(x)/x)^w at threshold u(x) + w toll(x).
inline BoundValue span_bound_w(const RecurrenceSpec& spec, double x, std::int64_t w) {
  detail::require_kind(spec, Kind::span, "span_bound_w");
  const double g1 = detail::require_g1(spec, x);
  return detail::w_form(spec, x, w, g1, 1.0, Theorem::span);
}

// Work bound via H = W / g2: g1(x) D_{r/g2(x)}(x), with D built on toll/g2.
inline BoundValue work_bound(const RecurrenceSpec& spec, double r, double x) {
  detail::require_kind(spec, Kind::work, "work_bound");
  const double g1 = detail::require_g1(spec, x);
  const double g2 = spec.g2_at(x);
  BoundValue dr = d_r(spec, r / g2, x, Theorem::work);
  return detail::make_bound(r, g1 * dr.raw, dr.case_tag, Theorem::work);
}

// g1(x) (m(x)/x)^w at threshold g2(x) u(x) + w toll(x).
inline BoundValue work_bound_w(const RecurrenceSpec& spec, double x, std::int64_t w) {
  detail::require_kind(spec, Kind::work, "work_bound_w");
  const double g1 = detail::require_g1(spec, x);
  const double g2 = spec.g2_at(x);
  return detail::w_form(spec, x, w, g1, g2, Theorem::work);
}

// Dispatch on the recurrence kind: the theorem that applies at threshold r.
inline BoundValue bound_at_r(const RecurrenceSpec& spec, double r, double x) {
  switch (spec.kind) {
    case Kind::unary:
      return d_r(spec, r, x, Theorem::karp_unary);
    case Kind::span:
      return span_bound(spec, r, x);
    case Kind::work:
      return work_bound(spec, r, x);
  }
  throw HypothesisError("unknown kind");
}

inline BoundValue bound_at_w(const RecurrenceSpec& spec, double x, std::int64_t w) {
  switch (spec.kind) {
    case Kind::unary:
      return karp_unary_bound(spec, x, w);
    case Kind::span:
      return span_bound_w(spec, x, w);
    case Kind::work:
      return work_bound_w(spec, x, w);
  }
  throw HypothesisError("unknown kind");
}

// P[W >= (w + 1) E[W]] < e^{-w}.
inline BoundValue karp_expectation_bound(double expected_work, double w) {
  if (!(expected_work >= 0.0)) throw HypothesisError("expected work must be >= 0");
  if (!(w > 0.0)) throw HypothesisError("w must be > 0");
  const double raw = std::exp(-w);
  return detail::make_bound((w + 1.0) * expected_work, raw, CaseTag::simplified_w, Theorem::karp_expectation);
}

inline double harmonic(std::int64_t n) {
  double h = 0.0;
  for (std::int64_t i = n; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

// Expected comparisons of randomized quicksort on n distinct keys:
// 2((n+1)(H_n - 1) - (n - 1)).
inline double quicksort_expected_work(std::int64_t n) {
  if (n <= 1) return 0.0;
  const double nn = static_cast<double>(n);
  return 2.0 * ((nn + 1.0) * (harmonic(n) - 1.0) - (nn - 1.0));
}

// Quicksort work at w = ceil(k log_{8/7} n), set against the expectation bound.
struct KarpComparison {
  std::int64_t n = 0;
  std::int64_t k = 0;
  std::int64_t w = 0;
  BoundValue ours_w;              // work_bound_w at w
  double ours_threshold = 0.0;    // (k+1)(n log_{8/7} n + n)
  double ours_bound = 0.0;        // (1/n)^{k-1}
  double expected_work = 0.0;     // closed form
  BoundValue karp;                // (k+1) E[W], e^{-k}
  BoundValue karp_at_ours;        // expectation bound at ours_threshold
};

inline KarpComparison quicksort_karp_comparison(std::int64_t n, std::int64_t k) {
  if (n < 2) throw HypothesisError("comparison needs n >= 2");
  if (k < 1) throw HypothesisError("k must be a positive integer");
  KarpComparison c;
  c.n = n;
  c.k = k;
  const double nn = static_cast<double>(n);
  const double kk = static_cast<double>(k);
  const double log_n = std::log(nn) / std::log(8.0 / 7.0);
  c.w = static_cast<std::int64_t>(detail::snapped_ceil(kk * log_n));
  c.ours_w = work_bound_w(preset("quicksort-work"), nn, c.w);
  c.ours_threshold = (kk + 1.0) * (nn * log_n + nn);
  c.ours_bound = std::pow(1.0 / nn, kk - 1.0);
  c.expected_work = quicksort_expected_work(n);
  c.karp = karp_expectation_bound(c.expected_work, kk);
  c.karp_at_ours = karp_expectation_bound(c.expected_work, c.ours_threshold / c.expected_work - 1.0);
  return c;
}

}  // namespace prr
