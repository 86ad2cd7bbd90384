#pragma once

// Recurrence descriptions fed to the bound engine and the simulator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "prr/error.hpp"
#include "prr/exprfn.hpp"

namespace prr {

enum class Kind { unary, span, work };

inline std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::unary:
      return "unary";
    case Kind::span:
      return "span";
    case Kind::work:
      return "work";
  }
  return "?";
}

inline Kind kind_from_string(std::string_view s) {
  if (s == "unary") return Kind::unary;
  if (s == "span") return Kind::span;
  if (s == "work") return Kind::work;
  throw FormatError("unknown recurrence kind '" + std::string(s) + "'");
}

struct RecurrenceSpec {
  std::string name;
  Kind kind = Kind::unary;
  PiecewiseFn toll;    // per-level cost; zero on [0, d]
  PiecewiseFn shrink;  // bound on the expected (largest) child size
  double terminal_d = 0.0;
  std::optional<PiecewiseFn> g1;
  std::optional<PiecewiseFn> g2;
  std::optional<PiecewiseFn> u;  // analytic companion solution above d
  double u_base = 0.0;           // value of u on [0, d]

  // The toll seen by the companion recurrence: toll/g2 for work, toll otherwise.
  double toll_eff(double x) const {
    const double a = toll(x);
    if (kind != Kind::work) return a;
    const double g = g2_at(x);
    return a / g;
  }

  double g1_at(double x) const {
    if (!g1) throw HypothesisError("spec '" + name + "' has no g1");
    return (*g1)(x);
  }

  double g2_at(double x) const {
    if (!g2) throw HypothesisError("spec '" + name + "' has no g2");
    const double g = (*g2)(x);
    if (!(g > 0.0)) throw HypothesisError("g2(x) <= 0 at x = " + std::to_string(x));
    return g;
  }

  // Analytic u with the constant u_base on [0, d].
  double u_analytic(double x) const {
    if (!u) throw SolverError("spec '" + name + "' has no analytic u");
    return x <= terminal_d ? u_base : (*u)(x);
  }
};

inline constexpr std::size_t kSolveIterCap = 1'000'000;

// Minimal solution of u(x) = toll_eff(x) + u(shrink(x)), u = u_base on [0, d],
// obtained by unrolling the recurrence until the size drops to d.
inline double iterate_u(const RecurrenceSpec& s, double x, std::size_t cap = kSolveIterCap) {
  if (std::isnan(x) || x < 0.0) throw DomainError("u evaluated at x < 0");
  double acc = 0.0;
  std::size_t steps = 0;
  while (x > s.terminal_d) {
    if (++steps > cap) throw SolverError("recurrence does not contract below d");
    acc += s.toll_eff(x);
    x = s.shrink(x);
  }
  return acc + s.u_base;
}

// u as used by the bound engine: analytic when supplied, iterated otherwise.
inline double u_of(const RecurrenceSpec& s, double x) {
  return s.u ? s.u_analytic(x) : iterate_u(s, x);
}

// ---------------------------------------------------------------------------
// Validation

struct Check {
  std::string name;
  bool passed = true;
  bool warning = false;  // advisory only; never blocks acceptance
  std::string witness;
};

struct ValidationReport {
  std::vector<Check> checks;

  bool accepted() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const Check& c) { return !c.passed && !c.warning; });
  }
  std::vector<Check> failures() const {
    std::vector<Check> out;
    for (const auto& c : checks)
      if (!c.passed && !c.warning) out.push_back(c);
    return out;
  }
  std::vector<Check> warnings() const {
    std::vector<Check> out;
    for (const auto& c : checks)
      if (!c.passed && c.warning) out.push_back(c);
    return out;
  }
  const Check* find(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

namespace detail {

inline std::string fmt_point(double x, double v) {
  std::ostringstream os;
  os.precision(12);
  os << "x=" << x << " value=" << v;
  return os.str();
}

inline std::string fmt_pair(double x1, double v1, double x2, double v2) {
  return fmt_point(x1, v1) + " then " + fmt_point(x2, v2);
}

inline double validate_hi(const RecurrenceSpec& s) { return std::max(1e6, s.terminal_d * 1e3 + 1.0); }

inline double just_above(double d) { return std::nextafter(d, std::numeric_limits<double>::infinity()); }

inline std::vector<double> all_breakpoints(const RecurrenceSpec& s) {
  std::vector<double> b;
  auto add = [&](const std::optional<PiecewiseFn>& f) {
    if (!f) return;
    for (double v : f->breakpoints()) b.push_back(v);
  };
  add(s.toll);
  add(s.shrink);
  add(s.g1);
  add(s.g2);
  add(s.u);
  b.push_back(s.terminal_d);
  return b;
}

// Sampled check over a wrapped function, reusing check_monotone's grid logic.
template <typename F>
Check monotone_check(std::string name, F&& f, double lo, double hi, const std::vector<double>& bps,
                     MonotoneTarget target = MonotoneTarget::value) {
  Check c;
  c.name = std::move(name);
  auto grid = sample_grid(lo, hi, kDefaultSamples, bps);
  bool have_prev = false;
  double px = 0.0, pv = 0.0;
  for (double x : grid) {
    if (target == MonotoneTarget::ratio_to_x && x <= 0.0) continue;
    double v = 0.0;
    try {
      v = f(x);
    } catch (const Error& e) {
      c.passed = false;
      c.witness = "x=" + std::to_string(x) + ": " + e.what();
      return c;
    }
    if (target == MonotoneTarget::ratio_to_x) v /= x;
    if (have_prev) {
      const double tol = kValidateRelTol * std::max(std::abs(pv), std::abs(v));
      if (v < pv - tol) {
        c.passed = false;
        c.witness = fmt_pair(px, pv, x, v);
        return c;
      }
    }
    have_prev = true;
    px = x;
    pv = v;
  }
  return c;
}

template <typename P>
Check pointwise_check(std::string name, P&& pred, const std::vector<double>& grid) {
  Check c;
  c.name = std::move(name);
  for (double x : grid) {
    try {
      if (auto bad = pred(x)) {
        c.passed = false;
        c.witness = fmt_point(x, *bad);
        return c;
      }
    } catch (const Error& e) {
      c.passed = false;
      c.witness = "x=" + std::to_string(x) + ": " + e.what();
      return c;
    }
  }
  return c;
}

inline bool near_zero(double v) { return std::abs(v) <= 1e-12; }

// Looks for jumps of u on (d, hi]: wherever consecutive samples differ by
// more than 1e-3 relative, bisect towards the larger change and see whether
// the difference survives at floating-point resolution.
template <typename U>
Check continuity_check(U&& uf, const std::vector<double>& grid) {
  Check c;
  c.name = "u continuous above d";
  c.warning = true;
  constexpr double kJump = 1e-3;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double lo = grid[i - 1], hi = grid[i];
    double ulo = uf(lo), uhi = uf(hi);
    auto scale = [&](double v) { return kJump * std::max(1.0, std::abs(v)); };
    if (std::abs(uhi - ulo) <= scale(ulo)) continue;
    for (int it = 0; it < 200 && std::nextafter(lo, hi) < hi; ++it) {
      const double mid = lo + (hi - lo) / 2;
      const double um = uf(mid);
      if (std::abs(um - ulo) >= std::abs(uhi - um)) {
        hi = mid;
        uhi = um;
      } else {
        lo = mid;
        ulo = um;
      }
    }
    if (std::abs(uhi - ulo) > scale(ulo)) {
      c.passed = false;
      c.witness = "jump near x=" + std::to_string(hi) + " from " + std::to_string(ulo) + " to " +
                  std::to_string(uhi) + "; supply a continuous analytic u for general-r bounds";
      return c;
    }
  }
  return c;
}

}  // namespace detail

inline ValidationReport validate_spec(const RecurrenceSpec& s) {
  using namespace detail;
  ValidationReport rep;
  const double d = s.terminal_d;
  const double hi = validate_hi(s);
  const double above = just_above(d);
  const auto bps = all_breakpoints(s);
  const auto low_grid = sample_grid(0.0, d, kDefaultSamples, bps);
  const auto high_grid = sample_grid(above, hi, kDefaultSamples, bps);

  if (!(d >= 0.0) || !std::isfinite(d)) {
    rep.checks.push_back({"terminal d finite and non-negative", false, false, "d=" + std::to_string(d)});
    return rep;
  }

  rep.checks.push_back(pointwise_check(
      "toll zero on [0,d]",
      [&](double x) -> std::optional<double> {
        double v = s.toll(x);
        return near_zero(v) ? std::nullopt : std::optional<double>(v);
      },
      low_grid));
  rep.checks.push_back(monotone_check("toll monotone above d", [&](double x) { return s.toll(x); }, above,
                                      hi, bps));
  rep.checks.push_back(pointwise_check(
      "shrink within [0,x]",
      [&](double x) -> std::optional<double> {
        double m = s.shrink(x);
        bool ok = m >= 0.0 && m <= x * (1 + kValidateRelTol);
        return ok ? std::nullopt : std::optional<double>(m);
      },
      sample_grid(0.0, hi, kDefaultSamples, bps)));
  rep.checks.push_back(monotone_check("shrink ratio non-decreasing", [&](double x) { return s.shrink(x); },
                                      0.0, hi, bps, MonotoneTarget::ratio_to_x));

  auto g_checks = [&](const std::optional<PiecewiseFn>& g, const char* label, bool need_ge_one) {
    const std::string l = label;
    if (!g) {
      rep.checks.push_back({l + " present", false, false, "kind " + std::string(to_string(s.kind)) + " requires " + l});
      return;
    }
    rep.checks.push_back(monotone_check(l + " monotone", [&](double x) { return (*g)(x); }, 0.0, hi, bps));
    if (need_ge_one) {
      rep.checks.push_back(pointwise_check(
          l + " >= 1 above d",
          [&](double x) -> std::optional<double> {
            double v = (*g)(x);
            return v >= 1.0 - kValidateRelTol ? std::nullopt : std::optional<double>(v);
          },
          high_grid));
    } else {
      rep.checks.push_back(pointwise_check(
          l + " positive",
          [&](double x) -> std::optional<double> {
            double v = (*g)(x);
            return v > 0.0 ? std::nullopt : std::optional<double>(v);
          },
          sample_grid(0.0, hi, kDefaultSamples, bps)));
    }
  };

  if (s.kind == Kind::span || s.kind == Kind::work) g_checks(s.g1, "g1", true);
  if (s.kind == Kind::work) {
    g_checks(s.g2, "g2", false);
    if (s.g2) {
      rep.checks.push_back(pointwise_check(
          "toll/g2 zero on [0,d]",
          [&](double x) -> std::optional<double> {
            double v = s.toll_eff(x);
            return near_zero(v) ? std::nullopt : std::optional<double>(v);
          },
          low_grid));
      rep.checks.push_back(monotone_check("toll/g2 monotone above d", [&](double x) { return s.toll_eff(x); },
                                          above, hi, bps));
    }
  }
  if (!rep.accepted()) return rep;  // u checks need a well-formed toll_eff

  auto u_eff = [&](double x) { return u_of(s, x); };
  if (s.u) {
    rep.checks.push_back(monotone_check("u monotone", u_eff, 0.0, hi, bps));
    rep.checks.push_back(pointwise_check(
        "u recurrence inequality",
        [&](double x) -> std::optional<double> {
          const double lhs = u_eff(x);
          const double rhs = s.toll_eff(x) + u_eff(s.shrink(x));
          const double tol = kValidateRelTol * std::max({1.0, std::abs(lhs), std::abs(rhs)});
          return lhs >= rhs - tol ? std::nullopt : std::optional<double>(lhs - rhs);
        },
        high_grid));
  } else {
    rep.checks.push_back(pointwise_check(
        "recurrence contracts below d",
        [&](double x) -> std::optional<double> {
          iterate_u(s, x);
          return std::nullopt;
        },
        high_grid));
    if (!rep.accepted()) return rep;
  }
  rep.checks.push_back(continuity_check(u_eff, high_grid));
  return rep;
}

// ---------------------------------------------------------------------------
// Presets

struct PresetOptions {
  double span_log_base = 2.0;  // base of the quicksort span toll log|l|
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"quicksort-span", "quicksort-work", "bst-height",
                                                 "unary-halving"};
  return names;
}

namespace detail {

inline PiecewiseFn zero_then(double d, std::string_view above) {
  return PiecewiseFn({{0.0, true, parse_expr("0")}, {d, false, parse_expr(above)}});
}

// 0 below 8/7, 7x/8 from there on.
inline PiecewiseFn seven_eighths_shrink() {
  return PiecewiseFn({{0.0, false, parse_expr("0")}, {8.0 / 7.0, false, parse_expr("7*x/8")}});
}

}  // namespace detail

inline RecurrenceSpec preset(std::string_view name, const PresetOptions& opt = {}) {
  using detail::seven_eighths_shrink;
  using detail::zero_then;
  RecurrenceSpec s;
  s.name = std::string(name);
  s.terminal_d = 1.0;
  s.u_base = 0.0;
  if (name == "quicksort-span") {
    s.kind = Kind::span;
    std::string toll = opt.span_log_base == 2.0 ? "log2(x)" : "log(x, " + std::to_string(opt.span_log_base) + ")";
    s.toll = zero_then(1.0, toll);
    s.shrink = seven_eighths_shrink();
    s.g1 = PiecewiseFn::parse("x");
    s.u = PiecewiseFn::parse("(log(x, 8/7) + 1)^2");
  } else if (name == "quicksort-work") {
    s.kind = Kind::work;
    s.toll = zero_then(1.0, "x - 1");
    s.shrink = seven_eighths_shrink();
    s.g1 = PiecewiseFn::parse("x");
    s.g2 = PiecewiseFn(
        {{0.0, true, parse_expr("1/2")}, {1.0, false, parse_expr("1")}, {2.0, false, parse_expr("x - 1")}});
    s.u = PiecewiseFn::parse("log(x, 8/7) + 1");
  } else if (name == "bst-height") {
    s.kind = Kind::span;
    s.toll = zero_then(1.0, "1");
    s.shrink = seven_eighths_shrink();
    s.g1 = PiecewiseFn::parse("x");
    s.u = PiecewiseFn::parse("log(x, 8/7) + 1");
  } else if (name == "unary-halving") {
    s.kind = Kind::unary;
    s.toll = zero_then(1.0, "1");
    s.shrink = PiecewiseFn::parse("x/2");
  } else {
    throw FormatError("unknown preset '" + std::string(name) + "'");
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON spec format
//
//   {"name": str, "kind": "work"|"span"|"unary",
//    "toll": [[lo, closed_hi?, "expr"], ...] | "expr", "shrink": ..., "d": num,
//    "g1": ..., "g2": ..., "u": ..., "u_base": num}
//
// Segment lower bounds may be numbers or constant expressions ("8/7").

namespace detail {

inline double json_constant(const nlohmann::json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    Expr e = parse_expr(j.get<std::string>());
    if (e.uses_var()) throw FormatError(std::string(what) + " must be a constant expression");
    return e.eval(0.0);
  }
  throw FormatError(std::string(what) + " must be a number or constant expression");
}

}  // namespace detail

inline PiecewiseFn piecewise_from_json(const nlohmann::json& j) {
  if (j.is_string()) return PiecewiseFn::parse(j.get<std::string>());
  if (!j.is_array()) throw FormatError("function must be an expression string or a segment list");
  std::vector<PiecewiseFn::Segment> segs;
  for (const auto& seg : j) {
    if (!seg.is_array() || seg.size() < 2 || seg.size() > 3)
      throw FormatError("segment must be [lo, closed_hi?, \"expr\"]");
    PiecewiseFn::Segment s;
    s.lo = detail::json_constant(seg[0], "segment lower bound");
    if (seg.size() == 3) {
      if (!seg[1].is_boolean()) throw FormatError("closed_hi flag must be a boolean");
      s.closed_hi = seg[1].get<bool>();
    }
    if (!seg.back().is_string()) throw FormatError("segment expression must be a string");
    s.expr = parse_expr(seg.back().get<std::string>());
    segs.push_back(std::move(s));
  }
  return PiecewiseFn(std::move(segs));
}

inline nlohmann::json piecewise_to_json(const PiecewiseFn& f) {
  const auto& segs = f.segments();
  if (segs.size() == 1 && !segs[0].closed_hi) return segs[0].expr.str();
  auto arr = nlohmann::json::array();
  for (const auto& s : segs) arr.push_back({s.lo, s.closed_hi, s.expr.str()});
  return arr;
}

inline RecurrenceSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("spec must be a JSON object");
  auto req = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw FormatError(std::string("spec is missing \"") + key + "\"");
    return j.at(key);
  };
  RecurrenceSpec s;
  s.name = j.value("name", std::string("unnamed"));
  const auto& kind = req("kind");
  if (!kind.is_string()) throw FormatError("\"kind\" must be a string");
  s.kind = kind_from_string(kind.get<std::string>());
  s.toll = piecewise_from_json(req("toll"));
  s.shrink = piecewise_from_json(req("shrink"));
  s.terminal_d = detail::json_constant(req("d"), "d");
  if (j.contains("g1")) s.g1 = piecewise_from_json(j.at("g1"));
  if (j.contains("g2")) s.g2 = piecewise_from_json(j.at("g2"));
  if (j.contains("u")) s.u = piecewise_from_json(j.at("u"));
  if (j.contains("u_base")) s.u_base = detail::json_constant(j.at("u_base"), "u_base");
  return s;
}

inline nlohmann::json spec_to_json(const RecurrenceSpec& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["kind"] = std::string(to_string(s.kind));
  j["toll"] = piecewise_to_json(s.toll);
  j["shrink"] = piecewise_to_json(s.shrink);
  j["d"] = s.terminal_d;
  if (s.g1) j["g1"] = piecewise_to_json(*s.g1);
  if (s.g2) j["g2"] = piecewise_to_json(*s.g2);
  if (s.u) j["u"] = piecewise_to_json(*s.u);
  j["u_base"] = s.u_base;
  return j;
}

}  // namespace prr
