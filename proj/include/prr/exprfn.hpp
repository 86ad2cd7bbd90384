#pragma once

// Real-valued functions of one variable `x`: a tiny infix expression
// language plus piecewise definitions over [0, inf).
//
// Grammar (^ is right-associative and binds tightest; unary minus sits
// between ^ and * /):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'x' | func '(' expr (',' expr)* ')' | '(' expr ')'
//   func    := log(e, base) | log2(e) | ln(e) | ceil(e) | floor(e)
//            | max(e, e) | min(e, e) | sqrt(e)

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prr/error.hpp"

namespace prr {

enum class Op {
  Num,
  Var,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Log,  // log(e, base)
  Log2,
  Ln,
  Ceil,
  Floor,
  Max,
  Min,
  Sqrt,
};

namespace detail {

struct FuncInfo {
  std::string_view name;
  Op op;
  std::size_t arity;
};

inline constexpr FuncInfo kFuncs[] = {
    {"log", Op::Log, 2},     {"log2", Op::Log2, 1}, {"ln", Op::Ln, 1},
    {"ceil", Op::Ceil, 1},   {"floor", Op::Floor, 1}, {"max", Op::Max, 2},
    {"min", Op::Min, 2},     {"sqrt", Op::Sqrt, 1},
};

inline const FuncInfo* find_func(std::string_view name) {
  for (const auto& f : kFuncs)
    if (f.name == name) return &f;
  return nullptr;
}

inline const FuncInfo* find_func(Op op) {
  for (const auto& f : kFuncs)
    if (f.op == op) return &f;
  return nullptr;
}

}  // namespace detail

// Immutable expression tree. Copies share nodes.
class Expr {
 public:
  struct Node {
    Op op;
    double value = 0.0;  // Num only; always >= 0 (negation is a Neg node)
    std::vector<Expr> args;
  };

  Expr() : Expr(number(0.0)) {}

  static Expr number(double v) {
    if (!std::isfinite(v)) throw DomainError("non-finite literal");
    if (std::signbit(v) && v != 0.0) return unary(Op::Neg, number(-v));
    return Expr(std::make_shared<const Node>(Node{Op::Num, v == 0.0 ? 0.0 : v, {}}));
  }
  static Expr var() { return Expr(std::make_shared<const Node>(Node{Op::Var, 0.0, {}})); }
  static Expr unary(Op op, Expr a) {
    return Expr(std::make_shared<const Node>(Node{op, 0.0, {std::move(a)}}));
  }
  static Expr binary(Op op, Expr a, Expr b) {
    return Expr(std::make_shared<const Node>(Node{op, 0.0, {std::move(a), std::move(b)}}));
  }

  Op op() const { return node_->op; }
  double value() const { return node_->value; }
  const std::vector<Expr>& args() const { return node_->args; }

  bool uses_var() const {
    if (op() == Op::Var) return true;
    return std::any_of(args().begin(), args().end(), [](const Expr& e) { return e.uses_var(); });
  }

  double eval(double x) const;
  std::string str() const;

  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.op() != b.op() || a.args().size() != b.args().size()) return false;
    if (a.op() == Op::Num && a.value() != b.value()) return false;
    for (std::size_t i = 0; i < a.args().size(); ++i)
      if (!(a.args()[i] == b.args()[i])) return false;
    return true;
  }
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

namespace detail {

inline double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite result in ") + what);
  return v;
}

inline double eval_node(const Expr& e, double x) {
  const auto& a = e.args();
  switch (e.op()) {
    case Op::Num:
      return e.value();
    case Op::Var:
      return x;
    case Op::Neg:
      return -eval_node(a[0], x);
    case Op::Add:
      return checked(eval_node(a[0], x) + eval_node(a[1], x), "+");
    case Op::Sub:
      return checked(eval_node(a[0], x) - eval_node(a[1], x), "-");
    case Op::Mul:
      return checked(eval_node(a[0], x) * eval_node(a[1], x), "*");
    case Op::Div: {
      double num = eval_node(a[0], x);
      double den = eval_node(a[1], x);
      if (den == 0.0) throw DomainError("division by zero");
      return checked(num / den, "/");
    }
    case Op::Pow:
      return checked(std::pow(eval_node(a[0], x), eval_node(a[1], x)), "^");
    case Op::Log: {
      double v = eval_node(a[0], x);
      double base = eval_node(a[1], x);
      if (v <= 0.0) throw DomainError("log of non-positive value");
      if (base <= 0.0 || base == 1.0) throw DomainError("log base must be positive and != 1");
      return checked(std::log(v) / std::log(base), "log");
    }
    case Op::Log2: {
      double v = eval_node(a[0], x);
      if (v <= 0.0) throw DomainError("log2 of non-positive value");
      return std::log2(v);
    }
    case Op::Ln: {
      double v = eval_node(a[0], x);
      if (v <= 0.0) throw DomainError("ln of non-positive value");
      return std::log(v);
    }
    case Op::Ceil:
      return std::ceil(eval_node(a[0], x));
    case Op::Floor:
      return std::floor(eval_node(a[0], x));
    case Op::Max:
      return std::max(eval_node(a[0], x), eval_node(a[1], x));
    case Op::Min:
      return std::min(eval_node(a[0], x), eval_node(a[1], x));
    case Op::Sqrt: {
      double v = eval_node(a[0], x);
      if (v < 0.0) throw DomainError("sqrt of negative value");
      return std::sqrt(v);
    }
  }
  throw DomainError("corrupt expression");
}

// Binding strength used by the printer; mirrors the grammar levels.
inline int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    default:
      return 5;
  }
}

inline void print_node(const Expr& e, std::string& out);

inline void print_wrapped(const Expr& e, bool parens, std::string& out) {
  if (parens) out += '(';
  print_node(e, out);
  if (parens) out += ')';
}

inline void print_number(double v, std::string& out) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline void print_node(const Expr& e, std::string& out) {
  const auto& a = e.args();
  const int p = precedence(e.op());
  switch (e.op()) {
    case Op::Num:
      print_number(e.value(), out);
      return;
    case Op::Var:
      out += 'x';
      return;
    case Op::Neg:
      out += '-';
      print_wrapped(a[0], precedence(a[0].op()) < 3, out);
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const char* sym = e.op() == Op::Add ? " + " : e.op() == Op::Sub ? " - " : e.op() == Op::Mul ? " * " : " / ";
      print_wrapped(a[0], precedence(a[0].op()) < p, out);
      out += sym;
      print_wrapped(a[1], precedence(a[1].op()) <= p, out);
      return;
    }
    case Op::Pow:
      print_wrapped(a[0], precedence(a[0].op()) <= p, out);
      out += '^';
      print_wrapped(a[1], precedence(a[1].op()) < 3, out);
      return;
    default: {
      const FuncInfo* f = find_func(e.op());
      out += f->name;
      out += '(';
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) out += ", ";
        print_node(a[i], out);
      }
      out += ')';
      return;
    }
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("empty expression", pos_);
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      skip_ws();
      if (accept('+'))
        lhs = Expr::binary(Op::Add, lhs, parse_term());
      else if (accept('-'))
        lhs = Expr::binary(Op::Sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    for (;;) {
      skip_ws();
      if (accept('*'))
        lhs = Expr::binary(Op::Mul, lhs, parse_unary());
      else if (accept('/'))
        lhs = Expr::binary(Op::Div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  Expr parse_unary() {
    skip_ws();
    if (accept('-')) return Expr::unary(Op::Neg, parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    skip_ws();
    if (accept('^')) return Expr::binary(Op::Pow, base, parse_unary());
    return base;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    if (accept('(')) {
      Expr e = parse_expr();
      expect(')');
      return e;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_, ++n;
      return n;
    };
    std::size_t n = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) throw ParseError("malformed number", start);
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // not an exponent; leave 'e' for the caller
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_ || !std::isfinite(v))
      throw ParseError("malformed number", start);
    return Expr::number(v);
  }

  Expr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string_view name = text_.substr(start, pos_ - start);
    if (name == "x") return Expr::var();
    const FuncInfo* f = find_func(name);
    if (!f) throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    skip_ws();
    expect('(');
    std::vector<Expr> args;
    args.push_back(parse_expr());
    skip_ws();
    while (accept(',')) {
      args.push_back(parse_expr());
      skip_ws();
    }
    if (args.size() != f->arity)
      throw ParseError(std::string(f->name) + " expects " + std::to_string(f->arity) + " argument(s)", start);
    expect(')');
    return f->arity == 1 ? Expr::unary(f->op, args[0]) : Expr::binary(f->op, args[0], args[1]);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    skip_ws();
    if (!accept(c)) {
      if (pos_ == text_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline double Expr::eval(double x) const {
  if (std::isnan(x)) throw DomainError("x is NaN");
  return detail::checked(detail::eval_node(*this, x), "expression");
}

inline std::string Expr::str() const {
  std::string out;
  detail::print_node(*this, out);
  return out;
}

inline Expr parse_expr(std::string_view text) { return detail::Parser(text).parse(); }

// Ordered segments covering [0, inf). Segment i applies on [lo_i, lo_{i+1}),
// or on [lo_i, lo_{i+1}] when its upper bound is closed, in which case the
// next segment starts just above lo_{i+1}.
class PiecewiseFn {
 public:
  struct Segment {
    double lo = 0.0;
    bool closed_hi = false;
    Expr expr;
  };

  PiecewiseFn() : PiecewiseFn(Expr::number(0.0)) {}
  PiecewiseFn(Expr e) : segs_{Segment{0.0, false, std::move(e)}} {}  // NOLINT: implicit by intent
  explicit PiecewiseFn(std::vector<Segment> segs) : segs_(std::move(segs)) {
    if (segs_.empty()) throw FormatError("piecewise function needs at least one segment");
    if (segs_.front().lo != 0.0) throw FormatError("first segment must start at 0");
    for (std::size_t i = 1; i < segs_.size(); ++i) {
      if (!std::isfinite(segs_[i].lo) || !(segs_[i].lo > segs_[i - 1].lo))
        throw FormatError("segment lower bounds must be finite and strictly increasing");
    }
  }

  static PiecewiseFn parse(std::string_view text) { return PiecewiseFn(parse_expr(text)); }

  double operator()(double x) const { return eval(x); }

  double eval(double x) const {
    if (std::isnan(x) || x < 0.0) throw DomainError("piecewise function evaluated at x < 0");
    return segment_for(x).expr.eval(x);
  }

  const Segment& segment_for(double x) const {
    auto it = std::upper_bound(segs_.begin(), segs_.end(), x,
                               [](double v, const Segment& s) { return v < s.lo; });
    std::size_t i = static_cast<std::size_t>(it - segs_.begin()) - 1;
    if (i > 0 && x == segs_[i].lo && segs_[i - 1].closed_hi) --i;
    return segs_[i];
  }

  const std::vector<Segment>& segments() const { return segs_; }

  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < segs_.size(); ++i) out.push_back(segs_[i].lo);
    return out;
  }

  friend bool operator==(const PiecewiseFn& a, const PiecewiseFn& b) {
    if (a.segs_.size() != b.segs_.size()) return false;
    for (std::size_t i = 0; i < a.segs_.size(); ++i) {
      const auto& s = a.segs_[i];
      const auto& t = b.segs_[i];
      if (s.lo != t.lo || s.closed_hi != t.closed_hi || s.expr != t.expr) return false;
    }
    return true;
  }

 private:
  std::vector<Segment> segs_;
};

// Relative tolerance used by every sampled validator.
inline constexpr double kValidateRelTol = 1e-9;
inline constexpr std::size_t kDefaultSamples = 1024;

// `samples` log-spaced points in [lo, hi] plus each breakpoint inside the
// range and its immediate floating-point neighbours. Sorted, unique.
inline std::vector<double> sample_grid(double lo, double hi, std::size_t samples,
                                       const std::vector<double>& breakpoints = {}) {
  std::vector<double> pts;
  if (samples < 2) samples = 2;
  pts.push_back(lo);
  pts.push_back(hi);
  double start = lo > 0.0 ? lo : std::min(1e-6, hi * 1e-6);
  if (start < hi) {
    const double step = std::log(hi / start) / static_cast<double>(samples - 1);
    for (std::size_t i = 0; i < samples; ++i)
      pts.push_back(std::clamp(start * std::exp(step * static_cast<double>(i)), lo, hi));
  }
  const double inf = std::numeric_limits<double>::infinity();
  for (double b : breakpoints) {
    for (double v : {std::nextafter(b, -inf), b, std::nextafter(b, inf)})
      if (v >= lo && v <= hi) pts.push_back(v);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

enum class MonotoneTarget { value, ratio_to_x };

struct MonotoneReport {
  bool non_decreasing = true;
  std::size_t points = 0;
  // Witness when non_decreasing is false: f(x2) < f(x1) with x1 < x2.
  double x1 = 0.0, x2 = 0.0, v1 = 0.0, v2 = 0.0;
  std::string note;
};

// Sampled check that f (or f(x)/x) is non-decreasing on [lo, hi]. This is a
// spot check on a grid, not a proof.
inline MonotoneReport check_monotone(const PiecewiseFn& f, double lo, double hi,
                                     std::size_t samples = kDefaultSamples,
                                     MonotoneTarget target = MonotoneTarget::value) {
  MonotoneReport rep;
  auto grid = sample_grid(lo, hi, samples, f.breakpoints());
  std::optional<std::pair<double, double>> prev;
  for (double x : grid) {
    if (target == MonotoneTarget::ratio_to_x && x <= 0.0) continue;
    double v = 0.0;
    try {
      v = f(x);
    } catch (const DomainError& e) {
      rep.non_decreasing = false;
      rep.x1 = rep.x2 = x;
      rep.note = std::string("evaluation failed: ") + e.what();
      return rep;
    }
    if (target == MonotoneTarget::ratio_to_x) v /= x;
    ++rep.points;
    if (prev) {
      const double tol = kValidateRelTol * std::max(std::abs(prev->second), std::abs(v));
      if (v < prev->second - tol) {
        rep.non_decreasing = false;
        rep.x1 = prev->first;
        rep.v1 = prev->second;
        rep.x2 = x;
        rep.v2 = v;
        return rep;
      }
    }
    prev = {x, v};
  }
  return rep;
}

}  // namespace prr
