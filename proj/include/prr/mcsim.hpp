#pragma once

// Executable random divide-and-conquer processes: Monte-Carlo trials, exact
// small-instance distributions, tail queries and split-law hypothesis checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "prr/error.hpp"
#include "prr/exprfn.hpp"
#include "prr/recspec.hpp"
#include "prr/rng.hpp"

namespace prr {

enum class Metric { work, span, height };

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::work:
      return "work";
    case Metric::span:
      return "span";
    case Metric::height:
      return "height";
  }
  return "?";
}

inline Metric metric_from_string(std::string_view s) {
  if (s == "work") return Metric::work;
  if (s == "span") return Metric::span;
  if (s == "height") return Metric::height;
  throw FormatError("unknown metric '" + std::string(s) + "'");
}

enum class SplitKind {
  uniform_pivot,  // children (k, n-1-k), k uniform on {0..n-1}
  uniform_child,  // one child of size uniform on {0..n-1}
  finite,         // user-listed outcomes, child sizes as functions of n
};

struct SplitOutcome {
  double prob = 0.0;
  std::vector<std::int64_t> children;
};

struct ProcessModel {
  struct FiniteOutcome {
    double prob = 0.0;
    std::vector<Expr> children;  // evaluated at x = n, then floored
  };

  std::string name;
  std::int64_t terminal = 1;  // work/span cost nothing at sizes <= terminal
  PiecewiseFn work_toll;
  PiecewiseFn span_toll;
  SplitKind split = SplitKind::uniform_pivot;
  std::vector<FiniteOutcome> finite;

  // Full split law at size n (n >= 1).
  std::vector<SplitOutcome> outcomes(std::int64_t n) const {
    std::vector<SplitOutcome> out;
    const double p = 1.0 / static_cast<double>(n);
    switch (split) {
      case SplitKind::uniform_pivot:
        for (std::int64_t k = 0; k < n; ++k) out.push_back({p, {k, n - 1 - k}});
        break;
      case SplitKind::uniform_child:
        for (std::int64_t k = 0; k < n; ++k) out.push_back({p, {k}});
        break;
      case SplitKind::finite:
        for (const auto& f : finite) out.push_back({f.prob, eval_children(f, n)});
        break;
    }
    return out;
  }

  std::vector<std::int64_t> sample(std::int64_t n, Stream& rng) const {
    switch (split) {
      case SplitKind::uniform_pivot: {
        auto k = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n)));
        return {k, n - 1 - k};
      }
      case SplitKind::uniform_child:
        return {static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n)))};
      case SplitKind::finite: {
        const double u = rng.uniform01();
        double acc = 0.0;
        for (const auto& f : finite) {
          acc += f.prob;
          if (u < acc) return eval_children(f, n);
        }
        return eval_children(finite.back(), n);
      }
    }
    throw ModelError("unknown split kind");
  }

  bool is_terminal(std::int64_t n, Metric m) const { return m == Metric::height ? n <= 0 : n <= terminal; }

  double toll(std::int64_t n, Metric m) const {
    switch (m) {
      case Metric::work:
        return work_toll(static_cast<double>(n));
      case Metric::span:
        return span_toll(static_cast<double>(n));
      case Metric::height:
        return 1.0;
    }
    return 0.0;
  }

 private:
  std::vector<std::int64_t> eval_children(const FiniteOutcome& f, std::int64_t n) const {
    std::vector<std::int64_t> c;
    for (const auto& e : f.children) c.push_back(static_cast<std::int64_t>(std::floor(e.eval(static_cast<double>(n)))));
    return c;
  }
};

inline bool combines_by_sum(Metric m) { return m == Metric::work; }

// Shipped models: "quicksort" (uniform pivot, n-1 comparisons, span toll
// log n), "bst" (same split law; height metric) and "unary-halving" (a
// single child uniform below n, unit toll).
inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"quicksort", "bst", "unary-halving"};
  return names;
}

inline ProcessModel make_model(std::string_view name, double span_log_base = 2.0) {
  ProcessModel m;
  m.name = std::string(name);
  m.terminal = 1;
  const std::string log_n = span_log_base == 2.0 ? "log2(x)" : "log(x, " + std::to_string(span_log_base) + ")";
  if (name == "quicksort" || name == "bst") {
    m.split = SplitKind::uniform_pivot;
    m.work_toll = detail::zero_then(1.0, "x - 1");
    m.span_toll = detail::zero_then(1.0, log_n);
  } else if (name == "unary-halving") {
    m.split = SplitKind::uniform_child;
    m.work_toll = detail::zero_then(1.0, "1");
    m.span_toll = detail::zero_then(1.0, "1");
  } else {
    throw FormatError("unknown model '" + std::string(name) + "'");
  }
  return m;
}

// The model and metric each recurrence preset describes.
inline std::pair<ProcessModel, Metric> model_for_preset(std::string_view preset_name, double span_log_base = 2.0) {
  if (preset_name == "quicksort-span") return {make_model("quicksort", span_log_base), Metric::span};
  if (preset_name == "quicksort-work") return {make_model("quicksort", span_log_base), Metric::work};
  if (preset_name == "bst-height") return {make_model("bst", span_log_base), Metric::height};
  if (preset_name == "unary-halving") return {make_model("unary-halving", span_log_base), Metric::work};
  throw FormatError("no process model for preset '" + std::string(preset_name) + "'");
}

// {"name": str, "terminal": int, "work_toll": fn, "span_toll": fn,
//  "split": "uniform-pivot" | "uniform-child" |
//           {"finite": [{"p": num, "children": ["expr", ...]}, ...]}}
inline ProcessModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("model must be a JSON object");
  ProcessModel m;
  m.name = j.value("name", std::string("custom"));
  m.terminal = j.value("terminal", std::int64_t{1});
  m.work_toll = j.contains("work_toll") ? piecewise_from_json(j.at("work_toll")) : PiecewiseFn();
  m.span_toll = j.contains("span_toll") ? piecewise_from_json(j.at("span_toll")) : PiecewiseFn();
  if (!j.contains("split")) throw FormatError("model is missing \"split\"");
  const auto& s = j.at("split");
  if (s.is_string()) {
    const auto v = s.get<std::string>();
    if (v == "uniform-pivot")
      m.split = SplitKind::uniform_pivot;
    else if (v == "uniform-child")
      m.split = SplitKind::uniform_child;
    else
      throw FormatError("unknown split law '" + v + "'");
  } else if (s.is_object() && s.contains("finite")) {
    m.split = SplitKind::finite;
    double total = 0.0;
    for (const auto& o : s.at("finite")) {
      ProcessModel::FiniteOutcome f;
      f.prob = o.at("p").get<double>();
      if (!(f.prob >= 0.0)) throw FormatError("outcome probability must be >= 0");
      for (const auto& c : o.at("children")) f.children.push_back(parse_expr(c.get<std::string>()));
      total += f.prob;
      m.finite.push_back(std::move(f));
    }
    if (m.finite.empty() || std::abs(total - 1.0) > 1e-9)
      throw FormatError("finite split probabilities must sum to 1");
  } else {
    throw FormatError("\"split\" must be a law name or {\"finite\": [...]}");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Distributions

enum class DistKind { empirical, exact };

struct DistSummary {
  DistKind kind = DistKind::empirical;
  std::vector<double> samples;                        // empirical, sorted
  std::vector<std::pair<double, double>> support;     // exact: (value, prob), sorted by value
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;

  double mean() const {
    if (kind == DistKind::exact) {
      double m = 0.0;
      for (auto [v, p] : support) m += v * p;
      return m;
    }
    if (samples.empty()) return 0.0;
    return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  }
  double min() const { return kind == DistKind::exact ? support.front().first : samples.front(); }
  double max() const { return kind == DistKind::exact ? support.back().first : samples.back(); }

  // Empirical quantile (nearest rank); exact: smallest v with CDF >= q.
  double quantile(double q) const {
    if (kind == DistKind::exact) {
      double acc = 0.0;
      for (auto [v, p] : support) {
        acc += p;
        if (acc >= q - 1e-12) return v;
      }
      return support.back().first;
    }
    const auto n = samples.size();
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    idx = std::clamp<std::size_t>(idx, 1, n);
    return samples[idx - 1];
  }
};

namespace detail {

inline void normalize_support(std::vector<std::pair<double, double>>& s) {
  std::sort(s.begin(), s.end());
  std::vector<std::pair<double, double>> out;
  for (auto [v, p] : s) {
    if (!out.empty() && std::abs(v - out.back().first) <= 1e-9 * std::max(1.0, std::abs(v)))
      out.back().second += p;
    else
      out.emplace_back(v, p);
  }
  s = std::move(out);
}

inline void check_children(const std::vector<std::int64_t>& children, std::int64_t n) {
  for (auto c : children)
    if (c < 0 || c >= n)
      throw ModelError("child size " + std::to_string(c) + " outside [0, " + std::to_string(n) + ")");
}

class TrialRunner {
 public:
  TrialRunner(const ProcessModel& model, Metric metric, std::int64_t n) : model_(model), metric_(metric) {
    depth_cap_ = n + 64;
    tolls_.resize(static_cast<std::size_t>(n) + 1);
    for (std::int64_t s = 0; s <= n; ++s)
      tolls_[static_cast<std::size_t>(s)] = model.is_terminal(s, metric) ? 0.0 : model.toll(s, metric);
  }

  double run(std::int64_t n, Stream& rng) const { return cost(n, rng, 0); }

 private:
  double cost(std::int64_t n, Stream& rng, std::int64_t depth) const {
    if (model_.is_terminal(n, metric_)) return 0.0;
    if (depth > depth_cap_) throw ModelError("recursion depth guard exceeded; model does not shrink");
    auto children = model_.sample(n, rng);
    check_children(children, n);
    double acc = 0.0;
    for (auto c : children) {
      const double v = cost(c, rng, depth + 1);
      acc = combines_by_sum(metric_) ? acc + v : std::max(acc, v);
    }
    return tolls_[static_cast<std::size_t>(n)] + acc;
  }

  const ProcessModel& model_;
  Metric metric_;
  std::int64_t depth_cap_ = 0;
  std::vector<double> tolls_;
};

}  // namespace detail

// Empirical distribution of `metric` over `trials` independent runs. Trial i
// draws from Stream(seed, i); output is identical for any worker count.
inline DistSummary run_trials(const ProcessModel& model, std::int64_t n, Metric metric, std::uint64_t trials,
                              std::uint64_t seed, unsigned workers = 1) {
  if (trials < 1) throw ModelError("trials must be >= 1");
  if (n < 0) throw ModelError("size must be >= 0");
  DistSummary out;
  out.kind = DistKind::empirical;
  out.trials = trials;
  out.seed = seed;
  out.samples.assign(trials, 0.0);
  const detail::TrialRunner runner(model, metric, n);

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::min<std::uint64_t>(trials, 1024))));
  auto work = [&](std::uint64_t begin, std::uint64_t end, std::exception_ptr& err) {
    try {
      for (std::uint64_t i = begin; i < end; ++i) {
        Stream rng(seed, i);
        out.samples[i] = runner.run(n, rng);
      }
    } catch (...) {
      err = std::current_exception();
    }
  };
  std::vector<std::exception_ptr> errors(workers);
  if (workers == 1) {
    work(0, trials, errors[0]);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (trials + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t b = std::min<std::uint64_t>(trials, w * chunk);
      const std::uint64_t e = std::min<std::uint64_t>(trials, b + chunk);
      pool.emplace_back(work, b, e, std::ref(errors[w]));
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::sort(out.samples.begin(), out.samples.end());
  return out;
}

inline constexpr std::int64_t kExactCap = 12;

// Exact distribution by enumerating the split law at every level. Children
// are independent, so each size's distribution is computed once and reused.
inline DistSummary exact_dist(const ProcessModel& model, std::int64_t n, Metric metric) {
  if (n > kExactCap) throw ModelError("exact enumeration is capped at n = " + std::to_string(kExactCap));
  if (n < 0) throw ModelError("size must be >= 0");
  using Support = std::vector<std::pair<double, double>>;
  std::vector<std::optional<Support>> memo(static_cast<std::size_t>(n) + 1);

  auto dist = [&](auto&& self, std::int64_t s) -> const Support& {
    auto& slot = memo[static_cast<std::size_t>(s)];
    if (slot) return *slot;
    Support res;
    if (model.is_terminal(s, metric)) {
      res.emplace_back(0.0, 1.0);
    } else {
      const double toll = model.toll(s, metric);
      for (const auto& o : model.outcomes(s)) {
        if (o.prob == 0.0) continue;
        detail::check_children(o.children, s);
        Support acc{{0.0, 1.0}};
        for (auto c : o.children) {
          const Support& cd = self(self, c);
          Support next;
          for (auto [v1, p1] : acc)
            for (auto [v2, p2] : cd)
              next.emplace_back(combines_by_sum(metric) ? v1 + v2 : std::max(v1, v2), p1 * p2);
          detail::normalize_support(next);
          acc = std::move(next);
        }
        for (auto [v, p] : acc) res.emplace_back(toll + v, o.prob * p);
      }
      detail::normalize_support(res);
    }
    slot = std::move(res);
    return *slot;
  };

  DistSummary out;
  out.kind = DistKind::exact;
  out.support = dist(dist, n);
  return out;
}

struct TailEstimate {
  double p = 0.0;         // P[X > r]
  double ci_upper = 0.0;  // one-sided 99% Wilson upper bound (== p when exact)
};

// One-sided 99% normal quantile.
inline constexpr double kZ99 = 2.3263478740408408;

inline double wilson_upper(std::uint64_t successes, std::uint64_t trials, double z = kZ99) {
  if (trials == 0) return 1.0;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = p + z2 / (2 * n);
  const double spread = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return std::min(1.0, (centre + spread) / (1 + z2 / n));
}

inline TailEstimate tail_prob(const DistSummary& dist, double r) {
  TailEstimate t;
  if (dist.kind == DistKind::exact) {
    for (auto [v, p] : dist.support)
      if (v > r) t.p += p;
    t.p = std::clamp(t.p, 0.0, 1.0);
    t.ci_upper = t.p;
    return t;
  }
  const auto above = static_cast<std::uint64_t>(dist.samples.end() -
                                                std::upper_bound(dist.samples.begin(), dist.samples.end(), r));
  t.p = dist.samples.empty() ? 0.0 : static_cast<double>(above) / static_cast<double>(dist.samples.size());
  t.ci_upper = wilson_upper(above, dist.samples.size());
  return t;
}

// E[max child size] under the split law; 0 at terminal sizes.
inline double split_max_expectation(const ProcessModel& model, std::int64_t n) {
  if (n <= model.terminal || n <= 0) return 0.0;
  double e = 0.0;
  for (const auto& o : model.outcomes(n)) {
    std::int64_t mx = 0;
    for (auto c : o.children) mx = std::max(mx, c);
    e += o.prob * static_cast<double>(mx);
  }
  return e;
}

struct SubadditivityReport {
  std::uint64_t draws = 0;
  std::uint64_t violations = 0;
  std::vector<std::int64_t> witness;  // first violating split
  double witness_sum = 0.0;           // sum of g over the witness children
  double parent_g = 0.0;              // g(n)
};

// Samples splits of size n and counts draws with sum g(child) > g(n).
inline SubadditivityReport g_subadditivity_check(const ProcessModel& model, const PiecewiseFn& g, std::int64_t n,
                                                 std::uint64_t draws, std::uint64_t seed) {
  SubadditivityReport rep;
  if (n <= 0) return rep;
  rep.parent_g = g(static_cast<double>(n));
  for (std::uint64_t i = 0; i < draws; ++i) {
    Stream rng(seed, i);
    auto children = model.sample(n, rng);
    double sum = 0.0;
    for (auto c : children) sum += g(static_cast<double>(c));
    ++rep.draws;
    if (sum > rep.parent_g + kValidateRelTol * std::max(1.0, std::abs(rep.parent_g))) {
      if (rep.violations++ == 0) {
        rep.witness = children;
        rep.witness_sum = sum;
      }
    }
  }
  return rep;
}

}  // namespace prr
