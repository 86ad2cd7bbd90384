#pragma once

// Command-line front end. `dispatch` takes argv minus the program name and
// returns the process exit code: 0 success, 1 validation or hypothesis
// failure, 2 usage or I/O error.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "prr/bounds.hpp"
#include "prr/error.hpp"
#include "prr/mcsim.hpp"
#include "prr/recspec.hpp"
#include "prr/report.hpp"

namespace prr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;

// Environment variable naming the directory `compare` writes to when --out
// is not given.
inline constexpr const char* kOutDirEnv = "PRR_OUT_DIR";

namespace detail {

// Usage / I/O problems map to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

struct SpecSource {
  std::string spec_file;
  std::string preset_name;
  double log_base = 2.0;

  void add_to(CLI::App* cmd) {
    auto* f = cmd->add_option("--spec", spec_file, "recurrence spec JSON file");
    auto* p = cmd->add_option("--preset", preset_name, "shipped preset name");
    f->excludes(p);
    cmd->add_option("--log-base", log_base, "base of the quicksort span toll (default 2)");
  }

  RecurrenceSpec load() const {
    if (!preset_name.empty()) return preset(preset_name, PresetOptions{log_base});
    if (!spec_file.empty()) return spec_from_json(read_json_file(spec_file));
    throw UsageError("one of --spec or --preset is required");
  }
};

struct ModelSource {
  std::string model;
  std::string metric;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--model", model, "process model name or model JSON file");
    cmd->add_option("--metric", metric, "work | span | height");
  }

  // `kind` picks the default metric; absent when no spec was given.
  std::pair<ProcessModel, Metric> load(const SpecSource& src, std::optional<Kind> kind) const {
    std::optional<std::pair<ProcessModel, Metric>> chosen;
    if (model.empty()) {
      if (src.preset_name.empty()) throw UsageError("--model is required unless --preset names a shipped process");
      chosen = model_for_preset(src.preset_name, src.log_base);
    } else {
      bool known = std::find(model_names().begin(), model_names().end(), model) != model_names().end();
      ProcessModel m = known ? make_model(model, src.log_base) : model_from_json(read_json_file(model));
      Metric def = kind == Kind::span ? Metric::span : Metric::work;
      if (model == "bst") def = Metric::height;
      chosen.emplace(std::move(m), def);
    }
    if (!metric.empty()) chosen->second = metric_from_string(metric);
    return *chosen;
  }
};

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void print_bound(std::ostream& out, const BoundValue& b) {
  out << "theorem: " << to_string(b.theorem) << '\n'
      << "case: " << to_string(b.case_tag) << '\n'
      << "threshold: " << fmt12(b.threshold_r) << '\n'
      << "bound: " << fmt12(b.bound) << '\n';
  if (b.raw > 1.0) out << "raw_bound: " << fmt12(b.raw) << " (vacuous, clamped to 1)\n";
}

inline void print_validation(std::ostream& out, const ValidationReport& rep) {
  for (const auto& c : rep.checks) {
    const char* tag = c.passed ? "PASS" : (c.warning ? "WARN" : "FAIL");
    out << tag << "  " << c.name;
    if (!c.passed) out << "  [" << c.witness << "]";
    out << '\n';
  }
  out << (rep.accepted() ? "accepted" : "rejected") << '\n';
}

inline void require_valid(std::ostream& err, const RecurrenceSpec& spec) {
  const auto rep = validate_spec(spec);
  if (!rep.accepted()) {
    print_validation(err, rep);
    throw HypothesisError("spec '" + spec.name + "' failed validation");
  }
}

}  // namespace detail

inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace detail;
  CLI::App app{"Tail bounds for probabilistic divide-and-conquer recurrences", "prr"};
  app.require_subcommand(1);

  // bound
  auto* bound = app.add_subcommand("bound", "evaluate a tail bound");
  SpecSource bound_src;
  bound_src.add_to(bound);
  double bound_x = 0.0;
  std::optional<std::int64_t> bound_w;
  std::optional<double> bound_r;
  bound->add_option("--x", bound_x, "problem size")->required();
  auto* wopt = bound->add_option("--w", bound_w, "integer w (threshold u(x) + w*toll(x))");
  auto* ropt = bound->add_option("--r", bound_r, "explicit threshold r");
  wopt->excludes(ropt);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run Monte-Carlo trials (or exact enumeration)");
  SpecSource sim_src;
  sim_src.add_to(simulate);
  ModelSource sim_model;
  sim_model.add_to(simulate);
  std::int64_t sim_n = 0;
  std::uint64_t sim_trials = 100000, sim_seed = 0;
  unsigned sim_workers = 1;
  bool sim_exact = false;
  std::vector<double> sim_r;
  simulate->add_option("--n", sim_n, "problem size")->required();
  simulate->add_option("--trials", sim_trials, "number of trials");
  simulate->add_option("--seed", sim_seed, "master seed")->required();
  simulate->add_option("--workers", sim_workers, "worker threads");
  simulate->add_flag("--exact", sim_exact, "exact enumeration instead of sampling (n <= 12)");
  simulate->add_option("--r", sim_r, "report P[X > r] for these thresholds");

  // compare
  auto* compare = app.add_subcommand("compare", "analytic bound vs. simulated tail for w = w-min..w-max");
  SpecSource cmp_src;
  cmp_src.add_to(compare);
  ModelSource cmp_model;
  cmp_model.add_to(compare);
  std::int64_t cmp_n = 0, cmp_wmin = 1, cmp_wmax = 20;
  std::uint64_t cmp_trials = 100000, cmp_seed = 0;
  unsigned cmp_workers = 1;
  std::string cmp_out, cmp_format, cmp_timestamp;
  compare->add_option("--n", cmp_n, "problem size")->required();
  compare->add_option("--w-min", cmp_wmin, "smallest w");
  compare->add_option("--w-max", cmp_wmax, "largest w");
  compare->add_option("--trials", cmp_trials, "number of trials");
  compare->add_option("--seed", cmp_seed, "master seed")->required();
  compare->add_option("--workers", cmp_workers, "worker threads");
  compare->add_option("--out", cmp_out, "output file (.csv or .json)");
  compare->add_option("--format", cmp_format, "csv | json (default: from --out extension)");
  compare->add_option("--timestamp", cmp_timestamp, "fixed metadata timestamp");

  // validate
  auto* validate = app.add_subcommand("validate", "check a spec against the theorem hypotheses");
  SpecSource val_src;
  val_src.add_to(validate);

  // presets
  auto* presets = app.add_subcommand("presets", "list shipped presets");

  // expected-work
  auto* expected = app.add_subcommand("expected-work", "closed-form expected quicksort comparisons");
  std::int64_t ew_n = 0;
  expected->add_option("--n", ew_n, "list length")->required();

  // karp-compare
  auto* karp = app.add_subcommand("karp-compare", "quicksort work bound vs. the expectation-based bound");
  std::int64_t kc_n = 0, kc_k = 0;
  karp->add_option("--n", kc_n, "list length")->required();
  karp->add_option("--k", kc_k, "exponent k (bound (1/n)^(k-1))")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*bound) {
      const RecurrenceSpec spec = bound_src.load();
      require_valid(err, spec);
      BoundValue b;
      if (bound_w)
        b = bound_at_w(spec, bound_x, *bound_w);
      else if (bound_r)
        b = bound_at_r(spec, *bound_r, bound_x);
      else
        throw UsageError("one of --w or --r is required");
      print_bound(out, b);
    } else if (*simulate) {
      std::optional<Kind> kind;
      if (!sim_src.preset_name.empty() || !sim_src.spec_file.empty()) kind = sim_src.load().kind;
      auto [model, metric] = sim_model.load(sim_src, kind);
      const DistSummary d = sim_exact ? exact_dist(model, sim_n, metric)
                                      : run_trials(model, sim_n, metric, sim_trials, sim_seed, sim_workers);
      out << "model: " << model.name << '\n'
          << "metric: " << to_string(metric) << '\n'
          << "n: " << sim_n << '\n'
          << "kind: " << (d.kind == DistKind::exact ? "exact" : "empirical") << '\n';
      if (d.kind == DistKind::empirical) out << "trials: " << d.trials << '\n' << "seed: " << d.seed << '\n';
      out << "mean: " << fmt12(d.mean()) << '\n'
          << "min: " << fmt12(d.min()) << '\n'
          << "median: " << fmt12(d.quantile(0.5)) << '\n'
          << "p99: " << fmt12(d.quantile(0.99)) << '\n'
          << "max: " << fmt12(d.max()) << '\n';
      for (double r : sim_r) {
        const auto t = tail_prob(d, r);
        out << "tail(" << fmt12(r) << "): " << fmt12(t.p) << " ci_upper " << fmt12(t.ci_upper) << '\n';
      }
      if (d.kind == DistKind::exact) {
        for (auto [v, p] : d.support) out << "  P[X=" << fmt12(v) << "] = " << fmt12(p) << '\n';
      }
    } else if (*compare) {
      const RecurrenceSpec spec = cmp_src.load();
      require_valid(err, spec);
      auto [model, metric] = cmp_model.load(cmp_src, spec.kind);
      if (cmp_wmin < 1 || cmp_wmax < cmp_wmin) throw UsageError("need 1 <= --w-min <= --w-max");
      CompareOptions opt;
      for (auto w = cmp_wmin; w <= cmp_wmax; ++w) opt.w_list.push_back(w);
      opt.trials = cmp_trials;
      opt.seed = cmp_seed;
      opt.workers = cmp_workers;
      opt.timestamp = cmp_timestamp.empty() ? utc_timestamp() : cmp_timestamp;
      const ComparisonReport rep = compare_report(spec, model, metric, cmp_n, opt);

      std::string path = cmp_out;
      if (path.empty()) {
        if (const char* dir = std::getenv(kOutDirEnv); dir && *dir) {
          const std::string ext = cmp_format == "json" ? ".json" : ".csv";
          path = (std::filesystem::path(dir) / ("compare_" + spec.name + "_n" + std::to_string(cmp_n) + ext)).string();
        }
      }
      ReportFormat fmt = ReportFormat::csv;
      if (cmp_format == "json" || (cmp_format.empty() && path.size() >= 5 && path.substr(path.size() - 5) == ".json"))
        fmt = ReportFormat::json;
      else if (!cmp_format.empty() && cmp_format != "csv")
        throw UsageError("--format must be csv or json");

      if (path.empty()) {
        out << (fmt == ReportFormat::csv ? report_csv(rep) : report_json(rep).dump(2) + "\n");
      } else {
        try {
          write_report(rep, path, fmt);
        } catch (const FormatError& e) {
          throw UsageError(e.what());
        }
        out << "wrote " << path << '\n';
      }
      for (const auto& e : rep.expectation_rows) {
        err << "expectation bound w=" << e.w << ": P[W >= " << fmt12(e.threshold) << "] < " << fmt12(e.bound)
            << " (empirical " << fmt12(e.empirical_tail) << ")\n";
      }
      if (!rep.all_dominated()) {
        err << "dominance violated in at least one row\n";
        return kExitFailed;
      }
    } else if (*validate) {
      const RecurrenceSpec spec = val_src.load();
      const auto rep = validate_spec(spec);
      print_validation(out, rep);
      return rep.accepted() ? kExitOk : kExitFailed;
    } else if (*presets) {
      for (const auto& name : preset_names()) {
        const RecurrenceSpec s = preset(name);
        out << name << "  kind=" << to_string(s.kind) << "  d=" << fmt12(s.terminal_d) << "  u="
            << (s.u ? "analytic" : "iterated") << '\n';
      }
    } else if (*expected) {
      if (ew_n < 0) throw UsageError("--n must be >= 0");
      out << fmt12(quicksort_expected_work(ew_n)) << '\n';
    } else if (*karp) {
      const KarpComparison c = quicksort_karp_comparison(kc_n, kc_k);
      out << "n: " << c.n << "\nk: " << c.k << "\nw: " << c.w << '\n'
          << "work_w_threshold: " << fmt12(c.ours_w.threshold_r) << '\n'
          << "work_w_bound: " << fmt12(c.ours_w.raw) << '\n'
          << "work_threshold: " << fmt12(c.ours_threshold) << '\n'
          << "work_bound: " << fmt12(c.ours_bound) << '\n'
          << "expected_work: " << fmt12(c.expected_work) << '\n'
          << "expectation_threshold: " << fmt12(c.karp.threshold_r) << '\n'
          << "expectation_bound: " << fmt12(c.karp.bound) << '\n'
          << "expectation_bound_at_work_threshold: " << fmt12(c.karp_at_ours.bound) << '\n';
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  return kExitOk;
}

}  // namespace prr::cli
