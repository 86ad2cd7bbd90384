#pragma once

// Analytic bound vs. simulated tail, one row per w.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prr/bounds.hpp"
#include "prr/error.hpp"
#include "prr/mcsim.hpp"
#include "prr/recspec.hpp"

namespace prr {

struct ReportRow {
  std::int64_t w = 0;
  double threshold = 0.0;
  double analytic_bound = 1.0;
  double empirical_tail = 0.0;
  double ci_upper = 0.0;
  bool dominance_ok = true;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

// Expectation-based bound at (w+1) E[W], with the simulated tail there.
struct ExpectationRow {
  std::int64_t w = 0;
  double threshold = 0.0;
  double bound = 1.0;
  double empirical_tail = 0.0;

  friend bool operator==(const ExpectationRow&, const ExpectationRow&) = default;
};

struct ReportMeta {
  std::string spec;
  std::string model;
  std::string metric;
  std::int64_t n = 0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::string timestamp;

  friend bool operator==(const ReportMeta&, const ReportMeta&) = default;
};

struct ComparisonReport {
  ReportMeta meta;
  std::vector<ReportRow> rows;  // sorted by w
  std::vector<ExpectationRow> expectation_rows;

  bool all_dominated() const {
    for (const auto& r : rows)
      if (!r.dominance_ok) return false;
    return true;
  }

  friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

struct CompareOptions {
  std::vector<std::int64_t> w_list;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string timestamp;
};

inline ComparisonReport compare_report(const RecurrenceSpec& spec, const ProcessModel& model, Metric metric,
                                       std::int64_t n, const CompareOptions& opt) {
  ComparisonReport rep;
  rep.meta = {spec.name, model.name, std::string(to_string(metric)), n, opt.trials, opt.seed, opt.timestamp};
  const DistSummary dist = run_trials(model, n, metric, opt.trials, opt.seed, opt.workers);

  std::vector<std::int64_t> ws = opt.w_list;
  std::sort(ws.begin(), ws.end());
  ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
  const double x = static_cast<double>(n);
  for (auto w : ws) {
    const BoundValue b = bound_at_w(spec, x, w);
    const TailEstimate t = tail_prob(dist, b.threshold_r);
    rep.rows.push_back({w, b.threshold_r, b.bound, t.p, t.ci_upper, t.ci_upper <= b.bound});
  }
  if (spec.kind == Kind::work && model.split == SplitKind::uniform_pivot && metric == Metric::work) {
    const double ew = quicksort_expected_work(n);
    for (auto w : ws) {
      const BoundValue k = karp_expectation_bound(ew, static_cast<double>(w));
      // The expectation bound is stated for P[W >= threshold].
      double at_or_above = 0.0;
      for (double s : dist.samples)
        if (s >= k.threshold_r) at_or_above += 1.0;
      rep.expectation_rows.push_back({w, k.threshold_r, k.bound, at_or_above / static_cast<double>(dist.samples.size())});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization. Floats carry 12 significant digits.

inline std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline double round12(double v) { return std::strtod(fmt12(v).c_str(), nullptr); }

inline constexpr const char* kCsvHeader = "w,threshold,analytic_bound,empirical_tail,ci_upper,dominance_ok";

inline std::string report_csv(const ComparisonReport& r) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& row : r.rows) {
    os << row.w << ',' << fmt12(row.threshold) << ',' << fmt12(row.analytic_bound) << ','
       << fmt12(row.empirical_tail) << ',' << fmt12(row.ci_upper) << ',' << (row.dominance_ok ? "true" : "false")
       << '\n';
  }
  return os.str();
}

inline nlohmann::json report_json(const ComparisonReport& r) {
  nlohmann::json j;
  j["metadata"] = {{"spec", r.meta.spec},     {"model", r.meta.model}, {"metric", r.meta.metric},
                   {"n", r.meta.n},           {"trials", r.meta.trials}, {"seed", r.meta.seed},
                   {"timestamp", r.meta.timestamp}};
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"w", row.w},
                         {"threshold", round12(row.threshold)},
                         {"analytic_bound", round12(row.analytic_bound)},
                         {"empirical_tail", round12(row.empirical_tail)},
                         {"ci_upper", round12(row.ci_upper)},
                         {"dominance_ok", row.dominance_ok}});
  }
  j["expectation_rows"] = nlohmann::json::array();
  for (const auto& row : r.expectation_rows) {
    j["expectation_rows"].push_back({{"w", row.w},
                                     {"threshold", round12(row.threshold)},
                                     {"bound", round12(row.bound)},
                                     {"empirical_tail", round12(row.empirical_tail)}});
  }
  return j;
}

// The report with every float rounded to its printed precision.
inline ComparisonReport rounded(ComparisonReport r) {
  for (auto& row : r.rows) {
    row.threshold = round12(row.threshold);
    row.analytic_bound = round12(row.analytic_bound);
    row.empirical_tail = round12(row.empirical_tail);
    row.ci_upper = round12(row.ci_upper);
  }
  for (auto& row : r.expectation_rows) {
    row.threshold = round12(row.threshold);
    row.bound = round12(row.bound);
    row.empirical_tail = round12(row.empirical_tail);
  }
  return r;
}

inline ComparisonReport report_from_json(const nlohmann::json& j) {
  try {
    ComparisonReport r;
    const auto& m = j.at("metadata");
    r.meta.spec = m.at("spec").get<std::string>();
    r.meta.model = m.at("model").get<std::string>();
    r.meta.metric = m.at("metric").get<std::string>();
    r.meta.n = m.at("n").get<std::int64_t>();
    r.meta.trials = m.at("trials").get<std::uint64_t>();
    r.meta.seed = m.at("seed").get<std::uint64_t>();
    r.meta.timestamp = m.at("timestamp").get<std::string>();
    for (const auto& row : j.at("rows")) {
      r.rows.push_back({row.at("w").get<std::int64_t>(), row.at("threshold").get<double>(),
                        row.at("analytic_bound").get<double>(), row.at("empirical_tail").get<double>(),
                        row.at("ci_upper").get<double>(), row.at("dominance_ok").get<bool>()});
    }
    if (j.contains("expectation_rows")) {
      for (const auto& row : j.at("expectation_rows")) {
        r.expectation_rows.push_back({row.at("w").get<std::int64_t>(), row.at("threshold").get<double>(),
                                      row.at("bound").get<double>(), row.at("empirical_tail").get<double>()});
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

// Rows only; the CSV form carries no metadata.
inline std::vector<ReportRow> rows_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw FormatError("CSV header mismatch");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw FormatError("CSV row must have 6 fields: " + line);
    rows.push_back({std::stoll(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4]),
                    f[5] == "true"});
  }
  return rows;
}

enum class ReportFormat { csv, json };

inline void write_report(const ComparisonReport& r, const std::string& path, ReportFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  if (format == ReportFormat::csv)
    out << report_csv(r);
  else
    out << report_json(r).dump(2) << '\n';
  if (!out) throw FormatError("write to '" + path + "' failed");
}

}  // namespace prr
