#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "prr/mcsim.hpp"

using namespace prr;

namespace {

using Law = std::map<double, double>;

// Brute-force oracle: recurse over every pivot without memoization.
Law enumerate(std::int64_t n, Metric m) {
  if (m == Metric::height ? n <= 0 : n <= 1) return {{0.0, 1.0}};
  const double toll = m == Metric::work ? n - 1.0 : m == Metric::span ? std::log2(double(n)) : 1.0;
  Law out;
  for (std::int64_t k = 0; k < n; ++k) {
    const Law a = enumerate(k, m), b = enumerate(n - 1 - k, m);
    for (auto [va, pa] : a)
      for (auto [vb, pb] : b) out[toll + (m == Metric::work ? va + vb : std::max(va, vb))] += pa * pb / n;
  }
  return out;
}

void expect_same_law(const DistSummary& d, const Law& want) {
  ASSERT_EQ(d.kind, DistKind::exact);
  ASSERT_EQ(d.support.size(), want.size());
  auto it = want.begin();
  for (auto [v, p] : d.support) {
    EXPECT_NEAR(v, it->first, 1e-9);
    EXPECT_NEAR(p, it->second, 1e-12);
    ++it;
  }
}

double count_above(const DistSummary& d, double r) {
  double c = 0;
  for (double s : d.samples) c += s > r;
  return c;
}

}  // namespace

TEST(Stream, DeterministicAndIndependentOfOrder) {
  Stream a(7, 3), b(7, 3), c(7, 4), e(8, 3);
  const auto a1 = a.next();
  EXPECT_EQ(a1, b.next());
  EXPECT_NE(a1, c.next());
  EXPECT_NE(a1, e.next());
  EXPECT_EQ(a.draws(), 1u);
  // Draw j of stream (seed, i) is a closed-form function of its inputs.
  const std::uint64_t key = mix64(mix64(7) ^ (4 * 0xD1B54A32D192ED03ULL));
  EXPECT_EQ(a1, mix64(key + 0x9E3779B97F4A7C15ULL));
}

TEST(Stream, BelowIsUniform) {
  Stream s(1, 0);
  std::vector<int> hist(7, 0);
  const int N = 70000;
  for (int i = 0; i < N; ++i) {
    auto v = s.below(7);
    ASSERT_LT(v, 7u);
    ++hist[v];
  }
  double chi2 = 0;
  for (int h : hist) chi2 += (h - N / 7.0) * (h - N / 7.0) / (N / 7.0);
  EXPECT_LT(chi2, 22.46);  // 6 dof, p = 0.001
  for (int i = 0; i < 1000; ++i) {
    const double u = s.uniform01();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Models, UnknownModelThrows) { EXPECT_THROW(make_model("heap"), FormatError); }

TEST(Models, PresetMapping) {
  EXPECT_EQ(model_for_preset("bst-height").second, Metric::height);
  EXPECT_EQ(model_for_preset("quicksort-span").second, Metric::span);
  EXPECT_EQ(model_for_preset("quicksort-work").first.split, SplitKind::uniform_pivot);
  EXPECT_EQ(model_for_preset("unary-halving").first.split, SplitKind::uniform_child);
}

TEST(RunTrials, TerminalInstanceIsZero) {
  const auto m = make_model("quicksort");
  for (Metric metric : {Metric::work, Metric::span}) {
    const auto d = run_trials(m, 1, metric, 100, 5);
    EXPECT_EQ(d.min(), 0.0);
    EXPECT_EQ(d.max(), 0.0);
  }
  EXPECT_EQ(run_trials(m, 0, Metric::height, 10, 5).max(), 0.0);
}

TEST(RunTrials, RejectsZeroTrials) { EXPECT_THROW(run_trials(make_model("quicksort"), 4, Metric::work, 0, 1), ModelError); }

TEST(RunTrials, QuicksortWorkN3MatchesOracle) {
  const std::uint64_t T = 1'000'000;
  const auto d = run_trials(make_model("quicksort"), 3, Metric::work, T, 11);
  const double p2 = 1.0 - count_above(d, 2.0) / T;
  const double sigma = std::sqrt((1.0 / 3) * (2.0 / 3) / T);
  EXPECT_NEAR(p2, 1.0 / 3, 3 * sigma);
  EXPECT_EQ(d.min(), 2.0);
  EXPECT_EQ(d.max(), 3.0);
}

TEST(RunTrials, BstHeightN3MatchesOracle) {
  const std::uint64_t T = 1'000'000;
  const auto d = run_trials(make_model("bst"), 3, Metric::height, T, 12);
  const double p3 = count_above(d, 2.0) / T;
  const double sigma = std::sqrt((1.0 / 3) * (2.0 / 3) / T);
  EXPECT_NEAR(p3, 2.0 / 3, 3 * sigma);
  EXPECT_EQ(d.min(), 2.0);
}

TEST(RunTrials, WorkerCountDoesNotChangeSamples) {
  const auto m = make_model("quicksort");
  const auto one = run_trials(m, 50, Metric::work, 5000, 99, 1);
  for (unsigned w : {2u, 3u, 8u}) EXPECT_EQ(run_trials(m, 50, Metric::work, 5000, 99, w).samples, one.samples);
  EXPECT_NE(run_trials(m, 50, Metric::work, 5000, 100, 1).samples, one.samples);
}

TEST(RunTrials, ConservationOfSizes) {
  const auto m = make_model("quicksort");
  for (std::int64_t n = 1; n <= 300; n += 7) {
    Stream s(3, static_cast<std::uint64_t>(n));
    for (int i = 0; i < 200; ++i) {
      const auto c = m.sample(n, s);
      ASSERT_EQ(c.size(), 2u);
      EXPECT_EQ(c[0] + c[1], n - 1);
      EXPECT_GE(c[0], 0);
      EXPECT_GE(c[1], 0);
    }
  }
}

TEST(RunTrials, BadFiniteModelRaises) {
  const auto m = model_from_json(nlohmann::json::parse(R"({"split": {"finite": [{"p": 1, "children": ["x"]}]}})"));
  EXPECT_THROW(run_trials(m, 5, Metric::work, 3, 1), ModelError);
  EXPECT_THROW(exact_dist(m, 5, Metric::work), ModelError);
}

TEST(FiniteModel, DeterministicHalvingSplit) {
  const auto m = model_from_json(nlohmann::json::parse(R"j({
    "name": "halves", "work_toll": [[0, true, "0"], [1, "x - 1"]],
    "split": {"finite": [{"p": 1, "children": ["floor((x-1)/2)", "x - 1 - floor((x-1)/2)"]}]}})j"));
  // 7 -> (3, 3), 3 -> (1, 1): 6 + 2 + 2.
  EXPECT_EQ(run_trials(m, 7, Metric::work, 10, 0).max(), 10.0);
  const auto e = exact_dist(m, 7, Metric::work);
  ASSERT_EQ(e.support.size(), 1u);
  EXPECT_EQ(e.support[0].first, 10.0);
}

TEST(FiniteModel, MalformedJson) {
  using nlohmann::json;
  EXPECT_THROW(model_from_json(json::parse(R"({"name": "x"})")), FormatError);
  EXPECT_THROW(model_from_json(json::parse(R"({"split": "coin"})")), FormatError);
  EXPECT_THROW(model_from_json(json::parse(R"({"split": {"finite": [{"p": 0.4, "children": []}]}})")),
               FormatError);
}

TEST(ExactDist, QuicksortWorkSmall) {
  const auto m = make_model("quicksort");
  expect_same_law(exact_dist(m, 2, Metric::work), {{1.0, 1.0}});
  expect_same_law(exact_dist(m, 3, Metric::work), {{2.0, 1.0 / 3}, {3.0, 2.0 / 3}});
  EXPECT_NEAR(exact_dist(m, 3, Metric::work).mean(), 8.0 / 3, 1e-12);
  expect_same_law(exact_dist(m, 1, Metric::work), {{0.0, 1.0}});
}

TEST(ExactDist, BstHeightN3) {
  expect_same_law(exact_dist(make_model("bst"), 3, Metric::height), {{2.0, 1.0 / 3}, {3.0, 2.0 / 3}});
}

TEST(ExactDist, AgreesWithBruteForce) {
  const auto m = make_model("quicksort");
  for (Metric metric : {Metric::work, Metric::span, Metric::height})
    for (std::int64_t n = 0; n <= 8; ++n) expect_same_law(exact_dist(m, n, metric), enumerate(n, metric));
}

TEST(ExactDist, ProbabilitiesSumToOne) {
  for (const auto& name : model_names())
    for (std::int64_t n = 0; n <= kExactCap; ++n) {
      double total = 0;
      for (auto [v, p] : exact_dist(make_model(name), n, Metric::work).support) total += p;
      EXPECT_NEAR(total, 1.0, 1e-12) << name << " n=" << n;
    }
}

TEST(ExactDist, CapEnforced) {
  EXPECT_THROW(exact_dist(make_model("quicksort"), kExactCap + 1, Metric::work), ModelError);
}

TEST(TailProb, ExactExamples) {
  const auto d = exact_dist(make_model("quicksort"), 3, Metric::work);
  EXPECT_NEAR(tail_prob(d, 2.0).p, 2.0 / 3, 1e-12);
  EXPECT_EQ(tail_prob(d, 1.0).p, 1.0);
  EXPECT_EQ(tail_prob(d, 3.0).p, 0.0);
  EXPECT_EQ(tail_prob(d, 2.0).ci_upper, tail_prob(d, 2.0).p);
}

TEST(TailProb, EmpiricalStrictAndWilson) {
  DistSummary d;
  d.samples = {1, 2, 2, 3};
  EXPECT_EQ(tail_prob(d, 2.0).p, 0.25);
  EXPECT_EQ(tail_prob(d, 0.5).p, 1.0);
  EXPECT_EQ(tail_prob(d, 3.0).p, 0.0);
  // Wilson upper bound with 0 successes: z^2 / (n + z^2).
  const double z = 2.3263478740408408;
  EXPECT_NEAR(tail_prob(d, 3.0).ci_upper, z * z / (4 + z * z), 1e-12);
  EXPECT_GE(tail_prob(d, 2.0).ci_upper, 0.25);
}

TEST(Wilson, HandValue) {
  // 30 of 100: centre 0.3 + z^2/200, spread z sqrt(0.21/100 + z^2/40000).
  const double z = 2.3263478740408408, n = 100, p = 0.3;
  const double want = (p + z * z / (2 * n) + z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n))) / (1 + z * z / n);
  EXPECT_NEAR(wilson_upper(30, 100), want, 1e-14);
  EXPECT_EQ(wilson_upper(100, 100), 1.0);
}

TEST(Quantiles, EmpiricalAndExact) {
  DistSummary d;
  d.samples = {1, 2, 3, 4};
  EXPECT_EQ(d.quantile(0.5), 2.0);
  EXPECT_EQ(d.quantile(1.0), 4.0);
  EXPECT_EQ(d.mean(), 2.5);
  const auto e = exact_dist(make_model("quicksort"), 3, Metric::work);
  EXPECT_EQ(e.quantile(0.3), 2.0);
  EXPECT_EQ(e.quantile(0.5), 3.0);
}

TEST(SplitMax, Examples) {
  const auto m = make_model("quicksort");
  EXPECT_DOUBLE_EQ(split_max_expectation(m, 4), 2.5);
  EXPECT_LE(split_max_expectation(m, 4), 3.5);
  EXPECT_DOUBLE_EQ(split_max_expectation(m, 2), 1.0);
  EXPECT_EQ(split_max_expectation(m, 1), 0.0);
}

TEST(SplitMax, BelowSevenEighths) {
  const auto m = make_model("quicksort");
  for (std::int64_t n = 2; n <= 512; ++n) EXPECT_LE(split_max_expectation(m, n), 7.0 * n / 8.0) << n;
}

TEST(Subadditivity, IdentityAndPiecewiseG2) {
  const auto m = make_model("quicksort");
  const PiecewiseFn g2(
      {{0.0, true, parse_expr("1/2")}, {1.0, false, parse_expr("1")}, {2.0, false, parse_expr("x - 1")}});
  for (std::int64_t n : {2, 3, 7, 64}) {
    EXPECT_EQ(g_subadditivity_check(m, PiecewiseFn::parse("x"), n, 1000, 1).violations, 0u);
    EXPECT_EQ(g_subadditivity_check(m, g2, n, 1000, 2).violations, 0u);
  }
}

TEST(Subadditivity, ReportsWitness) {
  // A constant g is never subadditive over two children.
  const auto r = g_subadditivity_check(make_model("quicksort"), PiecewiseFn::parse("1"), 5, 50, 3);
  EXPECT_EQ(r.draws, 50u);
  EXPECT_EQ(r.violations, 50u);
  EXPECT_EQ(r.witness.size(), 2u);
  EXPECT_EQ(r.witness_sum, 2.0);
  EXPECT_EQ(r.parent_g, 1.0);
}

TEST(Subadditivity, SquareOnQuicksortHolds) {
  // (k^2 + (3-k)^2) <= 16 for every pivot k at n = 4.
  EXPECT_EQ(g_subadditivity_check(make_model("quicksort"), PiecewiseFn::parse("x^2"), 4, 500, 4).violations, 0u);
}
