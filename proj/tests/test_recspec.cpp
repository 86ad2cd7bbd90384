#include <gtest/gtest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "prr/recspec.hpp"

using namespace prr;

namespace {

RecurrenceSpec unary_spec(const char* toll_above, const char* shrink) {
  RecurrenceSpec s;
  s.name = "t";
  s.kind = Kind::unary;
  s.terminal_d = 1.0;
  s.toll = detail::zero_then(1.0, toll_above);
  s.shrink = PiecewiseFn::parse(shrink);
  return s;
}

std::string failed_names(const ValidationReport& r) {
  std::string out;
  for (const auto& c : r.failures()) out += c.name + " (" + c.witness + "); ";
  return out;
}

}  // namespace

TEST(Validate, EveryPresetAccepted) {
  for (const auto& name : preset_names()) {
    const auto rep = validate_spec(preset(name));
    EXPECT_TRUE(rep.accepted()) << name << ": " << failed_names(rep);
  }
}

TEST(Validate, QuicksortWorkPassesEveryCheck) {
  const auto rep = validate_spec(preset("quicksort-work"));
  for (const auto& c : rep.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.witness;
  EXPECT_NE(rep.find("g2 positive"), nullptr);
  EXPECT_NE(rep.find("u recurrence inequality"), nullptr);
}

TEST(Validate, SqrtShrinkRejected) {
  const auto rep = validate_spec(unary_spec("1", "sqrt(x)"));
  EXPECT_FALSE(rep.accepted());
  const Check* c = rep.find("shrink ratio non-decreasing");
  ASSERT_NE(c, nullptr);
  EXPECT_FALSE(c->passed);
  EXPECT_FALSE(c->witness.empty());
}

TEST(Validate, ConstantTollAboveDAccepted) {
  const auto rep = validate_spec(unary_spec("1", "x/2"));
  EXPECT_TRUE(rep.accepted()) << failed_names(rep);
}

TEST(Validate, NonzeroTollBelowDRejected) {
  RecurrenceSpec s = unary_spec("1", "x/2");
  s.toll = PiecewiseFn::parse("1");
  const auto rep = validate_spec(s);
  ASSERT_NE(rep.find("toll zero on [0,d]"), nullptr);
  EXPECT_FALSE(rep.find("toll zero on [0,d]")->passed);
}

TEST(Validate, DecreasingTollRejected) {
  const auto rep = validate_spec(unary_spec("1/x", "x/2"));
  EXPECT_FALSE(rep.find("toll monotone above d")->passed);
}

TEST(Validate, ShrinkAboveXRejected) {
  const auto rep = validate_spec(unary_spec("1", "2*x"));
  EXPECT_FALSE(rep.find("shrink within [0,x]")->passed);
}

TEST(Validate, SpanWithHalfG1Rejected) {
  RecurrenceSpec s = preset("bst-height");
  s.g1 = PiecewiseFn::parse("1/2");
  const auto rep = validate_spec(s);
  EXPECT_FALSE(rep.accepted());
  ASSERT_NE(rep.find("g1 >= 1 above d"), nullptr);
  EXPECT_FALSE(rep.find("g1 >= 1 above d")->passed);
}

TEST(Validate, SpanWithoutG1Rejected) {
  RecurrenceSpec s = preset("bst-height");
  s.g1.reset();
  const auto rep = validate_spec(s);
  ASSERT_NE(rep.find("g1 present"), nullptr);
  EXPECT_FALSE(rep.find("g1 present")->passed);
}

TEST(Validate, WorkWithoutG2Rejected) {
  RecurrenceSpec s = preset("quicksort-work");
  s.g2.reset();
  EXPECT_FALSE(validate_spec(s).find("g2 present")->passed);
}

TEST(Validate, WeakAnalyticURejected) {
  RecurrenceSpec s = preset("bst-height");
  s.u = PiecewiseFn::parse("log(x, 2) / 100");  // far too small to absorb the unit toll
  const auto rep = validate_spec(s);
  ASSERT_NE(rep.find("u recurrence inequality"), nullptr);
  EXPECT_FALSE(rep.find("u recurrence inequality")->passed);
}

TEST(Validate, NonContractingRecurrenceRejected) {
  const auto rep = validate_spec(unary_spec("1", "x"));
  EXPECT_FALSE(rep.accepted());
}

TEST(Validate, IteratedStepSolutionWarns) {
  const auto rep = validate_spec(preset("unary-halving"));
  EXPECT_TRUE(rep.accepted());
  ASSERT_EQ(rep.warnings().size(), 1u);
  EXPECT_EQ(rep.warnings()[0].name, "u continuous above d");
}

TEST(Validate, AnalyticPresetsDoNotWarn) {
  for (const char* name : {"quicksort-span", "quicksort-work", "bst-height"})
    EXPECT_TRUE(validate_spec(preset(name)).warnings().empty()) << name;
}

TEST(Validate, FailureListEmptyIffAccepted) {
  for (const auto& s : {unary_spec("1", "sqrt(x)"), unary_spec("1", "x/2"), preset("quicksort-span")}) {
    const auto rep = validate_spec(s);
    EXPECT_EQ(rep.failures().empty(), rep.accepted());
  }
}

TEST(Preset, QuicksortWorkG2AtBoundaries) {
  const auto s = preset("quicksort-work");
  EXPECT_DOUBLE_EQ(s.g2_at(0.5), 0.5);
  EXPECT_DOUBLE_EQ(s.g2_at(1.0), 0.5);
  EXPECT_DOUBLE_EQ(s.g2_at(1.5), 1.0);
  EXPECT_DOUBLE_EQ(s.g2_at(2.0), 1.0);
  EXPECT_DOUBLE_EQ(s.g2_at(5.0), 4.0);
}

TEST(Preset, BstHeightUAtEightSevenths) {
  EXPECT_NEAR(preset("bst-height").u_analytic(8.0 / 7.0), 2.0, 1e-12);
}

TEST(Preset, SevenEighthsShrink) {
  const auto s = preset("quicksort-span");
  EXPECT_EQ(s.shrink(1.0), 0.0);
  EXPECT_EQ(s.shrink(8.0 / 7.0 - 1e-9), 0.0);
  EXPECT_DOUBLE_EQ(s.shrink(8.0), 7.0);
}

TEST(Preset, QuicksortSpanTollBase) {
  EXPECT_DOUBLE_EQ(preset("quicksort-span").toll(1024.0), 10.0);
  EXPECT_EQ(preset("quicksort-span").toll(1.0), 0.0);
  PresetOptions o;
  o.span_log_base = 10.0;
  EXPECT_NEAR(preset("quicksort-span", o).toll(1000.0), 3.0, 1e-12);
  EXPECT_TRUE(validate_spec(preset("quicksort-span", o)).accepted());
}

TEST(Preset, WorkTollEffIsTollOverG2) {
  const auto s = preset("quicksort-work");
  EXPECT_DOUBLE_EQ(s.toll_eff(10.0), 1.0);
  EXPECT_DOUBLE_EQ(s.toll_eff(1.5), 0.5);
  EXPECT_EQ(s.toll_eff(1.0), 0.0);
}

TEST(Preset, UnknownNameThrows) { EXPECT_THROW(preset("mergesort"), FormatError); }

TEST(IterateU, UnaryHalvingValues) {
  const auto s = preset("unary-halving");
  EXPECT_EQ(iterate_u(s, 8.0), 3.0);
  EXPECT_EQ(iterate_u(s, 1.0), 0.0);
  EXPECT_EQ(iterate_u(s, 3.0), 2.0);
}

TEST(IterateU, CapRaisesSolverError) {
  EXPECT_THROW(iterate_u(unary_spec("1", "x"), 2.0, 1000), SolverError);
  EXPECT_THROW(iterate_u(preset("unary-halving"), -1.0), DomainError);
}

TEST(UInequality, SampledAtLogSpacedPoints) {
  for (const char* name : {"quicksort-span", "quicksort-work", "bst-height"}) {
    const auto s = preset(name);
    const auto grid = sample_grid(detail::just_above(s.terminal_d), 1e6, 1024, {});
    ASSERT_GE(grid.size(), 1024u);
    for (double x : grid) {
      const double lhs = u_of(s, x);
      const double rhs = s.toll_eff(x) + u_of(s, s.shrink(x));
      EXPECT_GE(lhs, rhs - 1e-9 * std::max(1.0, lhs)) << name << " at x=" << x;
    }
  }
}

TEST(SpecJson, RoundTripPresets) {
  for (const auto& name : preset_names()) {
    const auto s = preset(name);
    const auto back = spec_from_json(nlohmann::json::parse(spec_to_json(s).dump()));
    EXPECT_EQ(back.name, s.name);
    EXPECT_EQ(back.kind, s.kind);
    EXPECT_EQ(back.terminal_d, s.terminal_d);
    EXPECT_EQ(back.u_base, s.u_base);
    EXPECT_TRUE(back.toll == s.toll) << name;
    EXPECT_TRUE(back.shrink == s.shrink) << name;
    EXPECT_EQ(back.g1.has_value(), s.g1.has_value());
    EXPECT_EQ(back.g2.has_value(), s.g2.has_value());
    EXPECT_EQ(back.u.has_value(), s.u.has_value());
    for (double x : {0.5, 1.0, 1.1, 2.0, 100.0}) {
      EXPECT_EQ(back.toll(x), s.toll(x));
      EXPECT_EQ(back.shrink(x), s.shrink(x));
      if (s.g2) {
        EXPECT_EQ((*back.g2)(x), (*s.g2)(x));
      }
      if (s.u) {
        EXPECT_EQ((*back.u)(x), (*s.u)(x));
      }
    }
  }
}

TEST(SpecJson, BareStringAndConstantLowerBounds) {
  const auto j = nlohmann::json::parse(R"({
    "name": "hand", "kind": "span", "d": 1,
    "toll": [[0, true, "0"], [1, "1"]],
    "shrink": [[0, "0"], ["8/7", "7*x/8"]],
    "g1": "x", "u": "log(x, 8/7) + 1"})");
  const auto s = spec_from_json(j);
  EXPECT_EQ(s.kind, Kind::span);
  EXPECT_EQ(s.toll(1.0), 0.0);
  EXPECT_EQ(s.toll(1.5), 1.0);
  EXPECT_DOUBLE_EQ(s.shrink(8.0), 7.0);
  EXPECT_EQ(s.shrink(1.1), 0.0);
  EXPECT_EQ(s.u_base, 0.0);
  EXPECT_TRUE(validate_spec(s).accepted());
}

TEST(SpecJson, MalformedInputs) {
  using nlohmann::json;
  EXPECT_THROW(spec_from_json(json::array()), FormatError);
  EXPECT_THROW(spec_from_json(json::parse(R"({"kind":"unary","shrink":"x/2","d":1})")), FormatError);
  EXPECT_THROW(spec_from_json(json::parse(R"({"kind":"bogus","toll":"0","shrink":"x/2","d":1})")), FormatError);
  EXPECT_THROW(spec_from_json(json::parse(R"({"kind":"unary","toll":"0","shrink":"x/2","d":"x"})")), FormatError);
  EXPECT_THROW(spec_from_json(json::parse(R"({"kind":"unary","toll":[[0,1]],"shrink":"x/2","d":1})")),
               FormatError);
  EXPECT_THROW(spec_from_json(json::parse(R"({"kind":"unary","toll":"x +","shrink":"x/2","d":1})")), ParseError);
}
