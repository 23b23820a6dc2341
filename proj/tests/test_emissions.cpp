#include <gtest/gtest.h>

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hyperclean/emissions.hpp"
#include "support/emission_fixture.hpp"

using namespace hyperclean;

namespace {

NoxPredictor constant_predictor(double c) {
  std::vector<TripSample> d;
  for (int v = 0; v <= 140; ++v)
    for (int k = -8; k <= 8; ++k) d.push_back({static_cast<double>(v), 0.5 * k, c});
  return NoxPredictor(d);
}

}  // namespace

TEST(TripIngestTest, WellFormedFile) {
  std::istringstream is("t_s,speed_kmh,accel_ms2,nox_mg\n0,0,0,1\n1,3.6,1,2\n2,7.2,1,3\n");
  const auto trip = parse_trips(is);
  ASSERT_EQ(trip.samples.size(), 3u);
  EXPECT_EQ(trip.samples[2].nox_mg, 3);
}

TEST(TripIngestTest, AccelerationDerivedWhenMissing) {
  std::istringstream is("t_s,speed_kmh,nox_mg\n0,10,1\n1,13.6,2\n");
  const auto trip = parse_trips(is);
  EXPECT_EQ(trip.samples[0].accel_ms2, 0.0);
  EXPECT_NEAR(trip.samples[1].accel_ms2, 1.0, 1e-12);
}

TEST(TripIngestTest, Errors) {
  std::istringstream empty("t_s,speed_kmh,nox_mg\n");
  EXPECT_THROW(parse_trips(empty), data_error);
  std::istringstream negative("t_s,speed_kmh,nox_mg\n0,1,1\n1,-3,1\n");
  try {
    parse_trips(negative);
    FAIL();
  } catch (const data_error& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream malformed("t_s,speed_kmh,nox_mg\n0,abc,1\n");
  EXPECT_THROW(parse_trips(malformed), data_error);
  std::istringstream no_header("a,b\n1,2\n");
  EXPECT_THROW(parse_trips(no_header), data_error);
}

TEST(PredictorTest, MeanOfMatches) {
  const NoxPredictor p({{10, 0, 5}, {11, 1, 7}, {50, 0, 20}});
  EXPECT_DOUBLE_EQ(p.predict(10, 0), 6);
  EXPECT_DOUBLE_EQ(p.predict(50, 0), 20);
  EXPECT_THROW(p.predict(100, 0), no_data_error);
  // Boundaries are inclusive on both axes.
  EXPECT_DOUBLE_EQ(p.predict(12, 2), 6);
  EXPECT_DOUBLE_EQ(p.predict(13, 0), 7);
}

TEST(PredictorProperty, WithinMatchedRange) {
  Rng rng(8);
  std::vector<TripSample> d;
  for (int i = 0; i < 500; ++i) d.push_back({rng.uniform(0, 60), rng.uniform(-3, 3), rng.uniform(0, 50)});
  const NoxPredictor p(d);
  for (int i = 0; i < 300; ++i) {
    const double v = rng.uniform(0, 60), a = rng.uniform(-3, 3);
    const auto r = p.try_predict(v, a);
    if (!r) continue;
    double lo = kInf, hi = -kInf;
    for (const auto& s : d)
      if (std::abs(s.speed_kmh - v) <= 2 && std::abs(s.accel_ms2 - a) <= 2) {
        lo = std::min(lo, s.nox_mg);
        hi = std::max(hi, s.nox_mg);
      }
    EXPECT_GE(*r, lo - 1e-9);
    EXPECT_LE(*r, hi + 1e-9);
  }
}

TEST(CycleEmissionsTest, ArithmeticOracle) {
  const auto e = cycle_emissions(constant_predictor(1), std::vector<double>(100, 36.0));
  EXPECT_DOUBLE_EQ(e.total_mg, 100);
  EXPECT_NEAR(e.distance_km, 1.0, 1e-12);
  EXPECT_NEAR(e.mg_per_km, 100, 1e-9);
  EXPECT_THROW(cycle_emissions(constant_predictor(1), std::vector<double>(10, 0.0)),
               undefined_rate_error);
}

TEST(CycleEmissionsTest, NedcClosedForm) {
  const auto nedc = load_cycle(std::filesystem::path(HYPERCLEAN_DATA_DIR) / "nedc.txt");
  ASSERT_EQ(nedc.size(), 1180u);
  const double dist = std::accumulate(nedc.begin(), nedc.end(), 0.0) / 3600.0;
  EXPECT_NEAR(dist, 11.0, 0.15);
  const double c = 2.5;
  EXPECT_NEAR(cycle_emissions(constant_predictor(c), nedc).mg_per_km, 1180 * c / dist, 1e-9);
}

TEST(CycleEmissionsTest, GapsAreListed) {
  const NoxPredictor p({{10, 0, 5}});
  try {
    cycle_emissions(p, std::vector<double>{10, 10, 40, 10});
    FAIL();
  } catch (const no_data_error& e) {
    ASSERT_EQ(e.gaps().size(), 2u);  // the jump to 40 and the drop back
    EXPECT_EQ(e.gaps()[0], 2u);
  }
}

TEST(CycleEmissionsProperty, LinearInPredictor) {
  const auto cycle = fixtures::synthetic_cycle();
  auto d = fixtures::synthetic_trips(true);
  const double base = cycle_emissions(NoxPredictor(d), cycle).mg_per_km;
  for (auto& s : d) s.nox_mg *= 3;
  EXPECT_NEAR(cycle_emissions(NoxPredictor(d), cycle).mg_per_km, 3 * base, 1e-9 * base);
}

TEST(NedcRobustnessTest, StandardCycleScoresKappaOut) {
  const NoxPredictor p(fixtures::synthetic_trips(true));
  const auto ctx = make_emission_context(p, fixtures::synthetic_cycle(), 15, 88);
  EXPECT_DOUBLE_EQ(nedc_robustness(ctx, p, ctx.standard_cycle), 88);
}

TEST(NedcRobustnessTest, ClosedFormAgainstFormulaEngine) {
  // A constant predictor c gives o = 3600 c / mean speed, so shifting the
  // cycle moves o and the robustness must be kappa_out - |o_std - o|.
  const auto p = constant_predictor(2);
  const auto cycle = fixtures::synthetic_cycle();
  const auto ctx = make_emission_context(p, cycle, 15, 40);
  auto shifted = cycle;
  for (auto& v : shifted) v += 10;
  const double o = cycle_emissions(p, shifted).mg_per_km;
  EXPECT_NEAR(nedc_robustness(ctx, p, shifted), 40 - std::abs(ctx.std_output - o), 1e-9);
}

TEST(NedcRobustnessTest, WorkedArithmetic) {
  // kappa_out - |o_std - o| with the quoted figures.
  EmissionContext ctx{fixtures::synthetic_cycle(), 84, 15, 88};
  const Trace standard = ctx.standard_trace();
  const auto rho_for = [&](double o) {
    const Trace cand = profile_trace(ctx.standard_cycle, o);
    const Trace* b[] = {&standard, &cand};
    return eval_quant(emission_formula(ctx.kappa_out), TraceBinding(b));
  };
  EXPECT_DOUBLE_EQ(rho_for(182), -10);
  EXPECT_LT(rho_for(84 + 88.5), 0);
  EmissionContext a21{fixtures::synthetic_cycle(), 9, 15, 40};
  const Trace s21 = a21.standard_trace();
  const Trace c21 = profile_trace(a21.standard_cycle, 11);
  const Trace* b21[] = {&s21, &c21};
  EXPECT_DOUBLE_EQ(eval_quant(emission_formula(40), TraceBinding(b21)), 38);
}

TEST(NedcRobustnessTest, RejectsCycleOutsideTube) {
  const NoxPredictor p(fixtures::synthetic_trips(false));
  const auto ctx = make_emission_context(p, fixtures::synthetic_cycle(), 15, 88);
  auto far = ctx.standard_cycle;
  far[100] += 16;
  EXPECT_THROW(nedc_robustness(ctx, p, far), restriction_error);
}

TEST(NedcRobustnessProperty, NeverAboveKappaOut) {
  const NoxPredictor p(fixtures::synthetic_trips(true));
  const auto ctx = make_emission_context(p, fixtures::synthetic_cycle(), 15, 88);
  const auto space = ctx.space();
  Rng rng(5);
  auto w = ctx.standard_cycle;
  for (int i = 0; i < 200; ++i) {
    w = propose_profile(w, space, 10, 5, rng, 0.0);
    try {
      EXPECT_LE(nedc_robustness(ctx, p, w), 88);
    } catch (const no_data_error&) {
    }
  }
}

TEST(FalsifyEmissionsTest, FindsPlantedBand) {
  const NoxPredictor p(fixtures::synthetic_trips(true));
  const auto ctx = make_emission_context(p, fixtures::synthetic_cycle(), 15, 88);
  EmissionSearchConfig cfg;
  cfg.falsifier.rng_seed = 7;
  cfg.falsifier.max_iterations = 3000;
  const auto res = falsify_emissions(ctx, p, cfg);
  EXPECT_TRUE(res.outcome.falsified);
  EXPECT_LE(res.outcome.iterations_used, 3000u);
  EXPECT_EQ(res.membership_violations, 0u);
  EXPECT_EQ(res.probed, res.outcome.robustness_history.size());
  EXPECT_LT(nedc_robustness(ctx, p, res.outcome.argmin), 0);
}

TEST(FalsifyEmissionsTest, CleanPredictorIsNotFalsified) {
  const auto p = constant_predictor(0);
  std::vector<TripSample> d;
  const auto ctx = make_emission_context(p, fixtures::synthetic_cycle(), 15, 88);
  EmissionSearchConfig cfg;
  cfg.falsifier.max_iterations = 300;
  const auto res = falsify_emissions(ctx, p, cfg);
  EXPECT_FALSE(res.outcome.falsified);
  EXPECT_EQ(res.outcome.min_robustness, 88);
}

TEST(FalsifyEmissionsTest, SeedDeterminism) {
  const NoxPredictor p(fixtures::synthetic_trips(true));
  const auto ctx = make_emission_context(p, fixtures::synthetic_cycle(), 15, 88);
  EmissionSearchConfig cfg;
  cfg.falsifier.rng_seed = 99;
  cfg.falsifier.max_iterations = 400;
  const auto a = falsify_emissions(ctx, p, cfg);
  const auto b = falsify_emissions(ctx, p, cfg);
  EXPECT_EQ(a.outcome.robustness_history, b.outcome.robustness_history);
  EXPECT_EQ(a.outcome.argmin, b.outcome.argmin);
  std::ostringstream pa, pb;
  write_plot_csv(pa, ctx.standard_cycle, a.outcome.argmin);
  write_plot_csv(pb, ctx.standard_cycle, b.outcome.argmin);
  EXPECT_EQ(pa.str(), pb.str());
}
