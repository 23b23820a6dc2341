#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "hyperclean/falsify.hpp"

using namespace hyperclean;

namespace {

FalsifierConfig config(std::size_t max_iter, std::uint64_t seed = 1) {
  FalsifierConfig c;
  c.max_iterations = max_iter;
  c.rng_seed = seed;
  return c;
}

std::vector<double> ramp(std::size_t n, double v) { return std::vector<double>(n, v); }

RestrictedInputSpace tube(const std::vector<double>& center, double kappa) {
  return RestrictedInputSpace{{profile_trace(center)}, kappa, DistanceFn::mixed_in(), center.size()};
}

}  // namespace

TEST(FalsifyTest, DeterministicDescent) {
  const Robustness<double> R = [](const double& x) { return 1 - x; };
  const ProposalScheme<double> ps = [](const double& x, Rng&) { return x + 0.15; };
  for (double beta : {0.1, 1.0, 50.0}) {
    auto c = config(100);
    c.beta = beta;
    const auto out = falsify(R, 0.0, ps, c);
    EXPECT_TRUE(out.falsified);
    EXPECT_EQ(out.iterations_used, 7u);
    EXPECT_NEAR(out.argmin, 1.05, 1e-12);
    EXPECT_NEAR(out.min_robustness, -0.05, 1e-12);
    for (char a : out.accepted) EXPECT_EQ(a, 1);
  }
}

TEST(FalsifyTest, ConstantRobustnessNeverFalsifies) {
  const Robustness<double> R = [](const double&) { return 1.0; };
  const ProposalScheme<double> ps = [](const double& x, Rng& rng) { return x + rng.uniform(-1, 1); };
  const auto out = falsify(R, 0.0, ps, config(50));
  EXPECT_FALSE(out.falsified);
  EXPECT_EQ(out.min_robustness, 1.0);
  EXPECT_EQ(out.iterations_used, 50u);
  EXPECT_EQ(out.robustness_history.size(), 51u);
}

TEST(FalsifyTest, NegativeInitialStopsImmediately) {
  int calls = 0;
  const Robustness<double> R = [&](const double& x) { ++calls; return x; };
  const ProposalScheme<double> ps = [](const double& x, Rng&) { return x; };
  const auto out = falsify(R, -1.0, ps, config(10));
  EXPECT_TRUE(out.falsified);
  EXPECT_EQ(out.iterations_used, 0u);
  EXPECT_EQ(calls, 1);
}

TEST(FalsifyTest, ZeroIsNotFalsified) {
  const Robustness<double> R = [](const double&) { return 0.0; };
  const ProposalScheme<double> ps = [](const double& x, Rng&) { return x; };
  EXPECT_FALSE(falsify(R, 0.0, ps, config(5)).falsified);
}

TEST(FalsifyTest, SearchErrorCarriesCandidate) {
  const Robustness<double> R = [](const double& x) {
    if (x > 2) throw std::domain_error("outside model domain");
    return 1.0;
  };
  const ProposalScheme<double> ps = [](const double& x, Rng&) { return x + 1; };
  try {
    falsify(R, 0.0, ps, config(10));
    FAIL() << "expected search_error";
  } catch (const search_error& e) {
    EXPECT_EQ(std::any_cast<double>(e.offending()), 3.0);
  }
}

TEST(FalsifyTest, InvalidConfig) {
  const Robustness<double> R = [](const double&) { return 1.0; };
  const ProposalScheme<double> ps = [](const double& x, Rng&) { return x; };
  auto c = config(0);
  EXPECT_THROW(falsify(R, 0.0, ps, c), std::invalid_argument);
  c = config(5);
  c.beta = 0;
  EXPECT_THROW(falsify(R, 0.0, ps, c), std::invalid_argument);
}

TEST(FalsifyTest, InfiniteRobustnessNeverAccepted) {
  const Robustness<double> R = [](const double& x) { return x > 0.5 ? kInf : 1.0; };
  const ProposalScheme<double> ps = [](const double&, Rng& rng) { return rng.uniform(0, 1); };
  const auto out = falsify(R, 0.0, ps, config(200));
  for (std::size_t i = 1; i < out.robustness_history.size(); ++i)
    if (out.robustness_history[i] == kInf) EXPECT_EQ(out.accepted[i], 0);
}

TEST(FalsifyTest, AdaptationRaisesBeta) {
  // With adaptation, worse proposals become ever less likely to be accepted.
  const Robustness<double> R = [](const double& x) { return 1 + std::abs(x); };
  const ProposalScheme<double> ps = [](const double& x, Rng& rng) { return x + rng.uniform(-1, 1); };
  auto plain = config(2000, 5);
  auto adapt = plain;
  adapt.adaptation = Adaptation{20, 2.0};
  const auto a = falsify(R, 0.0, ps, plain);
  const auto b = falsify(R, 0.0, ps, adapt);
  const auto accepted = [](const auto& o) {
    return std::count(o.accepted.begin(), o.accepted.end(), 1);
  };
  EXPECT_LT(accepted(b), accepted(a));
}

// Properties: running minimum, witness re-check, reproducibility.
TEST(FalsifyProperty, HistoryAndDeterminism) {
  const Robustness<double> R = [](const double& x) { return std::cos(x) + 0.2 * std::abs(x - 3); };
  const ProposalScheme<double> ps = [](const double& x, Rng& rng) { return x + rng.uniform(-0.5, 0.5); };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = falsify(R, 0.0, ps, config(500, seed));
    const auto b = falsify(R, 0.0, ps, config(500, seed));
    EXPECT_EQ(a.robustness_history, b.robustness_history);
    EXPECT_EQ(a.accepted, b.accepted);
    EXPECT_EQ(a.argmin, b.argmin);
    EXPECT_EQ(a.min_robustness,
              *std::min_element(a.robustness_history.begin(), a.robustness_history.end()));
    EXPECT_EQ(a.falsified, a.min_robustness < 0);
    if (a.falsified) EXPECT_LT(R(a.argmin), 0);
    std::ostringstream sa, sb;
    write_history_csv(sa, a);
    write_history_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
  }
}

TEST(FalsifyTest, RestartsPickSmallestMinimum) {
  const Robustness<double> R = [](const double& x) { return std::cos(3 * x) + 1.5 - 0.1 * x; };
  const ProposalScheme<double> ps = [](const double& x, Rng& rng) { return x + rng.uniform(-0.3, 0.3); };
  const auto c = config(200, 9);
  const auto merged = falsify_restarts(R, 0.0, ps, c, 4);
  const auto merged_concurrent = falsify_restarts(R, 0.0, ps, c, 4, true);
  double best = kInf;
  for (std::size_t k = 0; k < 4; ++k) {
    auto ck = c;
    ck.rng_seed = restart_seed(c.rng_seed, k);
    best = std::min(best, falsify(R, 0.0, ps, ck).min_robustness);
  }
  EXPECT_EQ(merged.min_robustness, best);
  EXPECT_EQ(merged_concurrent.robustness_history, merged.robustness_history);
  EXPECT_EQ(restart_seed(9, 0), 9u);
  EXPECT_EQ(falsify_restarts(R, 0.0, ps, c, 1).robustness_history,
            falsify(R, 0.0, ps, c).robustness_history);
}

TEST(MembershipTest, TubeBoundaries) {
  const auto center = ramp(20, 30);
  const auto space = tube(center, 15);
  EXPECT_TRUE(membership(profile_trace(center), space));
  auto up = center;
  for (auto& v : up) v += 15;
  EXPECT_TRUE(membership(profile_trace(up), space));
  auto spike = center;
  spike[7] += 16;
  EXPECT_FALSE(membership(profile_trace(spike), space));
  EXPECT_THROW(membership(profile_trace(ramp(3, 30)), space), domain_error);
}

TEST(ProposalTest, ZeroBoundKeepsProfile) {
  const auto center = ramp(30, 40);
  Rng rng(3);
  EXPECT_EQ(propose_profile(center, tube(center, 15), 10, 0.0, rng), center);
}

TEST(ProposalTest, StaysInsideTubeAndNonNegative) {
  std::vector<double> center;
  for (int t = 0; t < 60; ++t) center.push_back(t < 30 ? t * 0.5 : 15 - (t - 30) * 0.5);
  const auto space = tube(center, 15);
  Rng rng(11);
  auto w = center;
  for (int i = 0; i < 2000; ++i) {
    w = propose_profile(w, space, 10, 5.0, rng);
    ASSERT_TRUE(membership(profile_trace(w), space));
    for (double v : w) ASSERT_GE(v, 0.0);
  }
}

TEST(ProposalTest, SeededRunsAreIdentical) {
  const auto center = ramp(100, 50);
  const auto space = tube(center, 15);
  const auto run = [&] {
    Rng rng(42);
    auto w = center;
    for (int i = 0; i < 50; ++i) w = propose_profile(w, space, 10, 5.0, rng);
    return w;
  };
  const auto a = run(), b = run();
  EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)), 0);
  EXPECT_NE(a, center);
}

TEST(ProposalTest, RejectsProfileOutsideSpace) {
  const auto center = ramp(10, 50);
  Rng rng(1);
  EXPECT_THROW(propose_profile(ramp(10, 80), tube(center, 15), 3, 1.0, rng), domain_error);
}

namespace {

// Model/validator fixture: the robustness is 1 - output; the model claims a
// violation near x = 2 that the validator does not exhibit.
struct Loop {
  std::vector<std::pair<double, double>> learned;
  SurrogateSetup<double, double> setup(bool planted, bool with_validator) {
    SurrogateSetup<double, double> s;
    s.model = [this, planted](const double& x) {
      for (const auto& [lx, ly] : learned)
        if (std::abs(lx - x) < 0.5) return ly;
      return planted && std::abs(x - 2) < 0.5 ? 2.0 : 0.0;
    };
    s.learn = [this](const double& x, const double& y) { learned.emplace_back(x, y); };
    if (with_validator) s.validator = [](const double&) { return 0.0; };
    s.robustness = [](const double&, const double& y) { return 1 - y; };
    s.initial = 0.0;
    s.propose = [](const double& x, Rng& rng) { return x + rng.uniform(-0.5, 0.5); };
    s.max_rounds = 4;
    return s;
  }
};

}  // namespace

TEST(SurrogateLoopTest, ValidatorEqualToModelAgrees) {
  Loop l;
  auto s = l.setup(true, false);
  s.validator = s.model;
  const auto report = surrogate_loop(s, config(2000, 4));
  ASSERT_EQ(report.rounds.size(), 1u);
  EXPECT_EQ(report.rounds[0].outcome, RoundOutcome::agreement);
  EXPECT_TRUE(report.confirmed.has_value());
}

TEST(SurrogateLoopTest, DisagreementTriggersLearningAndSecondRound) {
  Loop l;
  const auto report = surrogate_loop(l.setup(true, true), config(2000, 4));
  ASSERT_GE(report.rounds.size(), 2u);
  EXPECT_EQ(report.rounds[0].outcome, RoundOutcome::disagreement);
  EXPECT_FALSE(l.learned.empty());
  EXPECT_FALSE(report.confirmed.has_value());
}

TEST(SurrogateLoopTest, ModelOnlyAndTimeout) {
  Loop l;
  const auto model_only = surrogate_loop(l.setup(true, false), config(2000, 4));
  ASSERT_EQ(model_only.rounds.size(), 1u);
  EXPECT_EQ(model_only.rounds[0].outcome, RoundOutcome::model_only);
  Loop clean;
  const auto timeout = surrogate_loop(clean.setup(false, true), config(100, 4));
  ASSERT_EQ(timeout.rounds.size(), 1u);
  EXPECT_EQ(timeout.rounds[0].outcome, RoundOutcome::no_counterexample);
  EXPECT_EQ(timeout.rounds[0].model_min_robustness, 1.0);
}
