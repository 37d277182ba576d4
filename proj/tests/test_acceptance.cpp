#include <svi/acceptance.hpp>
#include <svi/sequences.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace {

using svi::AcceptanceKind;
using svi::AcceptanceRule;
using svi::Decision;
using svi::ScheduleKind;
using svi::TemperatureSchedule;

constexpr AcceptanceKind kKinds[] = {AcceptanceKind::Naive, AcceptanceKind::Metropolis};

TEST(Temperature, Schedules) {
  EXPECT_EQ(svi::temperature({ScheduleKind::Log, 1.0}, 1), 0.0);
  EXPECT_EQ(svi::temperature({ScheduleKind::Constant, 1.5}, 1), 1.5);
  EXPECT_EQ(svi::temperature({ScheduleKind::Constant, 1.5}, 9999), 1.5);
  EXPECT_NEAR(svi::temperature({ScheduleKind::Log, 2.0}, 7), 2.0 * std::log(7.0), 1e-15);
  EXPECT_EQ(svi::temperature({ScheduleKind::Linear, 0.5}, 8), 4.0);
}

TEST(Temperature, LogOfESquared) {
  // k log t at the real point t = e^2 gives 4; integer t brackets it.
  const double m7 = svi::temperature({ScheduleKind::Log, 2.0}, 7);
  const double m8 = svi::temperature({ScheduleKind::Log, 2.0}, 8);
  EXPECT_LT(m7, 4.0);
  EXPECT_GT(m8, 4.0);
  EXPECT_NEAR(2.0 * std::log(std::exp(2.0)), 4.0, 1e-15);
}

TEST(Temperature, NondecreasingForLogAndLinear) {
  for (auto kind : {ScheduleKind::Log, ScheduleKind::Linear}) {
    double prev = -1.0;
    for (long t = 1; t <= 5000; ++t) {
      const double m = svi::temperature({kind, 0.7}, t);
      ASSERT_GE(m, prev);
      prev = m;
    }
  }
}

TEST(Temperature, RejectsIterationZero) {
  EXPECT_THROW(svi::temperature({}, 0), svi::DomainError);
  EXPECT_THROW(svi::temperature({}, -3), svi::DomainError);
}

TEST(TemperatureSchedule, Validation) {
  EXPECT_THROW((TemperatureSchedule{ScheduleKind::Log, 0.0}).validate(), svi::DomainError);
  EXPECT_THROW((TemperatureSchedule{ScheduleKind::Log, -1.0}).validate(), svi::DomainError);
  EXPECT_NO_THROW((TemperatureSchedule{ScheduleKind::Constant, 1.5}).validate());
  EXPECT_EQ(svi::default_coefficient(ScheduleKind::Constant), 1.5);
  EXPECT_EQ(svi::default_coefficient(ScheduleKind::Log), 1.0);
  for (auto kind : {ScheduleKind::Constant, ScheduleKind::Log, ScheduleKind::Linear}) {
    EXPECT_EQ(svi::parse_schedule_kind(svi::to_string(kind)), kind);
  }
  EXPECT_THROW(svi::parse_schedule_kind("cosine"), std::invalid_argument);
}

TEST(AcceptProbability, WorkedExample) {
  EXPECT_EQ(svi::accept_probability(AcceptanceKind::Naive, 1.5, -2500.0, -1500.0), 0.0);
  EXPECT_NEAR(svi::accept_probability(AcceptanceKind::Metropolis, 1.5, -2500.0, -1500.0),
              std::exp(-1.0), 1e-12);
  for (auto kind : kKinds) {
    EXPECT_EQ(svi::accept_probability(kind, 1.5, -1500.0, -1500.0), 1.0);
    EXPECT_EQ(svi::accept_probability(kind, 1.5, -1499.0, -1500.0), 1.0);
    EXPECT_EQ(svi::accept_probability(kind, 1.5, 10.0, -1500.0), 1.0);
  }
}

TEST(AcceptProbability, NaiveIntermediateValue) {
  // g = 1.5 * (-500) / 1500 = -0.5
  EXPECT_NEAR(svi::accept_probability(AcceptanceKind::Naive, 1.5, -2000.0, -1500.0), 0.5, 1e-15);
  EXPECT_NEAR(svi::accept_probability(AcceptanceKind::Metropolis, 1.5, -2000.0, -1500.0),
              std::exp(-0.5), 1e-15);
}

TEST(AcceptProbability, FirstIterationAlwaysAccepted) {
  for (auto kind : kKinds) {
    EXPECT_EQ(svi::accept_probability(kind, 100.0, -1e9, svi::kNoPreviousElbo), 1.0);
  }
}

TEST(AcceptProbability, PositiveReferenceUsesMagnitude) {
  // L_prev = 100, L_new = 50, M = 1: g = -0.5 regardless of the sign of L_prev.
  EXPECT_NEAR(svi::accept_probability(AcceptanceKind::Naive, 1.0, 50.0, 100.0), 0.5, 1e-15);
  EXPECT_EQ(svi::accept_probability(AcceptanceKind::Naive, 1.0, 150.0, 100.0), 1.0);
}

TEST(AcceptProbability, DegenerateInputs) {
  for (auto kind : kKinds) {
    EXPECT_THROW(svi::accept_probability(kind, 1.0, -1.0, 0.0), svi::DomainError);
    EXPECT_THROW(svi::accept_probability(kind, 1.0, 1.0, 0.0), svi::DomainError);
    EXPECT_THROW(svi::accept_probability(kind, 1.0, std::nan(""), -1.0), svi::DomainError);
    EXPECT_THROW(svi::accept_probability(kind, 1.0, -1.0, std::nan("")), svi::DomainError);
    EXPECT_THROW(svi::accept_probability(kind, -1.0, -2.0, -1.0), svi::DomainError);
  }
}

TEST(AcceptProbability, ZeroTemperatureAcceptsEverything) {
  for (auto kind : kKinds) EXPECT_EQ(svi::accept_probability(kind, 0.0, -1e6, -1.0), 1.0);
}

TEST(AcceptProbability, PropertyCertaintyAndDominance) {
  svi::Rng rng(401);
  for (int i = 0; i < 20000; ++i) {
    const double M = 10.0 * rng.uniform();
    const double prev = -(1e-3 + 1e4 * rng.uniform());
    const double better = prev + 100.0 * rng.uniform();
    const double worse = prev - 2.0 * std::abs(prev) * rng.uniform_open();
    for (auto kind : kKinds) ASSERT_EQ(svi::accept_probability(kind, M, better, prev), 1.0);
    const double pn = svi::accept_probability(AcceptanceKind::Naive, M, worse, prev);
    const double pm = svi::accept_probability(AcceptanceKind::Metropolis, M, worse, prev);
    ASSERT_LE(pn, pm);
    ASSERT_GE(pn, 0.0);
    ASSERT_LE(pm, 1.0);
  }
}

TEST(AcceptProbability, NaiveIsPiecewiseLinearBelowReference) {
  const double M = 2.0, prev = -400.0;
  const double slope = M / std::abs(prev);
  for (double gap = 0.0; gap <= 300.0; gap += 7.5) {
    const double expected = std::max(0.0, 1.0 - slope * gap);
    EXPECT_NEAR(svi::accept_probability(AcceptanceKind::Naive, M, prev - gap, prev), expected, 1e-14);
  }
}

TEST(AcceptProbability, MonotoneInTimeForEverySchedule) {
  for (auto kind : {ScheduleKind::Log, ScheduleKind::Linear}) {
    for (auto rule : kKinds) {
      double last = 1.0;
      for (long t = 1; t <= 2000; ++t) {
        const double p = svi::accept_probability(rule, svi::temperature({kind, 1.0}, t), -300.0, -100.0);
        ASSERT_LE(p, last);
        last = p;
      }
      EXPECT_LT(last, 0.01);
    }
  }
}

TEST(Decide, ThresholdsOnU) {
  const AcceptanceRule metro{AcceptanceKind::Metropolis, {}};
  EXPECT_EQ(svi::decide(metro, 1.5, -2500.0, -1500.0, 0.3), Decision::Accept);
  EXPECT_EQ(svi::decide(metro, 1.5, -2500.0, -1500.0, 0.4), Decision::Reject);
  const AcceptanceRule naive{AcceptanceKind::Naive, {}};
  EXPECT_EQ(svi::decide(naive, 1.5, -2500.0, -1500.0, 1e-12), Decision::Reject);
  EXPECT_EQ(svi::decide(naive, 1.5, -1000.0, -1500.0, 1.0), Decision::Accept);
  EXPECT_THROW(svi::decide(naive, 1.5, -1000.0, -1500.0, 1.5), svi::DomainError);
  EXPECT_THROW(svi::decide(naive, 1.5, -1000.0, -1500.0, -0.1), svi::DomainError);
  EXPECT_THROW(svi::decide(naive, 1.5, -1000.0, 0.0, 0.5), svi::DomainError);
}

TEST(Decide, AcceptanceFrequencyMatchesProbability) {
  const AcceptanceRule rule{AcceptanceKind::Metropolis, {}};
  svi::Rng rng(402);
  const int n = 100000;
  int accepted = 0;
  for (int i = 0; i < n; ++i) {
    accepted += svi::decide(rule, 1.5, -2500.0, -1500.0, rng.uniform_open()) == Decision::Accept;
  }
  const double p = std::exp(-1.0);
  EXPECT_NEAR(accepted / static_cast<double>(n), p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Tick, Transitions) {
  auto r = svi::tick({9, 10}, Decision::Reject);
  EXPECT_EQ(r.counter.nu, 10);
  EXPECT_TRUE(r.stop);
  r = svi::tick({9, 10}, Decision::Accept);
  EXPECT_EQ(r.counter.nu, 0);
  EXPECT_FALSE(r.stop);
  r = svi::tick({0, 10}, Decision::Reject);
  EXPECT_EQ(r.counter.nu, 1);
  EXPECT_FALSE(r.stop);
  EXPECT_TRUE(svi::tick({0, 1}, Decision::Reject).stop);
}

TEST(Tick, CounterEqualsTrailingRejectionRun) {
  svi::Rng rng(403);
  for (int trial = 0; trial < 200; ++trial) {
    svi::PatienceCounter c{0, 1000000};
    std::vector<Decision> history;
    for (int i = 0; i < 60; ++i) {
      const Decision d = rng.uniform() < 0.7 ? Decision::Reject : Decision::Accept;
      history.push_back(d);
      c = svi::tick(c, d).counter;
      long trailing = 0;
      for (auto it = history.rbegin(); it != history.rend() && *it == Decision::Reject; ++it) ++trailing;
      ASSERT_EQ(c.nu, trailing);
    }
  }
}

}  // namespace
