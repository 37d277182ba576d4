#pragma once

// Accept/reject rules for single-draw updates, temperature schedules and the
// patience counter used for early stopping.

#include <svi/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace svi {

enum class ScheduleKind { Constant, Log, Linear };

inline std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Constant: return "constant";
    case ScheduleKind::Log: return "log";
    case ScheduleKind::Linear: return "linear";
  }
  return "unknown";
}

inline ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "constant") return ScheduleKind::Constant;
  if (name == "log") return ScheduleKind::Log;
  if (name == "linear") return ScheduleKind::Linear;
  throw std::invalid_argument("unknown temperature schedule: " + std::string(name));
}

/// Coefficient used when a schedule kind is chosen without an explicit k.
inline double default_coefficient(ScheduleKind kind) {
  return kind == ScheduleKind::Constant ? 1.5 : 1.0;
}

/// M(t): constant k, k*ln(t) or k*t.
struct TemperatureSchedule {
  ScheduleKind kind = ScheduleKind::Log;
  double k = 1.0;

  void validate() const {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("TemperatureSchedule: k must be positive");
  }

  bool operator==(const TemperatureSchedule&) const = default;
};

inline double temperature(const TemperatureSchedule& schedule, long t) {
  if (t < 1) throw DomainError("temperature: iteration must be >= 1, got " + std::to_string(t));
  const double td = static_cast<double>(t);
  switch (schedule.kind) {
    case ScheduleKind::Constant: return schedule.k;
    case ScheduleKind::Log: return schedule.k * std::log(td);
    case ScheduleKind::Linear: return schedule.k * td;
  }
  return schedule.k;
}

enum class AcceptanceKind { Naive, Metropolis };

struct AcceptanceRule {
  AcceptanceKind kind = AcceptanceKind::Naive;
  TemperatureSchedule schedule;
};

/// Reference value meaning "no previous ELBO yet"; always accepted.
inline constexpr double kNoPreviousElbo = -std::numeric_limits<double>::infinity();

/**
 * Probability of accepting a draw whose ELBO estimate is `elbo_new` given
 * the last accepted estimate `elbo_prev`:
 *
 *   g = M (elbo_new - elbo_prev) / |elbo_prev|
 *   naive:      min(1, max(0, 1 + g))
 *   metropolis: min(1, exp(g))
 *
 * Any non-worsening draw is accepted with probability exactly 1. The
 * magnitude of the reference keeps the rule's direction independent of the
 * sign of the ELBO.
 */
inline double accept_probability(AcceptanceKind kind, double M, double elbo_new, double elbo_prev) {
  if (elbo_prev == kNoPreviousElbo) return 1.0;
  if (std::isnan(elbo_new) || !std::isfinite(elbo_prev)) {
    throw DomainError("accept_probability: ELBO values must be finite");
  }
  if (elbo_prev == 0.0) {
    throw DomainError("accept_probability: reference ELBO is exactly zero");
  }
  if (elbo_new >= elbo_prev) return 1.0;
  if (!(M >= 0.0)) throw DomainError("accept_probability: M must be non-negative");
  const double g = M * (elbo_new - elbo_prev) / std::abs(elbo_prev);
  switch (kind) {
    case AcceptanceKind::Naive: return std::clamp(1.0 + g, 0.0, 1.0);
    case AcceptanceKind::Metropolis: return std::min(1.0, std::exp(g));
  }
  return 0.0;
}

inline double accept_probability(const AcceptanceRule& rule, double M, double elbo_new,
                                 double elbo_prev) {
  return accept_probability(rule.kind, M, elbo_new, elbo_prev);
}

enum class Decision { Accept, Reject };

/// Accept iff u <= accept_probability(...).
inline Decision decide(const AcceptanceRule& rule, double M, double elbo_new, double elbo_prev,
                       double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("decide: u must lie in [0,1]");
  return u <= accept_probability(rule, M, elbo_new, elbo_prev) ? Decision::Accept
                                                              : Decision::Reject;
}

/// Consecutive-rejection counter. Stops once nu reaches patience.
struct PatienceCounter {
  long nu = 0;
  long patience = 10;

  bool operator==(const PatienceCounter&) const = default;
};

struct TickResult {
  PatienceCounter counter;
  bool stop;
};

inline TickResult tick(PatienceCounter counter, Decision decision) {
  counter.nu = (decision == Decision::Accept) ? 0 : counter.nu + 1;
  return {counter, counter.nu >= counter.patience};
}

}  // namespace svi
