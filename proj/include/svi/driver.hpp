#pragma once

// Optimization loop for MCVI(S), QMCVI(S) and the single-draw accept/reject
// variants, plus run summaries.

#include <svi/acceptance.hpp>
#include <svi/errors.hpp>
#include <svi/estimators.hpp>
#include <svi/gmm.hpp>
#include <svi/model.hpp>
#include <svi/sequences.hpp>
#include <svi/variational.hpp>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace svi {

enum class Method { Mcvi, Qmcvi, YoasoviNaive, YoasoviMetropolis };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Mcvi: return "mcvi";
    case Method::Qmcvi: return "qmcvi";
    case Method::YoasoviNaive: return "yoasovi-naive";
    case Method::YoasoviMetropolis: return "yoasovi-metropolis";
  }
  return "unknown";
}

inline Method parse_method(std::string_view name) {
  if (name == "mcvi") return Method::Mcvi;
  if (name == "qmcvi") return Method::Qmcvi;
  if (name == "yoasovi-naive") return Method::YoasoviNaive;
  if (name == "yoasovi-metropolis") return Method::YoasoviMetropolis;
  throw std::invalid_argument("unknown method: " + std::string(name));
}

inline bool is_single_draw(Method m) {
  return m == Method::YoasoviNaive || m == Method::YoasoviMetropolis;
}

/// Samples per iteration used when none is configured.
inline std::size_t default_samples(Method m) {
  switch (m) {
    case Method::Mcvi: return 100;
    case Method::Qmcvi: return 10;
    default: return 1;
  }
}

inline SequenceKind default_sequence(Method m) {
  return m == Method::Qmcvi ? SequenceKind::SobolScrambled : SequenceKind::PseudoRandom;
}

struct RunConfig {
  Method method = Method::YoasoviNaive;
  std::size_t samples = 1;
  double learning_rate = 0.001;
  long max_iters = 500;
  long patience = 10;
  TemperatureSchedule schedule{ScheduleKind::Log, 1.0};
  std::uint64_t seed = 1;
  /// Overrides the method's default point source when set.
  std::optional<SequenceKind> sequence;
  /// When false every record carries elapsed_seconds = 0, making traces
  /// byte-reproducible.
  bool record_time = true;

  SequenceKind sequence_kind() const { return sequence.value_or(default_sequence(method)); }

  void validate() const {
    if (is_single_draw(method) && samples != 1) {
      throw DomainError("RunConfig: single-draw methods require samples = 1");
    }
    if (samples < 1) throw DomainError("RunConfig: samples must be at least 1");
    if (!(learning_rate > 0.0)) throw DomainError("RunConfig: learning rate must be positive");
    if (max_iters < 1) throw DomainError("RunConfig: max_iters must be at least 1");
    if (patience < 1) throw DomainError("RunConfig: patience must be at least 1");
    if (method == Method::Qmcvi && sequence_kind() == SequenceKind::PseudoRandom) {
      throw DomainError("RunConfig: qmcvi needs a low-discrepancy sequence");
    }
    schedule.validate();
  }

  bool operator==(const RunConfig&) const = default;
};

/// Independent sub-streams derived from a run seed.
namespace seed_stream {
inline std::uint64_t draws(std::uint64_t seed) { return splitmix64(seed ^ 0x5eed0001ULL); }
inline std::uint64_t decisions(std::uint64_t seed) { return splitmix64(seed ^ 0x5eed0002ULL); }
inline std::uint64_t init(std::uint64_t seed) { return splitmix64(seed ^ 0x5eed0003ULL); }
inline std::uint64_t posterior(std::uint64_t seed) { return splitmix64(seed ^ 0x5eed0004ULL); }
}  // namespace seed_stream

struct RunRecord {
  long iter;
  double elapsed_seconds;
  double elbo;
  bool accepted;
  double M;

  bool operator==(const RunRecord&) const = default;
};

struct RunSummary {
  long iterations = 0;
  double wall_seconds = 0.0;
  double final_elbo = std::numeric_limits<double>::quiet_NaN();
  double dic = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::size_t density_evaluations = 0;
  std::optional<std::string> error;
};

struct RunTrace {
  std::vector<RunRecord> records;
  RunSummary summary;
  VariationalParams final_params;
};

/// Mean of the last min(10, n) accepted ELBO estimates.
inline double final_elbo(const std::vector<RunRecord>& records, std::size_t window = 10) {
  if (records.empty()) throw DomainError("final_elbo: empty trace");
  double sum = 0.0;
  std::size_t used = 0;
  for (auto it = records.rbegin(); it != records.rend() && used < window; ++it) {
    if (!it->accepted) continue;
    sum += it->elbo;
    ++used;
  }
  if (used == 0) throw DomainError("final_elbo: trace has no accepted iterations");
  return sum / static_cast<double>(used);
}

/**
 * Runs one optimization from `start`.
 *
 * Multi-sample methods update on every iteration. Single-draw methods accept
 * or reject each draw against the last accepted ELBO estimate; a rejected
 * iteration leaves lambda untouched and the run stops once `patience`
 * consecutive draws were rejected (converged) or at max_iters. A numeric
 * failure ends the run early; the partial trace and the last finite lambda
 * are kept and summary.error is set.
 */
template <UnconstrainedModel M>
RunTrace run(const RunConfig& config, const M& model, VariationalParams start) {
  config.validate();
  if (start.dimension() != model.dimension()) throw ShapeError("run: initial lambda dimension");

  using Clock = std::chrono::steady_clock;
  const bool single_draw = is_single_draw(config.method);
  const AcceptanceRule rule{config.method == Method::YoasoviMetropolis ? AcceptanceKind::Metropolis
                                                                       : AcceptanceKind::Naive,
                            config.schedule};

  SequenceSource src(config.sequence_kind(), static_cast<std::size_t>(model.dimension()),
                     seed_stream::draws(config.seed));
  Rng decision_rng(seed_stream::decisions(config.seed));

  RunTrace trace;
  trace.final_params = std::move(start);
  trace.records.reserve(static_cast<std::size_t>(config.max_iters));
  VariationalParams& lambda = trace.final_params;
  PatienceCounter counter{0, config.patience};
  double elbo_prev = kNoPreviousElbo;

  const auto t0 = Clock::now();
  auto elapsed = [&] {
    return config.record_time ? std::chrono::duration<double>(Clock::now() - t0).count() : 0.0;
  };

  for (long t = 1; t <= config.max_iters; ++t) {
    try {
      const GradientSample gs = estimate(lambda, model, src, config.samples);
      trace.summary.density_evaluations += gs.draws_used;
      if (!single_draw) {
        lambda = update_step(lambda, gs.grad, config.learning_rate);
        trace.records.push_back({t, elapsed(), gs.elbo, true, 0.0});
        continue;
      }
      const double m_t = temperature(config.schedule, t);
      const double u = decision_rng.uniform_open();
      const Decision decision = decide(rule, m_t, gs.elbo, elbo_prev, u);
      if (decision == Decision::Accept) {
        lambda = update_step(lambda, gs.grad, config.learning_rate);
        elbo_prev = gs.elbo;
      }
      const auto ticked = tick(counter, decision);
      counter = ticked.counter;
      trace.records.push_back({t, elapsed(), gs.elbo, decision == Decision::Accept, m_t});
      if (ticked.stop) {
        trace.summary.converged = true;
        break;
      }
    } catch (const NumericError& e) {
      trace.summary.error = std::string("iteration ") + std::to_string(t) + ": " + e.what();
      break;
    } catch (const DomainError& e) {
      trace.summary.error = std::string("iteration ") + std::to_string(t) + ": " + e.what();
      break;
    }
  }

  trace.summary.iterations = static_cast<long>(trace.records.size());
  trace.summary.wall_seconds = trace.records.empty() ? 0.0 : trace.records.back().elapsed_seconds;
  bool any_accepted = false;
  for (const auto& r : trace.records) any_accepted = any_accepted || r.accepted;
  if (any_accepted) trace.summary.final_elbo = final_elbo(trace.records);
  return trace;
}

template <UnconstrainedModel M>
RunTrace run(const RunConfig& config, const M& model) {
  Rng init_rng(seed_stream::init(config.seed));
  return run(config, model, initial_params(model, init_rng));
}

/// Number of draws from the final q used for DIC.
inline constexpr std::size_t kDicDraws = 1000;

/// Runs on a mixture model and fills summary.dic from kDicDraws draws of the final q.
inline RunTrace run_gmm(const RunConfig& config, const GmmModel& model) {
  RunTrace trace = run(config, model);
  try {
    const auto draws = posterior_draw_set(trace.final_params, model.transform(), kDicDraws,
                                          seed_stream::posterior(config.seed));
    trace.summary.dic = dic(model.spec(), model.data(), draws);
  } catch (const std::exception& e) {
    if (!trace.summary.error) trace.summary.error = std::string("dic: ") + e.what();
  }
  return trace;
}

}  // namespace svi
