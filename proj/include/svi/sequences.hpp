#pragma once

// Uniform point streams on the open unit hypercube (pseudo-random, Sobol,
// Halton) and the maps that turn them into Gaussian draws.

#include <svi/detail/sobol_directions.hpp>
#include <svi/errors.hpp>

#include <Eigen/Dense>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace svi {

/// Lower clamp applied to every emitted coordinate; the upper clamp is 1 - kUnitEpsilon.
inline constexpr double kUnitEpsilon = 0x1p-43;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double clamp_unit(double u) noexcept {
  return std::fmin(std::fmax(u, kUnitEpsilon), 1.0 - kUnitEpsilon);
}

/**
 * Inverse of the standard normal CDF.
 *
 * Acklam's rational approximation (relative error ~1e-9) followed by one
 * Halley step against std::erfc, which brings the result to near machine
 * precision over the whole open interval.
 */
inline double inverse_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw DomainError("inverse_normal_cdf: argument must lie in (0,1), got " +
                      std::to_string(u));
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (u < p_low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - p_low) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement on e = Phi(x) - u, computed from the tail that avoids
  // cancellation (1 - u is exact for u >= 0.5).
  constexpr double sqrt_2pi = 2.50662827463100050242;
  const double e = (u <= 0.5) ? 0.5 * std::erfc(-x / std::numbers::sqrt2) - u
                              : (1.0 - u) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  const double step = e * sqrt_2pi * std::exp(0.5 * x * x);
  return x - step / (1.0 + 0.5 * x * step);
}

/// Pseudo-random generator with bit-reproducible uniform and normal draws.
/// Normals go through inverse_normal_cdf so streams do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }

  /// Uniform on the clamped open interval.
  double uniform_open() { return clamp_unit(uniform()); }

  double normal() { return inverse_normal_cdf(uniform_open()); }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

enum class SequenceKind { PseudoRandom, Sobol, SobolScrambled, Halton };

inline std::string_view to_string(SequenceKind kind) {
  switch (kind) {
    case SequenceKind::PseudoRandom: return "pseudo-random";
    case SequenceKind::Sobol: return "sobol";
    case SequenceKind::SobolScrambled: return "sobol-scrambled";
    case SequenceKind::Halton: return "halton";
  }
  return "unknown";
}

inline SequenceKind parse_sequence_kind(std::string_view name) {
  if (name == "pseudo-random") return SequenceKind::PseudoRandom;
  if (name == "sobol") return SequenceKind::Sobol;
  if (name == "sobol-scrambled") return SequenceKind::SobolScrambled;
  if (name == "halton") return SequenceKind::Halton;
  throw std::invalid_argument("unknown sequence kind: " + std::string(name));
}

namespace detail {

inline std::vector<std::uint32_t> first_primes(std::size_t count) {
  std::vector<std::uint32_t> primes;
  for (std::uint32_t n = 2; primes.size() < count; ++n) {
    bool prime = true;
    for (std::uint32_t p : primes) {
      if (p * p > n) break;
      if (n % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(n);
  }
  return primes;
}

inline double radical_inverse(std::uint64_t n, std::uint32_t base) {
  const double inv_base = 1.0 / base;
  double scale = inv_base;
  double result = 0.0;
  while (n > 0) {
    result += static_cast<double>(n % base) * scale;
    n /= base;
    scale *= inv_base;
  }
  return result;
}

}  // namespace detail

/**
 * Stateful stream of points in (0,1)^dimension.
 *
 * Sobol points follow the Gray-code ordering of the Joe-Kuo construction
 * and skip the origin, so the first point is (0.5, ..., 0.5). The scrambled
 * variant XORs every coordinate with a per-dimension 32-bit mask drawn from
 * the seed. Halton points use the first `dimension` primes and start at
 * index 1; the seed does not affect them.
 */
class SequenceSource {
 public:
  static constexpr std::size_t kMaxSobolDimension = detail::kSobolMaxDimension;

  SequenceSource(SequenceKind kind, std::size_t dimension, std::uint64_t seed)
      : kind_(kind), dimension_(dimension), seed_(seed), rng_(seed) {
    if (dimension == 0) {
      throw DomainError("SequenceSource: dimension must be at least 1");
    }
    switch (kind) {
      case SequenceKind::Sobol:
      case SequenceKind::SobolScrambled:
        init_sobol();
        break;
      case SequenceKind::Halton:
        primes_ = detail::first_primes(dimension);
        break;
      case SequenceKind::PseudoRandom:
        break;
    }
  }

  SequenceKind kind() const noexcept { return kind_; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  Eigen::VectorXd next_point() {
    Eigen::VectorXd u(static_cast<Eigen::Index>(dimension_));
    next_point(u);
    return u;
  }

  void next_point(Eigen::Ref<Eigen::VectorXd> u) {
    if (static_cast<std::size_t>(u.size()) != dimension_) {
      throw ShapeError("SequenceSource::next_point: output has wrong dimension");
    }
    const std::uint64_t n = ++counter_;
    switch (kind_) {
      case SequenceKind::PseudoRandom:
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng_.uniform_open();
        break;
      case SequenceKind::Sobol:
      case SequenceKind::SobolScrambled: {
        if (n >> 32) throw std::overflow_error("Sobol sequence exhausted (2^32 points)");
        const int bit = std::countr_zero(n);
        for (std::size_t j = 0; j < dimension_; ++j) {
          state_[j] ^= directions_[j * kBits + static_cast<std::size_t>(bit)];
          const std::uint32_t x = state_[j] ^ masks_[j];
          u[static_cast<Eigen::Index>(j)] = clamp_unit(static_cast<double>(x) * 0x1p-32);
        }
        break;
      }
      case SequenceKind::Halton:
        for (std::size_t j = 0; j < dimension_; ++j) {
          u[static_cast<Eigen::Index>(j)] = clamp_unit(detail::radical_inverse(n, primes_[j]));
        }
        break;
    }
  }

 private:
  static constexpr std::size_t kBits = 32;

  void init_sobol() {
    if (dimension_ > kMaxSobolDimension) {
      throw UnsupportedDimension("Sobol sequence supports at most " +
                                 std::to_string(kMaxSobolDimension) +
                                 " dimensions, requested " + std::to_string(dimension_));
    }
    directions_.assign(dimension_ * kBits, 0);
    state_.assign(dimension_, 0);
    masks_.assign(dimension_, 0);

    for (std::size_t k = 0; k < kBits; ++k) directions_[k] = 1u << (31 - k);

    for (std::size_t j = 1; j < dimension_; ++j) {
      const auto& poly = detail::kSobolPolynomials[j - 1];
      const std::size_t s = poly.degree;
      std::uint32_t* v = &directions_[j * kBits];
      for (std::size_t k = 0; k < s; ++k) {
        v[k] = static_cast<std::uint32_t>(poly.m[k]) << (31 - k);
      }
      for (std::size_t k = s; k < kBits; ++k) {
        v[k] = v[k - s] ^ (v[k - s] >> s);
        for (std::size_t l = 1; l < s; ++l) {
          if ((poly.interior >> (s - 1 - l)) & 1u) v[k] ^= v[k - l];
        }
      }
    }

    if (kind_ == SequenceKind::SobolScrambled) {
      for (auto& mask : masks_) mask = static_cast<std::uint32_t>(rng_.bits() >> 32);
    }
  }

  SequenceKind kind_;
  std::size_t dimension_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  Rng rng_;
  std::vector<std::uint32_t> directions_;
  std::vector<std::uint32_t> state_;
  std::vector<std::uint32_t> masks_;
  std::vector<std::uint32_t> primes_;
};

/**
 * Maps a unit-hypercube point to N(mean, R^T R): z = Phi^{-1}(u) R + mean,
 * with R upper-triangular (the Cholesky factor of the covariance).
 */
inline Eigen::VectorXd gaussian_transform(const Eigen::Ref<const Eigen::VectorXd>& u,
                                          const Eigen::Ref<const Eigen::VectorXd>& mean,
                                          const Eigen::Ref<const Eigen::MatrixXd>& cov_factor) {
  const Eigen::Index d = u.size();
  if (mean.size() != d || cov_factor.rows() != d || cov_factor.cols() != d) {
    throw ShapeError("gaussian_transform: dimensions of u, mean and factor disagree");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(cov_factor(i, i) > 0.0)) {
      throw DomainError("gaussian_transform: factor diagonal must be positive");
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      if (cov_factor(i, j) != 0.0) {
        throw DomainError("gaussian_transform: factor must be upper-triangular");
      }
    }
  }
  Eigen::VectorXd z = u.unaryExpr([](double v) { return inverse_normal_cdf(v); });
  return cov_factor.transpose().triangularView<Eigen::Lower>() * z + mean;
}

}  // namespace svi
