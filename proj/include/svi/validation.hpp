#pragma once

// Numerical checking utilities: central differences, the conjugate
// normal-mean model with its closed-form ELBO, and small statistics helpers.

#include <svi/errors.hpp>
#include <svi/gmm.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace svi {

/// Central-difference gradient of a scalar field.
template <class F>
Eigen::VectorXd finite_diff(F&& f, const Eigen::Ref<const Eigen::VectorXd>& x, double step = 1e-5) {
  if (!(step > 0.0)) throw DomainError("finite_diff: step must be positive");
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double hi = f(probe);
    probe[i] = x[i] - step;
    const double lo = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(hi) || !std::isfinite(lo)) {
      throw NumericError("finite_diff: non-finite function value");
    }
    grad[i] = (hi - lo) / (2.0 * step);
  }
  return grad;
}

/**
 * theta ~ N(0, prior_var), y_i | theta ~ N(theta, lik_var), i = 1..N.
 * Holds only the sufficient statistics (N, sum y, sum y^2).
 */
struct ConjugateOracle {
  double prior_var = 1.0;
  double lik_var = 1.0;
  double n = 0.0;
  double sum_y = 0.0;
  double sum_y2 = 0.0;

  static ConjugateOracle from_data(std::span<const double> y, double prior_var = 1.0,
                                   double lik_var = 1.0) {
    ConjugateOracle o{prior_var, lik_var, static_cast<double>(y.size()), 0.0, 0.0};
    for (double v : y) {
      o.sum_y += v;
      o.sum_y2 += v * v;
    }
    return o;
  }

  double posterior_precision() const { return 1.0 / prior_var + n / lik_var; }
  double posterior_mean() const { return (sum_y / lik_var) / posterior_precision(); }
  double posterior_var() const { return 1.0 / posterior_precision(); }

  /// log p(y) from the marginal y ~ N(0, lik_var I + prior_var 11^T).
  double log_marginal() const {
    const double ratio = n * prior_var / lik_var;
    return -0.5 * n * std::log(2.0 * std::numbers::pi * lik_var) - 0.5 * std::log1p(ratio) -
           0.5 * (sum_y2 / lik_var -
                  (prior_var * sum_y * sum_y / (lik_var * lik_var)) / (1.0 + ratio));
  }

  /// log p(y, theta).
  double log_joint(double theta) const {
    return -0.5 * std::log(2.0 * std::numbers::pi * prior_var) - 0.5 * theta * theta / prior_var -
           0.5 * n * std::log(2.0 * std::numbers::pi * lik_var) -
           0.5 * (sum_y2 - 2.0 * theta * sum_y + n * theta * theta) / lik_var;
  }
};

struct ElboValue {
  double elbo;
  double d_mean;    // dL/dm
  double d_log_sd;  // dL/d(log s)
};

/// Exact ELBO of q = N(m, s^2) on the conjugate model and its gradient in (m, log s).
inline ElboValue closed_form_elbo(const ConjugateOracle& o, double m, double s) {
  if (!(s > 0.0)) throw DomainError("closed_form_elbo: s must be positive");
  const double two_pi = 2.0 * std::numbers::pi;
  const double s2 = s * s;
  const double e_log_prior = -0.5 * std::log(two_pi * o.prior_var) - 0.5 * (m * m + s2) / o.prior_var;
  const double e_log_lik = -0.5 * o.n * std::log(two_pi * o.lik_var) -
                           0.5 * (o.sum_y2 - 2.0 * m * o.sum_y + o.n * (m * m + s2)) / o.lik_var;
  const double entropy = 0.5 * std::log(two_pi * std::numbers::e * s2);
  return {e_log_prior + e_log_lik + entropy,
          -m / o.prior_var + (o.sum_y - o.n * m) / o.lik_var,
          1.0 - s2 * o.posterior_precision()};
}

/// The conjugate model as an UnconstrainedModel (identity transform, D = 1).
class ConjugateNormalModel {
 public:
  explicit ConjugateNormalModel(ConjugateOracle oracle) : oracle_(oracle) {}

  Eigen::Index dimension() const { return 1; }
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    return oracle_.log_joint(z[0]);
  }
  const ConjugateOracle& oracle() const { return oracle_; }

 private:
  ConjugateOracle oracle_;
};

struct MeanStats {
  double mean;
  double variance;        // unbiased sample variance
  double standard_error;  // sqrt(variance / n)
};

inline MeanStats mean_stats(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, var, std::sqrt(var / n)};
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Kolmogorov-Smirnov statistic of a sample against N(0, 1).
inline double ks_statistic_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = standard_normal_cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

/// Asymptotic KS rejection threshold sqrt(-log(alpha/2)/2) / sqrt(n).
inline double ks_critical_value(double alpha, std::size_t n) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

}  // namespace svi
