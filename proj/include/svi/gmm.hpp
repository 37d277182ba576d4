#pragma once

// Diagonal-covariance Gaussian mixture: densities, priors, simulation, DIC.

#include <svi/errors.hpp>
#include <svi/sequences.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace svi {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// log(sum(exp(x))) without overflow; -inf for an all -inf input.
template <class Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  const double hi = x.maxCoeff();
  if (!std::isfinite(hi)) return hi;
  return hi + std::log((x.derived().array() - hi).exp().sum());
}

struct GmmSpec {
  int K = 2;
  int p = 2;
  double prior_mean_scale = 10.0;
  double prior_dirichlet_alpha = 1.0;
  double prior_logsd_scale = 1.0;

  /// Number of unconstrained coordinates: K-1 logits, K*p means, K*p log-sds.
  std::size_t unconstrained_dimension() const {
    return static_cast<std::size_t>(K * (2 * p + 1) - 1);
  }

  void validate() const {
    if (K < 1 || p < 1) throw DomainError("GmmSpec: K and p must be at least 1");
    if (!(prior_mean_scale > 0.0) || !(prior_dirichlet_alpha > 0.0) ||
        !(prior_logsd_scale > 0.0)) {
      throw DomainError("GmmSpec: prior scales must be strictly positive");
    }
  }

  bool operator==(const GmmSpec&) const = default;
};

/// Mixture parameters in constrained coordinates. Rows of `means` and `sds`
/// index components.
struct GmmParams {
  Eigen::VectorXd weights;
  Eigen::MatrixXd means;
  Eigen::MatrixXd sds;

  int K() const { return static_cast<int>(weights.size()); }
  int p() const { return static_cast<int>(means.cols()); }

  void validate() const {
    if (means.rows() != weights.size() || sds.rows() != weights.size() ||
        sds.cols() != means.cols()) {
      throw ShapeError("GmmParams: inconsistent component shapes");
    }
    if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
      throw DomainError("GmmParams: weights must be a probability vector");
    }
    if (!(sds.array() > 0.0).all()) throw DomainError("GmmParams: sds must be positive");
    if (!means.allFinite() || !sds.allFinite()) {
      throw NumericError("GmmParams: non-finite means or sds");
    }
  }
};

struct Dataset {
  Eigen::MatrixXd values;  // N x p
  std::string name;

  Eigen::Index N() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }

  void validate() const {
    if (values.rows() < 1) throw DomainError("Dataset '" + name + "' is empty");
    if (!values.allFinite()) throw NumericError("Dataset '" + name + "' has non-finite entries");
  }
};

/// Sum over observations of log sum_k w_k N(y | mu_k, diag(sd_k^2)).
inline double log_likelihood(const Dataset& data, const GmmParams& params) {
  if (data.p() != params.means.cols()) {
    throw ShapeError("log_likelihood: data has " + std::to_string(data.p()) +
                     " columns, model has " + std::to_string(params.means.cols()));
  }
  const Eigen::Index K = params.weights.size();
  const Eigen::Index p = params.means.cols();

  // Per-component constant: log w_k - sum_j log sd_kj - p log sqrt(2 pi)
  Eigen::VectorXd offset(K);
  Eigen::MatrixXd precision = params.sds.array().square().inverse();
  for (Eigen::Index k = 0; k < K; ++k) {
    offset[k] = std::log(params.weights[k]) - params.sds.row(k).array().log().sum() -
                static_cast<double>(p) * kLogSqrt2Pi;
  }

  double total = 0.0;
  Eigen::VectorXd terms(K);
  for (Eigen::Index n = 0; n < data.N(); ++n) {
    const auto y = data.values.row(n);
    for (Eigen::Index k = 0; k < K; ++k) {
      const double quad = ((y - params.means.row(k)).array().square() *
                           precision.row(k).array()).sum();
      terms[k] = offset[k] - 0.5 * quad;
    }
    total += log_sum_exp(terms);
  }
  return total;
}

/**
 * Log prior density of constrained parameters:
 * weights ~ Dirichlet(alpha), means ~ N(0, mean_scale^2) per coordinate and
 * log(sd) ~ N(0, logsd_scale^2) per coordinate. The sd prior is written as a
 * density over sd, i.e. it includes the -log(sd) change-of-variables term.
 */
inline double log_prior(const GmmSpec& spec, const GmmParams& params) {
  const double alpha = spec.prior_dirichlet_alpha;
  const double K = static_cast<double>(params.weights.size());
  double lp = std::lgamma(K * alpha) - K * std::lgamma(alpha);
  if (alpha != 1.0) lp += (alpha - 1.0) * params.weights.array().log().sum();

  const double ms = spec.prior_mean_scale;
  const auto n_means = static_cast<double>(params.means.size());
  lp += -n_means * (kLogSqrt2Pi + std::log(ms)) -
        0.5 * params.means.array().square().sum() / (ms * ms);

  const double ls = spec.prior_logsd_scale;
  const Eigen::ArrayXXd log_sd = params.sds.array().log();
  lp += -n_means * (kLogSqrt2Pi + std::log(ls)) - 0.5 * log_sd.square().sum() / (ls * ls) -
        log_sd.sum();
  return lp;
}

inline double log_joint(const GmmSpec& spec, const Dataset& data, const GmmParams& params) {
  if (data.p() != spec.p || params.K() != spec.K || params.p() != spec.p) {
    throw ShapeError("log_joint: spec, data and parameter shapes disagree");
  }
  const double value = log_likelihood(data, params) + log_prior(spec, params);
  if (!std::isfinite(value)) throw NumericError("log_joint: non-finite log density");
  return value;
}

/// Draws N observations: component ~ weights, then y ~ N(mean_k, diag(sd_k^2)).
inline Dataset simulate(const GmmParams& truth, Eigen::Index N, std::uint64_t seed,
                        std::string name = "simulated") {
  if (N < 1) throw DomainError("simulate: N must be at least 1");
  truth.validate();
  Rng rng(seed);
  Dataset data{Eigen::MatrixXd(N, truth.p()), std::move(name)};
  const Eigen::Index K = truth.weights.size();
  for (Eigen::Index n = 0; n < N; ++n) {
    const double u = rng.uniform();
    Eigen::Index k = 0;
    double cumulative = truth.weights[0];
    while (k + 1 < K && (u >= cumulative || truth.weights[k] == 0.0)) {
      ++k;
      cumulative += truth.weights[k];
    }
    for (Eigen::Index j = 0; j < truth.p(); ++j) {
      data.values(n, j) = rng.normal(truth.means(k, j), truth.sds(k, j));
    }
  }
  return data;
}

/// Deviance -2 log p(y | theta).
inline double deviance(const Dataset& data, const GmmParams& params) {
  return -2.0 * log_likelihood(data, params);
}

/// Component-wise average of parameter draws; weights are renormalized.
inline GmmParams mean_params(const std::vector<GmmParams>& draws) {
  GmmParams avg{Eigen::VectorXd::Zero(draws.front().weights.size()),
                Eigen::MatrixXd::Zero(draws.front().means.rows(), draws.front().means.cols()),
                Eigen::MatrixXd::Zero(draws.front().sds.rows(), draws.front().sds.cols())};
  for (const auto& d : draws) {
    avg.weights += d.weights;
    avg.means += d.means;
    avg.sds += d.sds;
  }
  const double n = static_cast<double>(draws.size());
  avg.weights /= avg.weights.sum();
  avg.means /= n;
  avg.sds /= n;
  return avg;
}

/// DIC = mean deviance + p_D, with p_D = mean deviance - deviance at the mean draw.
inline double dic(const GmmSpec& spec, const Dataset& data, const std::vector<GmmParams>& draws) {
  if (draws.size() < 2) throw DomainError("dic: at least two posterior draws are required");
  if (data.p() != spec.p) throw ShapeError("dic: data dimension disagrees with spec");
  double mean_dev = 0.0;
  for (const auto& d : draws) mean_dev += deviance(data, d);
  mean_dev /= static_cast<double>(draws.size());
  const double p_d = mean_dev - deviance(data, mean_params(draws));
  return mean_dev + p_d;
}

}  // namespace svi
