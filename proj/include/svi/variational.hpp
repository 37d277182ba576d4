#pragma once

// Mean-field Gaussian q(z | lambda) over unconstrained coordinates, and the
// bijection between those coordinates and mixture parameters.

#include <svi/errors.hpp>
#include <svi/gmm.hpp>
#include <svi/sequences.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace svi {

/// lambda = (mean, log_sd), each of length D.
struct VariationalParams {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_sd;

  Eigen::Index dimension() const { return mean.size(); }

  /// Flattened (mean, log_sd), the layout used by score and gradients.
  Eigen::VectorXd flat() const {
    Eigen::VectorXd v(2 * mean.size());
    v << mean, log_sd;
    return v;
  }

  static VariationalParams from_flat(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const Eigen::Index d = v.size() / 2;
    return {v.head(d), v.tail(d)};
  }

  bool operator==(const VariationalParams& other) const {
    return mean.size() == other.mean.size() && log_sd.size() == other.log_sd.size() &&
           mean == other.mean && log_sd == other.log_sd;
  }
};

namespace detail {
inline void check_same_dimension(const VariationalParams& lambda, Eigen::Index n, const char* where) {
  if (lambda.log_sd.size() != lambda.mean.size() || n != lambda.mean.size()) {
    throw ShapeError(std::string(where) + ": dimension mismatch");
  }
}
}  // namespace detail

/// z = mean + exp(log_sd) * Phi^{-1}(u).
inline Eigen::VectorXd sample(const VariationalParams& lambda,
                              const Eigen::Ref<const Eigen::VectorXd>& u) {
  detail::check_same_dimension(lambda, u.size(), "sample");
  Eigen::VectorXd z(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    z[i] = lambda.mean[i] + std::exp(lambda.log_sd[i]) * inverse_normal_cdf(u[i]);
  }
  return z;
}

inline double log_q(const VariationalParams& lambda, const Eigen::Ref<const Eigen::VectorXd>& z) {
  detail::check_same_dimension(lambda, z.size(), "log_q");
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double scaled = (z[i] - lambda.mean[i]) * std::exp(-lambda.log_sd[i]);
    total += -kLogSqrt2Pi - lambda.log_sd[i] - 0.5 * scaled * scaled;
  }
  if (!std::isfinite(total)) throw NumericError("log_q: non-finite value");
  return total;
}

/// Gradient of log q(z | lambda) with respect to (mean, log_sd).
inline Eigen::VectorXd score(const VariationalParams& lambda,
                             const Eigen::Ref<const Eigen::VectorXd>& z) {
  detail::check_same_dimension(lambda, z.size(), "score");
  const Eigen::Index d = z.size();
  Eigen::VectorXd g(2 * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double inv_var = std::exp(-2.0 * lambda.log_sd[i]);
    const double diff = z[i] - lambda.mean[i];
    g[i] = diff * inv_var;
    g[d + i] = diff * diff * inv_var - 1.0;
  }
  return g;
}

/**
 * Unconstrained layout for a K-component, p-dimensional mixture:
 *
 *   [ logits (K-1) | means (K*p, row-major by component) | log sds (K*p) ]
 *
 * Weights are the softmax of the logits with the last logit fixed at 0.
 */
class GmmTransform {
 public:
  GmmTransform(int K, int p) : K_(K), p_(p) {
    if (K < 1 || p < 1) throw DomainError("GmmTransform: K and p must be at least 1");
  }
  explicit GmmTransform(const GmmSpec& spec) : GmmTransform(spec.K, spec.p) {}

  int K() const { return K_; }
  int p() const { return p_; }
  Eigen::Index dimension() const { return K_ * (2 * p_ + 1) - 1; }
  Eigen::Index means_offset() const { return K_ - 1; }
  Eigen::Index log_sds_offset() const { return K_ - 1 + K_ * p_; }

  GmmParams constrain(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    check(z);
    GmmParams theta{Eigen::VectorXd(K_), Eigen::MatrixXd(K_, p_), Eigen::MatrixXd(K_, p_)};
    Eigen::VectorXd logits(K_);
    logits << z.head(K_ - 1), 0.0;
    const double norm = log_sum_exp(logits);
    theta.weights = (logits.array() - norm).exp();
    for (int k = 0; k < K_; ++k) {
      for (int j = 0; j < p_; ++j) {
        theta.means(k, j) = z[means_offset() + k * p_ + j];
        theta.sds(k, j) = std::exp(z[log_sds_offset() + k * p_ + j]);
      }
    }
    return theta;
  }

  Eigen::VectorXd unconstrain(const GmmParams& theta) const {
    if (theta.K() != K_ || theta.p() != p_) throw ShapeError("unconstrain: shape mismatch");
    Eigen::VectorXd z(dimension());
    const double ref = std::log(theta.weights[K_ - 1]);
    for (int k = 0; k + 1 < K_; ++k) z[k] = std::log(theta.weights[k]) - ref;
    for (int k = 0; k < K_; ++k) {
      for (int j = 0; j < p_; ++j) {
        z[means_offset() + k * p_ + j] = theta.means(k, j);
        z[log_sds_offset() + k * p_ + j] = std::log(theta.sds(k, j));
      }
    }
    if (!z.allFinite()) throw NumericError("unconstrain: parameters outside the support");
    return z;
  }

  /// log |d theta / d z|: sum_k log w_k for the reference softmax, plus the
  /// log-sds for the exponential map.
  double log_det_jacobian(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    check(z);
    Eigen::VectorXd logits(K_);
    logits << z.head(K_ - 1), 0.0;
    const double norm = log_sum_exp(logits);
    double total = logits.sum() - K_ * norm;
    total += z.tail(K_ * p_).sum();
    return total;
  }

 private:
  void check(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    if (z.size() != dimension()) {
      throw ShapeError("GmmTransform: expected " + std::to_string(dimension()) +
                       " coordinates, got " + std::to_string(z.size()));
    }
    if (!z.allFinite()) {
      throw NumericError("GmmTransform: non-finite coordinates",
                         std::vector<double>(z.data(), z.data() + z.size()));
    }
  }

  int K_;
  int p_;
};

/// One draw from q in both coordinate systems.
struct ParamDraw {
  Eigen::VectorXd z;
  GmmParams theta;
  double log_det_jacobian;
};

inline ParamDraw sample_params(const VariationalParams& lambda, const GmmTransform& transform,
                               const Eigen::Ref<const Eigen::VectorXd>& u) {
  Eigen::VectorXd z = sample(lambda, u);
  GmmParams theta = transform.constrain(z);
  const double ldj = transform.log_det_jacobian(z);
  return {std::move(z), std::move(theta), ldj};
}

/// n draws from q mapped to mixture parameters, e.g. for DIC.
inline std::vector<GmmParams> posterior_draw_set(const VariationalParams& lambda,
                                                 const GmmTransform& transform, std::size_t n,
                                                 std::uint64_t seed) {
  SequenceSource src(SequenceKind::PseudoRandom, static_cast<std::size_t>(lambda.dimension()), seed);
  std::vector<GmmParams> draws;
  draws.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    draws.push_back(transform.constrain(sample(lambda, src.next_point())));
  }
  return draws;
}

}  // namespace svi
