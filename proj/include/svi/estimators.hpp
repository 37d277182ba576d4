#pragma once

#include <svi/errors.hpp>
#include <svi/model.hpp>
#include <svi/sequences.hpp>
#include <svi/variational.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace svi {

/// Score-function gradient and ELBO estimates built from the same S draws.
struct GradientSample {
  Eigen::VectorXd grad;  // length 2D, layout (mean, log_sd)
  double elbo = 0.0;
  std::size_t draws_used = 0;
};

/**
 * For s = 1..S: z_s = sample(lambda, next_point(src)),
 * w_s = log p(y, T(z_s)) + log|J| - log q(z_s | lambda).
 * Returns grad = mean(score(lambda, z_s) * w_s) and elbo = mean(w_s).
 * Each draw costs exactly one model.log_density call.
 */
template <UnconstrainedModel M>
GradientSample estimate(const VariationalParams& lambda, const M& model, SequenceSource& src,
                        std::size_t S) {
  if (S < 1) throw DomainError("estimate: S must be at least 1");
  if (static_cast<Eigen::Index>(src.dimension()) != lambda.dimension() ||
      lambda.dimension() != model.dimension()) {
    throw ShapeError("estimate: sequence, lambda and model dimensions disagree");
  }
  const Eigen::Index d = lambda.dimension();
  GradientSample out{Eigen::VectorXd::Zero(2 * d), 0.0, S};
  Eigen::VectorXd u(d);
  for (std::size_t s = 0; s < S; ++s) {
    src.next_point(u);
    const Eigen::VectorXd z = sample(lambda, u);
    double w;
    try {
      w = model.log_density(z) - log_q(lambda, z);
    } catch (const NumericError& e) {
      throw NumericError(std::string("estimate: ") + e.what(),
                         std::vector<double>(z.data(), z.data() + z.size()));
    }
    if (!std::isfinite(w)) {
      throw NumericError("estimate: non-finite log-weight",
                         std::vector<double>(z.data(), z.data() + z.size()));
    }
    out.grad += score(lambda, z) * w;
    out.elbo += w;
  }
  const double inv = 1.0 / static_cast<double>(S);
  out.grad *= inv;
  out.elbo *= inv;
  if (!out.grad.allFinite()) throw NumericError("estimate: non-finite gradient");
  return out;
}

/// lambda + rho * grad.
inline VariationalParams update_step(const VariationalParams& lambda,
                                     const Eigen::Ref<const Eigen::VectorXd>& grad, double rho) {
  if (!(rho > 0.0)) throw DomainError("update_step: learning rate must be positive");
  if (grad.size() != 2 * lambda.dimension()) throw ShapeError("update_step: gradient length");
  const Eigen::Index d = lambda.dimension();
  VariationalParams next{lambda.mean + rho * grad.head(d), lambda.log_sd + rho * grad.tail(d)};
  if (!next.mean.allFinite() || !next.log_sd.allFinite()) {
    throw NumericError("update_step: non-finite variational parameters");
  }
  return next;
}

}  // namespace svi
