#pragma once

#include <svi/gmm.hpp>
#include <svi/sequences.hpp>
#include <svi/variational.hpp>

#include <Eigen/Dense>

#include <concepts>
#include <cstddef>
#include <utility>

namespace svi {

/// A target density over unconstrained coordinates: log p(y, T(z)) + log|J_T(z)|.
template <class M>
concept UnconstrainedModel = requires(const M& m, const Eigen::VectorXd& z) {
  { m.dimension() } -> std::convertible_to<Eigen::Index>;
  { m.log_density(z) } -> std::convertible_to<double>;
};

/// Mixture posterior expressed on the unconstrained space of GmmTransform.
class GmmModel {
 public:
  GmmModel(GmmSpec spec, const Dataset& data)
      : spec_(std::move(spec)), data_(&data), transform_(spec_) {
    spec_.validate();
    data.validate();
    if (data.p() != spec_.p) {
      throw ShapeError("GmmModel: dataset has " + std::to_string(data.p()) +
                       " columns but the spec says p = " + std::to_string(spec_.p));
    }
  }

  Eigen::Index dimension() const { return transform_.dimension(); }
  const GmmSpec& spec() const { return spec_; }
  const Dataset& data() const { return *data_; }
  const GmmTransform& transform() const { return transform_; }

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    const GmmParams theta = transform_.constrain(z);
    return log_joint(spec_, *data_, theta) + transform_.log_det_jacobian(z);
  }

  /// Places each component mean on a randomly chosen observation.
  void seed_initial_mean(Rng& rng, Eigen::Ref<Eigen::VectorXd> mean) const {
    for (int k = 0; k < spec_.K; ++k) {
      const auto row = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(data_->N())));
      for (int j = 0; j < spec_.p; ++j) {
        mean[transform_.means_offset() + k * spec_.p + j] = data_->values(row, j);
      }
    }
  }

 private:
  GmmSpec spec_;
  const Dataset* data_;
  GmmTransform transform_;
};

/// Wraps a model and counts log_density calls.
template <UnconstrainedModel M>
class CountingModel {
 public:
  explicit CountingModel(const M& inner) : inner_(&inner) {}

  Eigen::Index dimension() const { return inner_->dimension(); }

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    ++count_;
    return inner_->log_density(z);
  }

  std::size_t evaluations() const { return count_; }
  void reset() { count_ = 0; }
  const M& inner() const { return *inner_; }

 private:
  const M* inner_;
  mutable std::size_t count_ = 0;
};

/**
 * Starting point for lambda: means ~ N(0, 0.1^2), log_sd = -1. Models that
 * provide seed_initial_mean(Rng&, mean) may then overwrite parts of the mean.
 */
template <UnconstrainedModel M>
VariationalParams initial_params(const M& model, Rng& rng) {
  const Eigen::Index d = model.dimension();
  VariationalParams lambda{Eigen::VectorXd(d), Eigen::VectorXd::Constant(d, -1.0)};
  for (Eigen::Index i = 0; i < d; ++i) lambda.mean[i] = rng.normal(0.0, 0.1);
  if constexpr (requires(Rng& r, Eigen::Ref<Eigen::VectorXd> m) { model.seed_initial_mean(r, m); }) {
    model.seed_initial_mean(rng, lambda.mean);
  }
  return lambda;
}

}  // namespace svi
