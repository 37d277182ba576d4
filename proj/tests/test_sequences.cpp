#include <svi/sequences.hpp>
#include <svi/validation.hpp>

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace {

using svi::SequenceKind;
using svi::SequenceSource;

// Bisection on an erfc-based CDF; independent of the rational approximation.
double bisect_quantile(double u) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(InverseNormalCdf, KnownQuantile) {
  EXPECT_NEAR(svi::inverse_normal_cdf(0.975), 1.959963984540054, 1e-12);
  EXPECT_EQ(svi::inverse_normal_cdf(0.5), 0.0);
}

TEST(InverseNormalCdf, MatchesBisectionOracle) {
  for (double u : {1e-12, 1e-8, 1e-4, 0.01, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.9, 0.97575, 0.999,
                   1.0 - 1e-8}) {
    EXPECT_NEAR(svi::inverse_normal_cdf(u), bisect_quantile(u), 1e-9) << "u=" << u;
  }
  svi::Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const double u = rng.uniform_open();
    EXPECT_NEAR(svi::inverse_normal_cdf(u), bisect_quantile(u), 1e-9) << "u=" << u;
  }
}

TEST(InverseNormalCdf, OddSymmetry) {
  svi::Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double u = 0.01 + 0.98 * rng.uniform();
    EXPECT_NEAR(svi::inverse_normal_cdf(1.0 - u), -svi::inverse_normal_cdf(u), 1e-12);
  }
}

TEST(InverseNormalCdf, RejectsOutsideOpenInterval) {
  for (double u : {0.0, 1.0, -0.1, 1.5, std::numeric_limits<double>::quiet_NaN()}) {
    EXPECT_THROW(svi::inverse_normal_cdf(u), svi::DomainError) << u;
  }
}

TEST(Sobol, FirstPointIsCenter) {
  SequenceSource src(SequenceKind::Sobol, 1, 0);
  EXPECT_EQ(src.next_point()[0], 0.5);
}

TEST(Sobol, MatchesReferencePrefix) {
  // Unscrambled Joe-Kuo points 1..8 in dimensions {0, 1, 2, 3, 4, 63}.
  const std::array<std::array<double, 6>, 8> expected = {{
      {0.5, 0.5, 0.5, 0.5, 0.5, 0.5},
      {0.75, 0.25, 0.25, 0.25, 0.75, 0.75},
      {0.25, 0.75, 0.75, 0.75, 0.25, 0.25},
      {0.375, 0.375, 0.625, 0.875, 0.375, 0.125},
      {0.875, 0.875, 0.125, 0.375, 0.875, 0.625},
      {0.625, 0.125, 0.875, 0.625, 0.625, 0.875},
      {0.125, 0.625, 0.375, 0.125, 0.125, 0.375},
      {0.1875, 0.3125, 0.9375, 0.4375, 0.5625, 0.6875},
  }};
  const std::array<int, 6> dims = {0, 1, 2, 3, 4, 63};
  SequenceSource src(SequenceKind::Sobol, 64, 0);
  for (const auto& row : expected) {
    const Eigen::VectorXd x = src.next_point();
    for (std::size_t j = 0; j < dims.size(); ++j) EXPECT_EQ(x[dims[j]], row[j]);
  }
}

TEST(Sobol, MatchesReferenceDeepIndices) {
  const std::array<int, 7> dims = {0, 1, 2, 5, 27, 63, 199};
  const std::vector<std::pair<int, std::array<double, 7>>> expected = {
      {100, {0.4140625, 0.2578125, 0.7734375, 0.7421875, 0.6640625, 0.6484375, 0.1328125}},
      {777,
       {0.6923828125, 0.9365234375, 0.1630859375, 0.3564453125, 0.7802734375, 0.4267578125,
        0.1435546875}},
      {1024,
       {0.00146484375, 0.37646484375, 0.44775390625, 0.84423828125, 0.83935546875,
        0.96630859375, 0.21630859375}},
  };
  SequenceSource src(SequenceKind::Sobol, 200, 0);
  int call = 0;
  for (const auto& [index, row] : expected) {
    Eigen::VectorXd x;
    while (call < index) {
      x = src.next_point();
      ++call;
    }
    for (std::size_t j = 0; j < dims.size(); ++j) EXPECT_EQ(x[dims[j]], row[j]) << index;
  }
}

TEST(Sobol, DimensionLimits) {
  EXPECT_NO_THROW(SequenceSource(SequenceKind::Sobol, 256, 1));
  EXPECT_THROW(SequenceSource(SequenceKind::Sobol, 257, 1), svi::UnsupportedDimension);
  EXPECT_THROW(SequenceSource(SequenceKind::SobolScrambled, 1000, 1), svi::UnsupportedDimension);
  EXPECT_NO_THROW(SequenceSource(SequenceKind::PseudoRandom, 1000, 1));
  EXPECT_NO_THROW(SequenceSource(SequenceKind::Halton, 300, 1));
  for (auto kind : {SequenceKind::PseudoRandom, SequenceKind::Sobol, SequenceKind::Halton}) {
    EXPECT_THROW(SequenceSource(kind, 0, 1), svi::DomainError);
  }
}

TEST(Halton, RadicalInversePrefix) {
  SequenceSource src(SequenceKind::Halton, 3, 0);
  const std::array<std::array<double, 3>, 3> expected = {{
      {0.5, 1.0 / 3.0, 0.2},
      {0.25, 2.0 / 3.0, 0.4},
      {0.75, 1.0 / 9.0, 0.6},
  }};
  for (const auto& row : expected) {
    const Eigen::VectorXd x = src.next_point();
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(x[j], row[static_cast<std::size_t>(j)], 1e-15);
  }
}

class EveryKind : public ::testing::TestWithParam<SequenceKind> {};

TEST_P(EveryKind, PointsStayInsideClampedCube) {
  SequenceSource src(GetParam(), 17, 99);
  const double lo = svi::kUnitEpsilon, hi = 1.0 - svi::kUnitEpsilon;
  for (int i = 0; i < 5000; ++i) {
    const Eigen::VectorXd x = src.next_point();
    ASSERT_EQ(x.size(), 17);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      ASSERT_GE(x[j], lo);
      ASSERT_LE(x[j], hi);
    }
  }
  EXPECT_EQ(src.counter(), 5000u);
}

TEST_P(EveryKind, SameSeedSameStream) {
  SequenceSource a(GetParam(), 9, 1234), b(GetParam(), 9, 1234);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(a.next_point(), b.next_point()) << i;
}

TEST_P(EveryKind, KindNameRoundTrips) {
  EXPECT_EQ(svi::parse_sequence_kind(svi::to_string(GetParam())), GetParam());
}

INSTANTIATE_TEST_SUITE_P(Sequences, EveryKind,
                         ::testing::Values(SequenceKind::PseudoRandom, SequenceKind::Sobol,
                                           SequenceKind::SobolScrambled, SequenceKind::Halton));

TEST(SequenceKindNames, UnknownNameThrows) {
  EXPECT_THROW(svi::parse_sequence_kind("latin-hypercube"), std::invalid_argument);
}

TEST(ScrambledSobol, SeedsGiveDifferentStreams) {
  SequenceSource a(SequenceKind::SobolScrambled, 4, 1), b(SequenceKind::SobolScrambled, 4, 2);
  EXPECT_NE(a.next_point(), b.next_point());
}

TEST(ScrambledSobol, EachCoordinateStaysUniform) {
  // 4096 points per dimension, binned into 16 cells.
  SequenceSource src(SequenceKind::SobolScrambled, 3, 77);
  std::array<std::array<int, 16>, 3> bins{};
  for (int i = 0; i < 4096; ++i) {
    const Eigen::VectorXd x = src.next_point();
    for (int j = 0; j < 3; ++j) ++bins[static_cast<std::size_t>(j)][static_cast<std::size_t>(x[j] * 16)];
  }
  for (const auto& dim : bins) {
    for (int count : dim) EXPECT_NEAR(count, 256, 1);
  }
}

TEST(LowDiscrepancy, IntegratesProductWithLowerVarianceThanPseudoRandom) {
  // E[prod u_j] = 1/16 for d = 4.
  const auto estimate_variance = [](SequenceKind kind) {
    std::vector<double> means;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
      SequenceSource src(kind, 4, 500 + rep);
      double sum = 0.0;
      for (int i = 0; i < 64; ++i) sum += src.next_point().prod();
      means.push_back(sum / 64.0);
    }
    const auto st = svi::mean_stats(means);
    EXPECT_NEAR(st.mean, 1.0 / 16.0, 4.0 * st.standard_error + 1e-3);
    return st.variance;
  };
  EXPECT_LT(estimate_variance(SequenceKind::SobolScrambled),
            estimate_variance(SequenceKind::PseudoRandom));
}

TEST(Rng, NormalDrawsPassKolmogorovSmirnov) {
  svi::Rng rng(8);
  std::vector<double> xs(20000);
  for (double& x : xs) x = rng.normal();
  EXPECT_LT(svi::ks_statistic_normal(xs), svi::ks_critical_value(0.001, xs.size()));
}

TEST(Rng, IndexIsUniformChiSquare) {
  svi::Rng rng(9);
  std::array<double, 3> counts{};
  const int n = 30000;
  for (int i = 0; i < n; ++i) counts[rng.index(3)] += 1.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - n / 3.0) * (c - n / 3.0) / (n / 3.0);
  EXPECT_LT(chi2, 13.816);  // df 2, alpha 0.001
}

TEST(Rng, UniformOpenExcludesEndpoints) {
  svi::Rng rng(10);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(GaussianTransform, RecoversCovariance) {
  Eigen::MatrixXd R(2, 2);
  R << 1.0, 0.5, 0.0, 0.8;
  const Eigen::Vector2d mean(1.0, -2.0);
  const Eigen::MatrixXd target = R.transpose() * R;

  SequenceSource src(SequenceKind::PseudoRandom, 2, 21);
  const int n = 100000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  Eigen::Matrix2d outer = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd z = svi::gaussian_transform(src.next_point(), mean, R);
    sum += z;
    outer += z * z.transpose();
  }
  const Eigen::Vector2d m = sum / n;
  const Eigen::Matrix2d cov = (outer - n * m * m.transpose()) / (n - 1);
  EXPECT_LT((m - mean).norm(), 0.02);
  EXPECT_LT((cov - target).norm(), 0.05);
}

TEST(GaussianTransform, IdentityFactorIsQuantileShift) {
  const Eigen::Vector3d u(0.975, 0.5, 0.025);
  const Eigen::Vector3d mean(1.0, 2.0, 3.0);
  const Eigen::VectorXd z = svi::gaussian_transform(u, mean, Eigen::Matrix3d::Identity());
  EXPECT_NEAR(z[0], 1.0 + 1.959963984540054, 1e-12);
  EXPECT_EQ(z[1], 2.0);
  EXPECT_NEAR(z[2], 3.0 - 1.959963984540054, 1e-12);
}

TEST(GaussianTransform, RejectsBadFactors) {
  const Eigen::Vector2d u(0.3, 0.6), mean(0.0, 0.0);
  Eigen::MatrixXd lower(2, 2);
  lower << 1.0, 0.0, 0.5, 1.0;
  EXPECT_THROW(svi::gaussian_transform(u, mean, lower), svi::DomainError);
  Eigen::MatrixXd singular(2, 2);
  singular << 1.0, 0.0, 0.0, 0.0;
  EXPECT_THROW(svi::gaussian_transform(u, mean, singular), svi::DomainError);
  EXPECT_THROW(svi::gaussian_transform(u, Eigen::Vector3d::Zero(), Eigen::Matrix2d::Identity()),
               svi::ShapeError);
}

}  // namespace
