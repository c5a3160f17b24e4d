#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tvselect/basis.hpp"
#include "tvselect/quadrature.hpp"

using namespace tvselect;

namespace {

CenteredSplineBasis<double> cubic(int K) { return build_basis<double>(SplineConfig{3, K}); }

// Greville abscissae: t = sum_l xi_l B_l(t) for a clamped basis.
Eigen::VectorXd greville(const CenteredSplineBasis<double>& b) {
  const int d = b.degree();
  Eigen::VectorXd xi(b.size());
  for (int l = 0; l < b.size(); ++l) xi(l) = b.knots().segment(l + 1, d).mean();
  return xi;
}

}  // namespace

TEST(Quadrature, ExactForPolynomialsUpToDegree2nMinus1) {
  for (int n = 1; n <= 8; ++n) {
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      const double got = integrate_gauss<double>([&](double t) { return std::pow(t, deg); }, 0.0, 1.0, n);
      EXPECT_NEAR(got, 1.0 / (deg + 1), 1e-14) << "n=" << n << " deg=" << deg;
    }
  }
}

TEST(Quadrature, WeightsSumToTwo) {
  const auto [x, w] = gauss_legendre<double>(7);
  EXPECT_NEAR(w.sum(), 2.0, 1e-14);
  EXPECT_NEAR(x.sum(), 0.0, 1e-14);
}

TEST(SplineConfig, BasisSizeIsKPlusDegreePlusOne) {
  EXPECT_EQ((SplineConfig{3, 0}.num_basis()), 4);
  EXPECT_EQ((SplineConfig{3, 4}.num_basis()), 8);
  EXPECT_EQ((SplineConfig{3, 6}.num_basis()), 10);
  EXPECT_EQ((SplineConfig{3, 8}.num_basis()), 12);
  EXPECT_EQ(cubic(4).size(), 8);
}

TEST(SplineConfig, RejectsBadDegreeAndKnotCount) {
  EXPECT_THROW(validate(SplineConfig{-1, 4}), ConfigError);
  EXPECT_THROW(validate(SplineConfig{11, 4}), ConfigError);
  EXPECT_THROW(validate(SplineConfig{3, -1}), ConfigError);
}

TEST(Knots, EquallySpacedInterior) {
  const auto b = cubic(4);
  ASSERT_EQ(b.interior_knots().size(), 4);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(b.interior_knots()(j), 0.2 * (j + 1), 1e-15);
}

TEST(Knots, QuantilesOfObservedTimes) {
  std::vector<double> times;
  for (int i = 0; i <= 100; ++i) times.push_back(i / 100.0);
  const auto k = place_knots<double>(SplineConfig{3, 3, KnotPlacement::TimeQuantiles},
                                     std::span<const double>(times));
  EXPECT_NEAR(k(0), 0.25, 1e-12);
  EXPECT_NEAR(k(1), 0.50, 1e-12);
  EXPECT_NEAR(k(2), 0.75, 1e-12);
}

TEST(Knots, QuantilesNeedEnoughDistinctTimes) {
  const std::vector<double> times = {0.2, 0.2, 0.5, 0.5};
  EXPECT_THROW(place_knots<double>(SplineConfig{3, 4, KnotPlacement::TimeQuantiles},
                                   std::span<const double>(times)),
               DegenerateDesignError);
}

TEST(Knots, InteriorKnotsMustBeInsideAndIncreasing) {
  EXPECT_THROW(CenteredSplineBasis<double>(SplineConfig{3, 2}, Eigen::Vector2d(0.5, 0.4)), ConfigError);
  EXPECT_THROW(CenteredSplineBasis<double>(SplineConfig{3, 2}, Eigen::Vector2d(0.0, 0.4)), ConfigError);
  EXPECT_THROW(CenteredSplineBasis<double>(SplineConfig{3, 2}, Eigen::Vector2d(0.5, 1.0)), ConfigError);
}

TEST(Basis, NoInteriorKnotsGivesBernsteinPolynomials) {
  const auto b = cubic(0);
  const Eigen::VectorXd at0 = b.eval_raw(0.0);
  EXPECT_TRUE(at0.isApprox(Eigen::Vector4d(1, 0, 0, 0)));
  const Eigen::VectorXd mid = b.eval_raw(0.5);
  const Eigen::Vector4d expected(0.125, 0.375, 0.375, 0.125);
  EXPECT_LT((mid - expected).cwiseAbs().maxCoeff(), 1e-15);
  for (double t : {0.1, 0.37, 0.9}) {
    const double s = 1 - t;
    const Eigen::Vector4d bern(s * s * s, 3 * t * s * s, 3 * t * t * s, t * t * t);
    EXPECT_LT((b.eval_raw(t) - bern).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Basis, PartitionOfUnityIncludingEndpoints) {
  for (int K : {0, 1, 4, 8}) {
    const auto b = cubic(K);
    for (int g = 0; g <= 500; ++g) {
      const Eigen::VectorXd v = b.eval_raw(g / 500.0);
      EXPECT_NEAR(v.sum(), 1.0, 1e-12);
      EXPECT_GE(v.minCoeff(), 0.0);
    }
  }
}

TEST(Basis, RightEndpointBelongsToLastFunction) {
  const auto b = cubic(4);
  const Eigen::VectorXd v = b.eval_raw(1.0);
  EXPECT_DOUBLE_EQ(v(b.size() - 1), 1.0);
}

TEST(Basis, OutsideUnitIntervalIsDomainError) {
  const auto b = cubic(4);
  EXPECT_THROW(b.eval_raw(-1e-9), DomainError);
  EXPECT_THROW(b.eval_centered(1.5), DomainError);
}

TEST(Basis, MeansAreInsideUnitIntervalAndSumToOne) {
  for (int K : {0, 2, 4, 7}) {
    const auto b = cubic(K);
    EXPECT_NEAR(b.means().sum(), 1.0, 1e-13);
    EXPECT_GT(b.means().minCoeff(), 0.0);
    EXPECT_LT(b.means().maxCoeff(), 1.0);
  }
  const auto bern = cubic(0);
  for (int l = 0; l < 4; ++l) EXPECT_NEAR(bern.means()(l), 0.25, 1e-15);
}

TEST(Basis, MeansMatchFineQuadrature) {
  const auto b = build_basis<double>(SplineConfig{3, 3}, {});
  for (int l = 0; l < b.size(); ++l) {
    const double m = testing_support::integrate_fine([&](double t) { return b.eval_raw(t)(l); });
    EXPECT_NEAR(b.means()(l), m, 1e-10);
  }
}

TEST(CenteredBasis, FirstEntryAtZeroForBernstein) {
  EXPECT_NEAR(cubic(0).eval_centered(0.0)(0), 0.75, 1e-15);
}

TEST(CenteredBasis, EntriesSumToZero) {
  const auto b = cubic(5);
  for (double t : {0.0, 0.13, 0.5, 0.77, 1.0}) EXPECT_NEAR(b.eval_centered(t).sum(), 0.0, 1e-13);
}

TEST(CenteredBasis, SpannedFunctionsIntegrateToZero) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int K : {0, 3, 6}) {
    std::vector<double> times(200);
    std::uniform_real_distribution<double> u(0, 1);
    for (double& t : times) t = u(rng) * u(rng);
    const auto b = build_basis<double>(SplineConfig{3, K, KnotPlacement::TimeQuantiles},
                                       std::span<const double>(times));
    Eigen::VectorXd v(b.size());
    for (int l = 0; l < b.size(); ++l) v(l) = normal(rng);
    const double integral = testing_support::integrate_fine([&](double t) { return b.eval_centered(t).dot(v); });
    EXPECT_LT(std::abs(integral), 1e-10);
  }
}

TEST(Derivatives, MatchFiniteDifferences) {
  const auto b = cubic(4);
  const double h = 1e-5;
  for (double t : {0.05, 0.3, 0.51, 0.93}) {
    const Eigen::VectorXd d1 = (b.eval_raw(t + h) - b.eval_raw(t - h)) / (2 * h);
    EXPECT_LT((b.eval_derivative(t, 1) - d1).cwiseAbs().maxCoeff(), 1e-6);
    const Eigen::VectorXd d2 = (b.eval_derivative(t + h, 1) - b.eval_derivative(t - h, 1)) / (2 * h);
    EXPECT_LT((b.eval_derivative(t, 2) - d2).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(Derivatives, OrderAboveDegreeIsZero) {
  EXPECT_TRUE(cubic(2).eval_derivative(0.4, 4).isZero(0));
}

TEST(Roughness, SymmetricPositiveSemidefinite) {
  const auto b = cubic(6);
  const auto& om = b.roughness();
  EXPECT_LT((om - om.transpose()).cwiseAbs().maxCoeff(), 1e-15 * om.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(om);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * eig.eigenvalues().maxCoeff());
}

TEST(Roughness, LinearFunctionsAreInTheNullspace) {
  for (int K : {0, 2, 5}) {
    const auto b = cubic(K);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(b.size());
    const Eigen::VectorXd line = 2.0 * ones - 3.0 * greville(b);
    // The Greville combination reproduces t exactly.
    for (double t : {0.0, 0.4, 1.0}) EXPECT_NEAR(b.eval_raw(t).dot(greville(b)), t, 1e-14);
    EXPECT_LT((b.roughness() * line).norm(), 1e-9 * b.roughness().norm());
    EXPECT_NEAR(roughness_quadratic_form(b, line), 0.0, 1e-8);
  }
}

TEST(Roughness, RankIsQMinusTwoForCubic) {
  for (int K : {0, 1, 4, 8}) {
    const auto b = cubic(K);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b.roughness());
    const double emax = eig.eigenvalues().maxCoeff();
    EXPECT_EQ((eig.eigenvalues().array() > 1e-9 * emax).count(), b.size() - 2) << "K=" << K;
  }
}

TEST(Roughness, AgreesWithFiniteDifferenceCurvature) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int K : {0, 4, 8}) {
    const auto b = cubic(K);
    for (int rep = 0; rep < 3; ++rep) {
      Eigen::VectorXd v(b.size());
      for (int l = 0; l < b.size(); ++l) v(l) = normal(rng);
      const double fd = testing_support::fd_roughness([&](double t) { return b.eval_centered(t).dot(v); }, 10000);
      EXPECT_NEAR(roughness_quadratic_form(b, v) / fd, 1.0, 0.01);
    }
  }
}

TEST(Roughness, ExactQuadratureAgreesWithOverIntegration) {
  const auto b = cubic(5);
  EXPECT_LT((b.roughness() - b.roughness_matrix(10)).cwiseAbs().maxCoeff(), 1e-9 * b.roughness().norm());
}

TEST(Roughness, QuadraticFormEdgeCases) {
  const auto b = cubic(4);
  EXPECT_EQ(roughness_quadratic_form(b, Eigen::VectorXd::Zero(8)), 0.0);
  EXPECT_THROW(roughness_quadratic_form(b, Eigen::VectorXd::Zero(7)), DimensionError);
}

TEST(Roughness, VanishesBelowDegreeTwo) {
  EXPECT_TRUE(build_basis<double>(SplineConfig{1, 3}).roughness().isZero(0));
}

TEST(Basis, WorksInLongDouble) {
  const auto b = build_basis<long double>(SplineConfig{3, 0});
  const auto v = b.eval_raw(0.5L);
  EXPECT_NEAR(static_cast<double>(v(1)), 0.375, 1e-18);
}

TEST(KnotPlacementNames, RoundTrip) {
  for (auto p : {KnotPlacement::EquallySpaced, KnotPlacement::TimeQuantiles})
    EXPECT_EQ(knot_placement_from_string(to_string(p)), p);
  EXPECT_THROW(knot_placement_from_string("uniform"), ConfigError);
}
