#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/QR>

#include "spectral_lab/metrics.hpp"
#include "spectral_lab/spectra.hpp"
#include "test_support.hpp"

using namespace spectral_lab;

namespace {

Vector one_hot(Eigen::Index n, Eigen::Index at) {
  Vector v = Vector::Zero(n);
  v[at] = 1.0;
  return v;
}

Vector gaussian_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(HardRank, Examples) {
  EXPECT_EQ(hard_rank({3, 1, 1e-15}, 1e-10), 2u);
  EXPECT_EQ(hard_rank({0, 0, 0}), 0u);
  EXPECT_EQ(hard_rank({}), 0u);
}

TEST(HardRank, RandomMatrixMatchesQrRank) {
  const Matrix w = test_support::gaussian(100, 50, 3);
  Eigen::ColPivHouseholderQR<Matrix> qr(w);
  EXPECT_EQ(hard_rank(singular_values(w)), static_cast<std::size_t>(qr.rank()));
  EXPECT_EQ(hard_rank(singular_values(w)), 50u);
}

TEST(HardRank, DeficientMatrix) {
  Matrix w = test_support::gaussian(40, 10, 4);
  w.col(3) = 2.0 * w.col(1) - w.col(7);
  Eigen::ColPivHouseholderQR<Matrix> qr(w);
  EXPECT_EQ(hard_rank(singular_values(w)), static_cast<std::size_t>(qr.rank()));
  EXPECT_EQ(hard_rank(singular_values(w)), 9u);
}

TEST(MatrixEntropy, Examples) {
  EXPECT_NEAR(matrix_entropy({2, 2, 2, 2}), 1.0, 1e-15);
  EXPECT_EQ(matrix_entropy({5, 0, 0}), 0.0);
  EXPECT_THROW(matrix_entropy({0, 0}), std::invalid_argument);
}

TEST(MatrixEntropy, MatchesDirectFormula) {
  const std::vector<double> nu{4.0, 2.5, 1.0, 0.3};
  double total = 0.0;
  for (double s : nu) total += s * s;
  double h = 0.0;
  for (double s : nu) h -= (s * s / total) * std::log(s * s / total);
  EXPECT_NEAR(matrix_entropy(nu), h / std::log(4.0), 1e-14);
}

TEST(MatrixEntropy, GaussianIsNearOne) {
  const double s = matrix_entropy(singular_values(test_support::gaussian(1000, 500, 8)));
  EXPECT_GE(s, 0.90);
  EXPECT_LT(s, 1.00);
}

TEST(StableRank, Examples) {
  EXPECT_DOUBLE_EQ(stable_rank({2, 1, 1}), 1.5);
  EXPECT_DOUBLE_EQ(stable_rank({3, 3, 3, 3, 3}), 5.0);
  EXPECT_DOUBLE_EQ(stable_rank({7, 0, 0}), 1.0);
  EXPECT_THROW(stable_rank({0, 0}), std::invalid_argument);
}

TEST(StableRank, EqualityOnlyForFlatSpectrum) {
  // Orthonormal columns: all singular values equal.
  Eigen::HouseholderQR<Matrix> qr(test_support::gaussian(30, 8, 2));
  const Matrix q = qr.householderQ() * Matrix::Identity(30, 8);
  const auto flat = singular_values(3.0 * q);
  EXPECT_NEAR(stable_rank(flat), static_cast<double>(hard_rank(flat)), 1e-9);
  const auto nu = singular_values(test_support::gaussian(30, 8, 3));
  EXPECT_LT(stable_rank(nu), static_cast<double>(hard_rank(nu)));
}

TEST(MpSoftRank, Examples) {
  EXPECT_DOUBLE_EQ(mp_soft_rank(2.25, 2.25), 1.0);
  EXPECT_DOUBLE_EQ(mp_soft_rank(2.25, 9.0), 0.25);
  EXPECT_DOUBLE_EQ(mp_soft_rank(0.0, 9.0), 0.0);
  EXPECT_DOUBLE_EQ(mp_soft_rank(3.0, 2.0), 1.0);
  EXPECT_THROW(mp_soft_rank(1.0, 0.0), std::invalid_argument);
}

TEST(VectorEntropy, OneHotBelowGaussianReference) {
  const double hot = vector_entropy(one_hot(64, 5));
  double lowest = INFINITY;
  for (std::uint64_t s = 0; s < 200; ++s) lowest = std::min(lowest, vector_entropy(gaussian_vector(64, s)));
  EXPECT_LT(hot, lowest);
}

TEST(VectorEntropy, ConstantIsZero) {
  EXPECT_EQ(vector_entropy(Vector::Constant(10, 3.0)), 0.0);
}

TEST(VectorEntropy, GaussianMatchesBinnedNormal) {
  const Vector v = gaussian_vector(4096, 12);
  const std::size_t bins = 64;
  // Oracle: normal probabilities over the same bin edges, renormalized to the sample range.
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().mean());
  const double lo = (v.minCoeff() - mean) / sd, hi = (v.maxCoeff() - mean) / sd;
  const double mass = normal_cdf(hi) - normal_cdf(lo);
  double h = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    const double a = lo + (hi - lo) * static_cast<double>(i) / bins;
    const double b = lo + (hi - lo) * static_cast<double>(i + 1) / bins;
    const double p = (normal_cdf(b) - normal_cdf(a)) / mass;
    if (p > 0.0) h -= p * std::log(p);
  }
  EXPECT_NEAR(vector_entropy(v), h, 0.05 * h);
}

TEST(VectorEntropy, RejectsTooFewBins) {
  EXPECT_THROW(vector_entropy(gaussian_vector(10, 1), 1), std::invalid_argument);
}

TEST(LocalizationRatio, Examples) {
  EXPECT_DOUBLE_EQ(localization_ratio(one_hot(16, 3)), 1.0);
  Vector pm(16);
  for (Eigen::Index i = 0; i < 16; ++i) pm[i] = i % 3 ? 1.0 : -1.0;
  EXPECT_DOUBLE_EQ(localization_ratio(pm), 16.0);
  EXPECT_THROW(localization_ratio(Vector::Zero(4)), std::invalid_argument);
}

TEST(ParticipationRatio, Examples) {
  EXPECT_DOUBLE_EQ(participation_ratio(one_hot(16, 3)), 1.0);
  EXPECT_NEAR(participation_ratio(Vector::Constant(16, 0.25)), 2.0, 1e-15);
}

TEST(Metrics, ScaleInvariance) {
  const Matrix w = test_support::gaussian(120, 40, 6);
  const auto nu = singular_values(w);
  const Vector v = gaussian_vector(40, 7);
  for (double c : {1e-6, 0.3, 7.0, 1e5}) {
    const auto scaled = singular_values(c * w);
    EXPECT_EQ(hard_rank(scaled), hard_rank(nu));
    EXPECT_NEAR(matrix_entropy(scaled), matrix_entropy(nu), 1e-10 * matrix_entropy(nu));
    EXPECT_NEAR(stable_rank(scaled), stable_rank(nu), 1e-10 * stable_rank(nu));
    EXPECT_NEAR(localization_ratio(c * v), localization_ratio(v), 1e-10 * localization_ratio(v));
    EXPECT_NEAR(participation_ratio(c * v), participation_ratio(v), 1e-10 * participation_ratio(v));
    EXPECT_NEAR(vector_entropy(c * v), vector_entropy(v), 1e-10 * vector_entropy(v));
  }
}

TEST(Metrics, StableRankNeverExceedsHardRank) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> dim(2, 30);
  for (int t = 0; t < 200; ++t) {
    const int m = dim(rng);
    const auto nu = singular_values(test_support::gaussian(m + dim(rng), m, rng()));
    EXPECT_LE(stable_rank(nu), static_cast<double>(hard_rank(nu)) + 1e-9);
  }
}

TEST(Metrics, CapacityBundle) {
  const auto nu = singular_values(test_support::gaussian(200, 50, 2));
  const CapacityMetrics c = capacity_metrics(nu, 1.5, 3.0);
  EXPECT_EQ(c.hard_rank, 50u);
  EXPECT_DOUBLE_EQ(c.mp_soft_rank, 0.5);
  EXPECT_GE(c.stable_rank, 1.0);
  const CapacityMetrics zero = capacity_metrics({0, 0}, 0.0, 1.0);
  EXPECT_EQ(zero.hard_rank, 0u);
  EXPECT_EQ(zero.stable_rank, 0.0);
}

TEST(Metrics, LocalizedSpikeHasLowerParticipation) {
  // Planted rank-one signal whose right factor lives on 10 coordinates; the
  // spike eigenvector inherits that localization, bulk eigenvectors do not.
  const std::size_t n = 1000, m = 250;
  double spike_pr = 0.0, bulk_pr = 0.0;
  for (std::uint64_t run = 0; run < 10; ++run) {
    Matrix w = test_support::gaussian(n, m, 100 + run);
    std::mt19937_64 rng(200 + run);
    std::normal_distribution<double> normal;
    Vector u(n), v = Vector::Zero(m);
    for (auto& x : u) x = normal(rng);
    for (Eigen::Index k = 0; k < 10; ++k) v[(k * 37 + static_cast<Eigen::Index>(run)) % m] = normal(rng);
    w += 3.0 * std::pow(static_cast<double>(n * m), 0.25) * u.normalized() * v.normalized().transpose();
    const auto pairs = correlation_eigenpairs(w, 1, 10);
    spike_pr += participation_ratio(pairs[0].eigenvector);
    double b = 0.0;
    for (std::size_t i = 1; i < pairs.size(); ++i) b += participation_ratio(pairs[i].eigenvector);
    bulk_pr += b / static_cast<double>(pairs.size() - 1);
  }
  EXPECT_LT(spike_pr / 10.0, bulk_pr / 10.0);
}
