#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "spectral_lab/heavy_tail.hpp"
#include "spectral_lab/random.hpp"
#include "spectral_lab/spectra.hpp"

using namespace spectral_lab;

namespace {

// Largest eigenvalue of W^T W / N by power iteration; an oracle independent of the SVD path.
double power_lambda_max(const Matrix& w) {
  Vector v = Vector::Ones(w.cols()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Vector next = w.transpose() * (w * v);
    const double estimate = v.dot(next) / static_cast<double>(w.rows());
    v = next.normalized();
    if (std::abs(estimate - lambda) <= 1e-12 * estimate) return estimate;
    lambda = estimate;
  }
  return lambda;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) xm += x[i] / x.size(), ym += y[i] / y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - xm) * (y[i] - ym), sxx += (x[i] - xm) * (x[i] - xm);
  return sxy / sxx;
}

}  // namespace

TEST(ParetoMatrix, MeanAbsoluteEntry) {
  const Matrix w = sample_pareto_matrix(1000, 1000, 3.0, 1);
  EXPECT_NEAR(w.cwiseAbs().mean(), 3.0 / 2.0, 0.05);
}

TEST(ParetoMatrix, TailProbability) {
  const Matrix w = sample_pareto_matrix(1000, 1000, 1.0, 2);
  const double ccdf = static_cast<double>((w.array().abs() > 10.0).count()) / static_cast<double>(w.size());
  EXPECT_NEAR(ccdf, 0.1, 0.01);
  EXPECT_GE(w.cwiseAbs().minCoeff(), 1.0);
}

TEST(ParetoMatrix, SymmetricSigns) {
  const Matrix w = sample_pareto_matrix(500, 500, 2.5, 3);
  const double positive = static_cast<double>((w.array() > 0.0).count()) / static_cast<double>(w.size());
  EXPECT_NEAR(positive, 0.5, 0.005);
}

TEST(ParetoMatrix, SeedReproducible) {
  EXPECT_TRUE((sample_pareto_matrix(20, 10, 1.5, 9).array() == sample_pareto_matrix(20, 10, 1.5, 9).array()).all());
  EXPECT_FALSE((sample_pareto_matrix(20, 10, 1.5, 9).array() == sample_pareto_matrix(20, 10, 1.5, 10).array()).all());
  EXPECT_THROW(sample_pareto_matrix(2, 2, 0.0, 1), std::invalid_argument);
}

TEST(TheoreticalAlpha, Examples) {
  EXPECT_EQ(theoretical_alpha(1.0).alpha, 1.5);
  EXPECT_EQ(theoretical_alpha(3.0).alpha, 2.5);
  const TheoreticalAlpha corner = theoretical_alpha(4.0);
  EXPECT_EQ(corner.alpha, 3.0);
  EXPECT_TRUE(corner.corner_case);
  EXPECT_TRUE(theoretical_alpha(2.0).corner_case);
  EXPECT_FALSE(theoretical_alpha(3.0).corner_case);
  EXPECT_TRUE(theoretical_alpha(3.0).in_range);
  EXPECT_FALSE(theoretical_alpha(5.0).in_range);
}

TEST(UniversalityClass, BoundariesAreExclusive) {
  EXPECT_EQ(universality_class(1.0), UniversalityClass::VERY_HEAVY);
  EXPECT_EQ(universality_class(3.0), UniversalityClass::MODERATELY_HEAVY);
  EXPECT_EQ(universality_class(5.0), UniversalityClass::WEAKLY_HEAVY);
  EXPECT_EQ(universality_class(std::numeric_limits<double>::infinity()), UniversalityClass::GAUSSIAN);
  EXPECT_FALSE(universality_class(2.0).has_value());
  EXPECT_FALSE(universality_class(4.0).has_value());
}

TEST(MuFromAlpha, Examples) {
  const MuEstimate very = mu_from_alpha(1.5);
  ASSERT_TRUE(very.mu.has_value());
  EXPECT_DOUBLE_EQ(*very.mu, 1.0);
  EXPECT_EQ(very.universality, UniversalityClass::VERY_HEAVY);
  EXPECT_TRUE(very.reliable);

  const MuEstimate moderate = mu_from_alpha(3.02);
  EXPECT_EQ(moderate.universality, UniversalityClass::MODERATELY_HEAVY);
  EXPECT_FALSE(moderate.mu.has_value());
  EXPECT_FALSE(moderate.note.empty());

  const MuEstimate weak = mu_from_alpha(6.0);
  EXPECT_FALSE(weak.reliable);
  EXPECT_FALSE(weak.mu.has_value());
}

TEST(MuFromAlpha, InvertsCalibration) {
  AlphaMuCalibration cal;
  cal.a = 0.8;
  cal.b = 0.9;
  const MuEstimate est = mu_from_alpha(3.02, &cal);
  ASSERT_TRUE(est.mu.has_value());
  EXPECT_NEAR(*est.mu, (3.02 - 0.9) / 0.8, 1e-12);
  EXPECT_EQ(est.universality, UniversalityClass::MODERATELY_HEAVY);
}

TEST(FrechetScale, ExponentArithmetic) {
  EXPECT_NEAR(frechet_lambda_max_scale(1000, 4.0, 4.0), std::pow(0.25, 0.5), 1e-15);
  EXPECT_NEAR(frechet_lambda_max_scale(2000, 2.0, 2.0) / frechet_lambda_max_scale(1000, 2.0, 2.0), 2.0, 1e-12);
  EXPECT_NEAR(frechet_lambda_max_scale(500, 2.0, 1.0), std::pow(500.0, 3.0) * 2.0, 1e-6);
}

TEST(FrechetScale, EmpiricalGrowthExponent) {
  // Mean log lambda_max; lambda_max itself has no finite mean at mu = 1.
  std::vector<double> x, y;
  const int runs = 60;
  for (std::size_t m : {250, 500, 1000}) {
    double s = 0.0;
    for (int r = 0; r < runs; ++r) {
      const Matrix w = sample_pareto_matrix(2 * m, m, 1.0, derive_seed(m, r));
      s += std::log(power_lambda_max(w));
    }
    x.push_back(std::log(static_cast<double>(m)));
    y.push_back(s / runs);
  }
  EXPECT_NEAR(slope(x, y), 3.0, 0.6);
}

TEST(FrechetScale, PowerIterationAgreesWithEsd) {
  const Matrix w = sample_pareto_matrix(400, 200, 1.0, 4);
  EXPECT_NEAR(power_lambda_max(w), correlation_esd(w).lambda_max(), 1e-8 * correlation_esd(w).lambda_max());
}

TEST(Calibration, RowsAndJsonRoundTrip) {
  const AlphaMuCalibration cal = calibrate_alpha_mu(2.0, 200, {1.0, 2.5, 3.0}, 3, 5);
  ASSERT_EQ(cal.rows.size(), 3u);
  EXPECT_EQ(cal.runs, 3u);
  EXPECT_TRUE(cal.a.has_value());
  EXPECT_TRUE(cal.b.has_value());
  const AlphaMuCalibration back = calibration_from_json(to_json(cal));
  EXPECT_EQ(to_json(back), to_json(cal));
  EXPECT_EQ(back.rows[1].alpha_mean, cal.rows[1].alpha_mean);
  EXPECT_EQ(*back.a, *cal.a);
}

TEST(Calibration, NoLineWithOneModerateRow) {
  const AlphaMuCalibration cal = calibrate_alpha_mu(2.0, 100, {1.0, 3.0}, 2, 1);
  EXPECT_FALSE(cal.a.has_value());
  const auto j = to_json(cal);
  EXPECT_TRUE(j.at("a").is_null());
}

TEST(Calibration, CoefficientsReproducibleAcrossSeeds) {
  // Two independent calibrations; each coefficient may differ by at most two
  // standard errors of the difference, propagated from the row spreads.
  const std::vector<double> grid{2.5, 3.0, 3.5};
  const std::size_t runs = 10;
  const AlphaMuCalibration c1 = calibrate_alpha_mu(2.0, 1000, grid, runs, 11);
  const AlphaMuCalibration c2 = calibrate_alpha_mu(2.0, 1000, grid, runs, 12);
  ASSERT_TRUE(c1.a && c2.a);
  const double xm = 3.0;
  double sxx = 0.0;
  for (double mu : grid) sxx += (mu - xm) * (mu - xm);
  double var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double var_mean = (c1.rows[i].alpha_std * c1.rows[i].alpha_std +
                             c2.rows[i].alpha_std * c2.rows[i].alpha_std) / static_cast<double>(runs);
    const double wa = (grid[i] - xm) / sxx;
    const double wb = 1.0 / grid.size() - xm * wa;
    var_a += wa * wa * var_mean;
    var_b += wb * wb * var_mean;
  }
  EXPECT_LE(std::abs(*c1.a - *c2.a), 2.0 * std::sqrt(var_a));
  EXPECT_LE(std::abs(*c1.b - *c2.b), 2.0 * std::sqrt(var_b));
}
