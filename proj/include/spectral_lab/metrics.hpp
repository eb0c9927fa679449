#pragma once

#include <optional>
#include <vector>

#include "spectral_lab/spectra.hpp"

namespace spectral_lab {

struct CapacityMetrics {
  std::size_t hard_rank = 0;
  double matrix_entropy = 0.0;
  double stable_rank = 0.0;
  double mp_soft_rank = 0.0;
};

struct LocalizationMetrics {
  double vector_entropy = 0.0;
  double localization_ratio = 0.0;
  double participation_ratio = 0.0;
};

/// Count of singular values above tol * max. Input must be descending.
std::size_t hard_rank(const std::vector<double>& singular_values,
                      double tol = kDefaultRankTolerance);

/// Normalized entropy of p_i = nu_i^2 / sum nu^2, divided by log(hard rank).
/// Rank one gives 0. Throws std::invalid_argument for an all-zero input.
double matrix_entropy(const std::vector<double>& singular_values,
                      double tol = kDefaultRankTolerance);

/// sum nu_i^2 / nu_max^2. Throws std::invalid_argument for an all-zero input.
double stable_rank(const std::vector<double>& singular_values);

/// lambda_plus / lambda_max clamped to [0, 1]; lambda_plus = 0 means no MP fit.
double mp_soft_rank(double lambda_plus, double lambda_max);

/// -sum P ln P over a histogram of the standardized entries of `v`.
/// Default bin count is ceil(sqrt(n)). A constant vector gives 0.
double vector_entropy(const Vector& v, std::optional<std::size_t> bins = std::nullopt);

/// ||v||_1 / ||v||_inf.
double localization_ratio(const Vector& v);

/// ||v||_2 / ||v||_4.
double participation_ratio(const Vector& v);

LocalizationMetrics localization_metrics(const Vector& v);

CapacityMetrics capacity_metrics(const std::vector<double>& singular_values, double lambda_plus,
                                 double lambda_max, double tol = kDefaultRankTolerance);

}  // namespace spectral_lab
