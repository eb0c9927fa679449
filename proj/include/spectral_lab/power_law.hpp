#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spectral_lab/config.hpp"

namespace spectral_lab {

enum class TailFamily { PL, TPL, EXPONENTIAL, LOGNORMAL, STRETCHED_EXP };

std::string to_string(TailFamily family);

/// Likelihood-ratio comparison of the power law against one alternative.
/// `loglik_ratio` is sum(ln p_PL - ln p_alt); negative favors the alternative.
struct Comparison {
  TailFamily family = TailFamily::EXPONENTIAL;
  double loglik_ratio = 0.0;
  double normalized_ratio = 0.0;  // loglik_ratio / (sd * sqrt(n))
  double p_value = 1.0;
  bool nested = false;            // TPL contains PL; p from the chi-square(1) test
  std::vector<double> params;     // fitted parameters of the alternative
};

struct PlFit {
  double alpha = 0.0;
  double alpha_sigma = 0.0;  // (alpha - 1) / sqrt(n_tail)
  double xmin = 0.0;
  double xmax = 0.0;
  double ks_d = 1.0;
  std::size_t n_tail = 0;
  TailFamily best_fit = TailFamily::PL;
  std::vector<Comparison> comparisons;
};

/// Continuous MLE for a fixed lower cutoff: alpha = 1 + n / sum ln(x_i / xmin)
/// over values >= xmin. Returns alpha, KS distance and tail size.
PlFit fit_power_law_fixed(const std::vector<double>& values, double xmin);

/// CSN fit: xmin minimizes the KS distance over the unique values up to the
/// `pl_xmin_quantile` quantile (at most `pl_max_xmin_candidates` of them, each
/// leaving at least `pl_min_tail` points); xmax is the largest value.
/// Non-positive values are ignored. Throws std::invalid_argument when fewer
/// than `pl_min_tail` positive values exist or all are equal.
/// Comparisons are left empty; see compare_distributions.
PlFit fit_power_law(const std::vector<double>& values, const FitConfig& config = {});

/// Fits exponential, stretched exponential, lognormal and truncated power law
/// to the tail (values >= pl.xmin) by maximum likelihood, runs the likelihood
/// ratio test against the power law, and sets best_fit: PL unless some
/// alternative is favored with p <= pl_p_threshold, in which case the favored
/// alternative with the largest |normalized_ratio| wins.
void compare_distributions(const std::vector<double>& values, PlFit& pl, const FitConfig& config = {});

/// fit_power_law followed by compare_distributions.
PlFit fit_and_compare(const std::vector<double>& values, const FitConfig& config = {});

}  // namespace spectral_lab
