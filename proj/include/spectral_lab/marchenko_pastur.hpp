#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spectral_lab/config.hpp"
#include "spectral_lab/spectra.hpp"

namespace spectral_lab {

struct MpParams {
  double sigma_sq = 1.0;
  double q = 1.0;
};

struct MpEdges {
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
};

/// lambda_pm = sigma^2 (1 +- 1/sqrt(Q))^2.
MpEdges mp_edges(const MpParams& p);

/// MP density; zero outside [lambda_minus, lambda_plus].
double mp_density(double lambda, const MpParams& p);

/// MP distribution function by quadrature of mp_density.
double mp_cdf(double lambda, const MpParams& p);

/// mp_cdf at every point of an ascending sequence, integrating segment by
/// segment so the cost is linear in the number of points.
std::vector<double> mp_cdf_sorted(const std::vector<double>& sorted, const MpParams& p);

/// Inverse of the upper edge: sigma^2 = lambda_plus (1 + 1/sqrt(Q))^-2.
double sigma_from_lambda_plus(double lambda_plus, double q);

/// Singular-value density of W/sqrt(N) at Q = 1: (1/(pi sigma^2)) sqrt(4 sigma^2 - nu^2)
/// on [0, 2 sigma].
double quarter_circle_density(double nu, double sigma_sq);

/// Finite-size edge scale: sigma^2 Q^-1/2 (lambda_plus/sigma^2)^(2/3) M^(-2/3).
double edge_fluctuation(const MpParams& p, std::size_t m);

/// Sup distance between the empirical CDF of the values <= truncate_at and
/// the MP CDF, both renormalized to [lambda_minus, truncate_at]. Without a
/// truncation point all values are used.
double ks_distance(std::vector<double> values, const MpParams& p,
                   std::optional<double> truncate_at = std::nullopt);

struct MpFit {
  bool present = false;           // false: no candidate reached the KS ceiling
  MpParams params;                // fitted MP law (q is the effective aspect ratio)
  double lambda_plus = 0.0;       // 0 when the fit is absent
  double lambda_minus = 0.0;
  double sigma_sq_bulk = 0.0;
  std::optional<double> sigma_sq_shuf;
  double sigma_sq_emp = 0.0;      // mean eigenvalue, i.e. ||W||_F^2 / (N M)
  std::vector<double> spikes;     // > lambda_plus + k * delta, ascending
  std::vector<double> bleeding_out;  // in (lambda_plus, lambda_plus + k * delta], ascending
  double ks_distance = 1.0;       // of the chosen candidate
  double edge_fluctuation = 0.0;  // delta
  std::size_t n_fit = 0;          // nonzero eigenvalues used
  std::size_t window_size = 0;    // eigenvalues <= lambda_plus
  std::vector<std::string> warnings;
};

/// Grid search for the bulk edge. Candidates are `grid_size` quantiles of the
/// nonzero eigenvalues between the median and the maximum; each is scored by
/// KS of the window below it plus `edge_weight` times the fraction of
/// eigenvalues in the margin just above it. Ties go to the smaller candidate.
/// Every eigenvalue between the neighbours of the grid optimum is then rescored.
/// The fit is absent when no candidate reaches ks_ceiling or when the grid
/// optimum is the lowest candidate.
/// Zero eigenvalues are excluded and Q is replaced by N / (nonzero count).
/// With `sigma_sq_shuf` the reported sigma_sq_bulk is capped at it.
MpFit fit_mp_bulk(const Esd& esd, const FitConfig& config,
                  std::optional<double> sigma_sq_shuf = std::nullopt);

/// Mean over `reps` element shuffles of the sigma^2 fitted to each shuffled ESD.
/// Throws std::invalid_argument for reps < 1 or a constant matrix.
double shuffled_sigma(const Matrix& w, std::size_t reps, std::uint64_t seed,
                      const FitConfig& config = {});

struct RuleOfThumb {
  double sigma_sq = 0.0;
  bool clamped = false;
};

/// sigma_shuf^2 - (1/M) sum lambda_k, floored at `epsilon`.
RuleOfThumb bulk_variance_rule_of_thumb(double sigma_sq_shuf,
                                        const std::vector<double>& bleeding_eigenvalues,
                                        std::size_t m, double epsilon = 1e-6);

struct SpikePrediction {
  double lambda_max = 0.0;
  bool below_threshold = false;  // lambda_max is then the MP edge
};

/// Largest eigenvalue of a rank-one perturbation with squared norm
/// `delta_norm_sq` above the detectability threshold:
/// sigma^2 (1/Q + |D|^2/N)(1 + N/|D|^2).
SpikePrediction spiked_lambda_max(double sigma_sq, double q, double delta_norm_sq, std::size_t n);

/// (N M)^(1/4).
double detectability_threshold(std::size_t n, std::size_t m);

}  // namespace spectral_lab
