#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spectral_lab/tensor_io.hpp"

namespace spectral_lab {

/// Relative cutoff below which a singular value counts as zero.
inline constexpr double kDefaultRankTolerance = 1e-10;

/// Eigenvalues of the M x M correlation matrix X built from an N x M weight
/// matrix with N >= M, in ascending order.
struct Esd {
  std::vector<double> eigenvalues;
  std::size_t n = 0;
  std::size_t m = 0;
  double q = 1.0;                // n / m
  bool normalized_by_n = true;   // X = W^T W / N when set, X = W^T W otherwise

  double lambda_max() const { return eigenvalues.empty() ? 0.0 : eigenvalues.back(); }
  /// Number of eigenvalues at or below tol^2 * lambda_max.
  std::size_t zero_count(double tol = kDefaultRankTolerance) const;
  /// Eigenvalues above the zero cutoff, ascending.
  std::vector<double> nonzero(double tol = kDefaultRankTolerance) const;
};

struct EigenPair {
  double eigenvalue = 0.0;
  Vector eigenvector;
  std::size_t rank = 0;  // 0 for the largest eigenvalue
};

enum class AxisScale { Linear, Log };

std::string to_string(AxisScale scale);

struct Histogram {
  std::vector<double> edges;    // bins + 1 values, strictly increasing, in eigenvalue units
  std::vector<double> counts;
  std::vector<double> density;  // counts / (total * width); integrates to one
  bool density_normalized = true;
  AxisScale axis_scale = AxisScale::Linear;
  std::size_t underflow = 0;    // zero eigenvalues left out of a log-scale histogram
};

/// Singular values of `w`, descending. Tall inputs are reduced through a
/// Householder QR first; the SVD itself is divide-and-conquer.
std::vector<double> singular_values(const Matrix& w);

/// ESD of X = W^T W / N (or W^T W), computed from singular values of W so the
/// normal equations are never formed. Requires rows >= cols.
Esd correlation_esd(const Matrix& w, bool normalize_by_n = true);

/// Largest `top_k` eigenpairs of X in descending eigenvalue order, followed by
/// `bulk_samples` pairs spread uniformly over the remaining spectrum.
std::vector<EigenPair> correlation_eigenpairs(const Matrix& w, std::size_t top_k,
                                              std::size_t bulk_samples = 0,
                                              bool normalize_by_n = true);

/// Element-wise random permutation (Fisher-Yates, mt19937_64 seeded by `seed`).
Matrix shuffle_elements(const Matrix& w, std::uint64_t seed);

/// Density histogram of the ESD. Without `bins`, linear scale uses the
/// Freedman-Diaconis rule and log scale uses 100 logarithmic bins.
Histogram histogram(const Esd& esd, std::optional<std::size_t> bins = std::nullopt,
                    AxisScale scale = AxisScale::Linear);

/// CSV with columns bin_left,bin_right,count,density.
std::string histogram_csv(const Histogram& h);

}  // namespace spectral_lab
