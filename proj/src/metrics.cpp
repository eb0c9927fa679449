#include "spectral_lab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spectral_lab {

namespace {

double max_abs(const Vector& v) {
  if (v.size() == 0) throw std::invalid_argument("empty vector");
  const double m = v.cwiseAbs().maxCoeff();
  if (!(m > 0.0)) throw std::invalid_argument("zero vector");
  return m;
}

}  // namespace

std::size_t hard_rank(const std::vector<double>& singular_values, double tol) {
  if (singular_values.empty()) return 0;
  const double cut = tol * *std::max_element(singular_values.begin(), singular_values.end());
  return static_cast<std::size_t>(std::count_if(singular_values.begin(), singular_values.end(),
                                                [cut](double s) { return s > cut; }));
}

double matrix_entropy(const std::vector<double>& singular_values, double tol) {
  const std::size_t rank = hard_rank(singular_values, tol);
  if (rank == 0) throw std::invalid_argument("matrix_entropy: zero matrix");
  if (rank == 1) return 0.0;
  const double top = *std::max_element(singular_values.begin(), singular_values.end());
  double total = 0.0;
  for (double s : singular_values) total += (s / top) * (s / top);
  double h = 0.0;
  for (double s : singular_values) {
    const double p = (s / top) * (s / top) / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(rank)), 0.0, 1.0);
}

double stable_rank(const std::vector<double>& singular_values) {
  if (singular_values.empty()) throw std::invalid_argument("stable_rank: empty input");
  const double top = *std::max_element(singular_values.begin(), singular_values.end());
  if (!(top > 0.0)) throw std::invalid_argument("stable_rank: zero matrix");
  double total = 0.0;
  for (double s : singular_values) total += (s / top) * (s / top);
  return total;
}

double mp_soft_rank(double lambda_plus, double lambda_max) {
  if (!(lambda_max > 0.0)) throw std::invalid_argument("mp_soft_rank: lambda_max must be positive");
  if (!(lambda_plus > 0.0)) return 0.0;
  return std::clamp(lambda_plus / lambda_max, 0.0, 1.0);
}

double vector_entropy(const Vector& v, std::optional<std::size_t> bins) {
  const auto n = static_cast<std::size_t>(v.size());
  if (n == 0) throw std::invalid_argument("vector_entropy: empty vector");
  const std::size_t nbins = bins.value_or(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
  if (nbins < 2) throw std::invalid_argument("vector_entropy: bins must be >= 2");

  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(n));
  if (!(sd > 0.0)) return 0.0;
  const Eigen::ArrayXd z = (v.array() - mean) / sd;
  const double lo = z.minCoeff();
  const double hi = z.maxCoeff();
  const double width = (hi - lo) / static_cast<double>(nbins);

  std::vector<double> counts(nbins, 0.0);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    auto k = static_cast<std::size_t>(std::floor((z[i] - lo) / width));
    counts[std::min(k, nbins - 1)] += 1.0;
  }
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

double localization_ratio(const Vector& v) {
  const double m = max_abs(v);
  return (v.cwiseAbs() / m).sum();
}

double participation_ratio(const Vector& v) {
  const double m = max_abs(v);
  const Eigen::ArrayXd u = v.array().abs() / m;
  const double l2 = std::sqrt(u.square().sum());
  const double l4 = std::pow(u.square().square().sum(), 0.25);
  return l2 / l4;
}

LocalizationMetrics localization_metrics(const Vector& v) {
  return {vector_entropy(v), localization_ratio(v), participation_ratio(v)};
}

CapacityMetrics capacity_metrics(const std::vector<double>& singular_values, double lambda_plus,
                                 double lambda_max, double tol) {
  CapacityMetrics c;
  c.hard_rank = hard_rank(singular_values, tol);
  if (c.hard_rank == 0) return c;
  c.matrix_entropy = matrix_entropy(singular_values, tol);
  c.stable_rank = stable_rank(singular_values);
  c.mp_soft_rank = mp_soft_rank(lambda_plus, lambda_max);
  return c;
}

}  // namespace spectral_lab
