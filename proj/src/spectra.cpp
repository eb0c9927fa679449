#include "spectral_lab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace spectral_lab {

namespace {

// Square upper-triangular factor with the same singular values and right
// singular vectors as a tall `w`.
Matrix reduce_tall(const Matrix& w) {
  Eigen::HouseholderQR<Matrix> qr(w);
  return qr.matrixQR().topRows(w.cols()).triangularView<Eigen::Upper>();
}

void check_svd(const Eigen::BDCSVD<Matrix>& svd) {
  if (svd.info() != Eigen::Success)
    throw std::runtime_error("singular value decomposition did not converge");
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::size_t Esd::zero_count(double tol) const {
  const double cut = tol * tol * lambda_max();
  return static_cast<std::size_t>(
      std::count_if(eigenvalues.begin(), eigenvalues.end(), [cut](double v) { return v <= cut; }));
}

std::vector<double> Esd::nonzero(double tol) const {
  const double cut = tol * tol * lambda_max();
  std::vector<double> out;
  out.reserve(eigenvalues.size());
  for (double v : eigenvalues)
    if (v > cut) out.push_back(v);
  return out;
}

std::string to_string(AxisScale scale) { return scale == AxisScale::Log ? "log" : "linear"; }

std::vector<double> singular_values(const Matrix& w) {
  if (w.size() == 0) return {};
  if (!w.allFinite()) throw std::invalid_argument("singular_values: matrix has non-finite entries");
  Vector s;
  if (w.rows() > w.cols()) {
    Eigen::BDCSVD<Matrix> svd(reduce_tall(w));
    check_svd(svd);
    s = svd.singularValues();
  } else {
    Eigen::BDCSVD<Matrix> svd(w);
    check_svd(svd);
    s = svd.singularValues();
  }
  std::vector<double> out(s.data(), s.data() + s.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

Esd correlation_esd(const Matrix& w, bool normalize_by_n) {
  if (w.rows() < w.cols())
    throw std::invalid_argument("correlation_esd: expected rows >= cols (orient the matrix first)");
  if (w.cols() == 0) throw std::invalid_argument("correlation_esd: empty matrix");
  Esd esd;
  esd.n = static_cast<std::size_t>(w.rows());
  esd.m = static_cast<std::size_t>(w.cols());
  esd.q = static_cast<double>(esd.n) / static_cast<double>(esd.m);
  esd.normalized_by_n = normalize_by_n;
  const double scale = normalize_by_n ? 1.0 / static_cast<double>(esd.n) : 1.0;
  const std::vector<double> sv = singular_values(w);
  esd.eigenvalues.reserve(sv.size());
  for (auto it = sv.rbegin(); it != sv.rend(); ++it) esd.eigenvalues.push_back((*it) * (*it) * scale);
  return esd;
}

std::vector<EigenPair> correlation_eigenpairs(const Matrix& w, std::size_t top_k,
                                              std::size_t bulk_samples, bool normalize_by_n) {
  const auto m = static_cast<std::size_t>(w.cols());
  if (w.rows() < w.cols())
    throw std::invalid_argument("correlation_eigenpairs: expected rows >= cols");
  if (top_k < 1 || top_k > m) throw std::invalid_argument("correlation_eigenpairs: need 1 <= top_k <= M");

  Eigen::BDCSVD<Matrix> svd(w.rows() > w.cols() ? reduce_tall(w) : w, Eigen::ComputeThinV);
  check_svd(svd);
  const double scale = normalize_by_n ? 1.0 / static_cast<double>(w.rows()) : 1.0;

  // Eigen returns singular values in decreasing order.
  std::vector<std::size_t> picks(top_k);
  std::iota(picks.begin(), picks.end(), 0);
  const std::size_t rest = m - top_k;
  bulk_samples = std::min(bulk_samples, rest);
  for (std::size_t j = 0; j < bulk_samples; ++j) {
    const double pos = (static_cast<double>(j) + 0.5) * static_cast<double>(rest) /
                       static_cast<double>(bulk_samples);
    picks.push_back(top_k + static_cast<std::size_t>(pos));
  }

  std::vector<EigenPair> out;
  out.reserve(picks.size());
  for (std::size_t idx : picks) {
    const double nu = svd.singularValues()(static_cast<Eigen::Index>(idx));
    out.push_back({nu * nu * scale, svd.matrixV().col(static_cast<Eigen::Index>(idx)), idx});
  }
  return out;
}

Matrix shuffle_elements(const Matrix& w, std::uint64_t seed) {
  Matrix out = w;
  std::mt19937_64 rng(seed);
  std::shuffle(out.data(), out.data() + out.size(), rng);
  return out;
}

Histogram histogram(const Esd& esd, std::optional<std::size_t> bins, AxisScale scale) {
  if (bins && *bins < 1) throw std::invalid_argument("histogram: bins must be >= 1");
  if (esd.eigenvalues.empty()) throw std::invalid_argument("histogram: empty ESD");

  Histogram h;
  h.axis_scale = scale;
  std::vector<double> values;
  if (scale == AxisScale::Log) {
    values = esd.nonzero();
    h.underflow = esd.eigenvalues.size() - values.size();
    if (values.empty()) throw std::invalid_argument("histogram: log scale needs positive eigenvalues");
  } else {
    values = esd.eigenvalues;
  }
  std::sort(values.begin(), values.end());
  const double lo = values.front();
  const double hi = values.back();
  const auto n = static_cast<double>(values.size());

  std::size_t nbins = 0;
  if (bins) {
    nbins = *bins;
  } else if (scale == AxisScale::Log) {
    nbins = 100;
  } else {
    const double iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
    const double width = 2.0 * iqr / std::cbrt(n);
    nbins = (width > 0.0 && hi > lo) ? static_cast<std::size_t>(std::ceil((hi - lo) / width)) : 1;
    nbins = std::clamp<std::size_t>(nbins, 1, 10000);
  }

  // Position on the binning axis (identity or log10).
  auto axis = [scale](double v) { return scale == AxisScale::Log ? std::log10(v) : v; };
  auto unaxis = [scale](double a) { return scale == AxisScale::Log ? std::pow(10.0, a) : a; };
  double a_lo = axis(lo);
  double a_hi = axis(hi);
  if (!(a_hi > a_lo)) {
    const double half = scale == AxisScale::Log ? 0.5 : (lo != 0.0 ? 0.5 * std::abs(lo) : 0.5);
    a_lo -= half;
    a_hi += half;
  }
  const double step = (a_hi - a_lo) / static_cast<double>(nbins);

  h.edges.resize(nbins + 1);
  for (std::size_t i = 0; i <= nbins; ++i) h.edges[i] = unaxis(a_lo + step * static_cast<double>(i));
  h.edges.front() = unaxis(a_lo);
  h.edges.back() = unaxis(a_hi);

  h.counts.assign(nbins, 0.0);
  for (double v : values) {
    auto idx = static_cast<std::ptrdiff_t>(std::floor((axis(v) - a_lo) / step));
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(nbins) - 1);
    h.counts[static_cast<std::size_t>(idx)] += 1.0;
  }
  h.density.resize(nbins);
  for (std::size_t i = 0; i < nbins; ++i) h.density[i] = h.counts[i] / (n * (h.edges[i + 1] - h.edges[i]));
  return h;
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "bin_left,bin_right,count,density\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    out << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << ',' << h.density[i] << '\n';
  return out.str();
}

}  // namespace spectral_lab
