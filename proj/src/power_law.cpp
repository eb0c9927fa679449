#include "spectral_lab/power_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/minima.hpp>

namespace spectral_lab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBrentBits = 40;

// Brent minimization of f on [lo, hi]; returns (argmin, min).
template <typename F>
std::pair<double, double> minimize(F f, double lo, double hi) {
  return boost::math::tools::brent_find_minima(f, lo, hi, kBrentBits);
}

// ln P(Z > t) for a standard normal Z.
double log_normal_sf(double t) {
  if (t < 30.0) return std::log(0.5 * boost::math::erfc(t / std::numbers::sqrt2));
  const double t2 = t * t;
  return -0.5 * t2 - std::log(t * std::sqrt(2.0 * std::numbers::pi)) +
         std::log1p(-1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2));
}

double ks_power_law(const double* tail, std::size_t n, double xmin, double alpha) {
  const auto nn = static_cast<double>(n);
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = 1.0 - std::pow(tail[i] / xmin, 1.0 - alpha);
    d = std::max({d, f - static_cast<double>(i) / nn, static_cast<double>(i + 1) / nn - f});
  }
  return d;
}

std::vector<double> positive_sorted(const std::vector<double>& values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values)
    if (v > 0.0 && std::isfinite(v)) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

// Per-point log densities of the tail in units of xmin (y = x / xmin >= 1).
// The common Jacobian 1/xmin cancels in every ratio.
struct Tail {
  std::vector<double> y;
  std::vector<double> log_y;
  double sum_y = 0.0;
  double sum_log_y = 0.0;
  double sum_log_y_sq = 0.0;
  double n = 0.0;
};

std::vector<double> pl_logpdf(const Tail& t, double alpha) {
  std::vector<double> out(t.y.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(alpha - 1.0) - alpha * t.log_y[i];
  return out;
}

struct AltFit {
  std::vector<double> params;
  std::vector<double> logpdf;
  double loglik = -kInf;
};

AltFit fit_exponential(const Tail& t) {
  const double excess = t.sum_y - t.n;
  AltFit fit;
  if (!(excess > 0.0)) return fit;
  const double k = t.n / excess;
  fit.params = {k};
  fit.logpdf.resize(t.y.size());
  for (std::size_t i = 0; i < t.y.size(); ++i) fit.logpdf[i] = std::log(k) - k * (t.y[i] - 1.0);
  fit.loglik = std::accumulate(fit.logpdf.begin(), fit.logpdf.end(), 0.0);
  return fit;
}

// f(y) = b k y^(b-1) exp(-k (y^b - 1)); k has a closed form for fixed b.
AltFit fit_stretched_exp(const Tail& t) {
  auto rate = [&](double b) {
    double s = 0.0;
    for (double y : t.y) s += std::pow(y, b) - 1.0;
    return s > 0.0 ? t.n / s : kInf;
  };
  auto neg_profile = [&](double log_b) {
    const double b = std::exp(log_b);
    const double k = rate(b);
    if (!std::isfinite(k)) return kInf;
    return -(t.n * std::log(b) + t.n * std::log(k) + (b - 1.0) * t.sum_log_y - t.n);
  };
  const auto [log_b, neg_ll] = minimize(neg_profile, std::log(0.01), std::log(10.0));
  AltFit fit;
  if (!std::isfinite(neg_ll)) return fit;
  const double b = std::exp(log_b);
  const double k = rate(b);
  fit.params = {b, k};
  fit.logpdf.resize(t.y.size());
  for (std::size_t i = 0; i < t.y.size(); ++i)
    fit.logpdf[i] = std::log(b * k) + (b - 1.0) * t.log_y[i] - k * (std::pow(t.y[i], b) - 1.0);
  fit.loglik = std::accumulate(fit.logpdf.begin(), fit.logpdf.end(), 0.0);
  return fit;
}

// Lognormal left-truncated at y = 1.
AltFit fit_lognormal(const Tail& t) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  auto loglik = [&](double mu, double s) {
    const double sq = t.sum_log_y_sq - 2.0 * mu * t.sum_log_y + t.n * mu * mu;
    return -t.sum_log_y - t.n * (std::log(s) + half_log_2pi) - sq / (2.0 * s * s) -
           t.n * log_normal_sf(-mu / s);
  };
  const double mu_hi = std::log(t.y.back()) + 5.0;
  auto best_mu = [&](double s) {
    return minimize([&](double mu) { return -loglik(mu, s); }, -60.0, mu_hi);
  };
  const auto [log_s, neg_ll] =
      minimize([&](double ls) { return best_mu(std::exp(ls)).second; }, std::log(0.01), std::log(50.0));
  AltFit fit;
  if (!std::isfinite(neg_ll)) return fit;
  const double s = std::exp(log_s);
  const double mu = best_mu(s).first;
  const double log_tail_mass = log_normal_sf(-mu / s);
  fit.params = {mu, s};
  fit.logpdf.resize(t.y.size());
  for (std::size_t i = 0; i < t.y.size(); ++i) {
    const double z = (t.log_y[i] - mu) / s;
    fit.logpdf[i] = -t.log_y[i] - std::log(s) - half_log_2pi - 0.5 * z * z - log_tail_mass;
  }
  fit.loglik = std::accumulate(fit.logpdf.begin(), fit.logpdf.end(), 0.0);
  return fit;
}

// ln of the integral of y^-a exp(-k y) over [1, inf).
double tpl_log_norm(double a, double k) {
  thread_local boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [a, k](double s) { return std::exp(-a * std::log1p(s) - k * s); };
  try {
    const double v = integrator.integrate(f, 1e-10);
    return v > 0.0 && std::isfinite(v) ? std::log(v) - k : kInf;
  } catch (const std::exception&) {
    return kInf;
  }
}

// f(y) = y^-a exp(-k y) / Z(a, k).
AltFit fit_truncated_power_law(const Tail& t) {
  auto neg_ll = [&](double a, double k) {
    const double log_z = tpl_log_norm(a, k);
    if (!std::isfinite(log_z)) return kInf;
    return a * t.sum_log_y + k * t.sum_y + t.n * log_z;
  };
  auto best_a = [&](double k) { return minimize([&](double a) { return neg_ll(a, k); }, -2.0, 8.0); };
  const double k_hi = std::log(100.0 * t.n / t.sum_y);
  const auto [log_k, value] = minimize([&](double lk) { return best_a(std::exp(lk)).second; }, -20.0, k_hi);
  AltFit fit;
  if (!std::isfinite(value)) return fit;
  const double k = std::exp(log_k);
  const double a = best_a(k).first;
  const double log_z = tpl_log_norm(a, k);
  fit.params = {a, k};
  fit.logpdf.resize(t.y.size());
  for (std::size_t i = 0; i < t.y.size(); ++i) fit.logpdf[i] = -a * t.log_y[i] - k * t.y[i] - log_z;
  fit.loglik = std::accumulate(fit.logpdf.begin(), fit.logpdf.end(), 0.0);
  return fit;
}

Comparison compare(TailFamily family, const std::vector<double>& pl_logpdf, const AltFit& alt, bool nested) {
  Comparison c;
  c.family = family;
  c.nested = nested;
  c.params = alt.params;
  if (alt.logpdf.empty()) return c;  // alternative could not be fitted; PL kept
  const auto n = static_cast<double>(pl_logpdf.size());
  std::vector<double> diff(pl_logpdf.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = pl_logpdf[i] - alt.logpdf[i];
  double r = std::accumulate(diff.begin(), diff.end(), 0.0);
  // TPL contains the power law, so a positive ratio only reflects optimizer slack.
  if (nested && r > 0.0) r = 0.0;
  const double mean = r / n;
  double var = 0.0;
  for (double d : diff) var += (d - mean) * (d - mean);
  const double sd = std::sqrt(var / n);
  c.loglik_ratio = r;
  c.normalized_ratio = sd > 0.0 ? r / (sd * std::sqrt(n)) : 0.0;
  if (nested) {
    c.p_value = boost::math::erfc(std::sqrt(std::abs(r)));
  } else {
    c.p_value = sd > 0.0 ? boost::math::erfc(std::abs(r) / (sd * std::sqrt(2.0 * n))) : 1.0;
  }
  return c;
}

}  // namespace

std::string to_string(TailFamily family) {
  switch (family) {
    case TailFamily::PL: return "PL";
    case TailFamily::TPL: return "TPL";
    case TailFamily::EXPONENTIAL: return "EXPONENTIAL";
    case TailFamily::LOGNORMAL: return "LOGNORMAL";
    case TailFamily::STRETCHED_EXP: return "STRETCHED_EXP";
  }
  return "PL";
}

PlFit fit_power_law_fixed(const std::vector<double>& values, double xmin) {
  if (!(xmin > 0.0)) throw std::invalid_argument("fit_power_law_fixed: xmin must be positive");
  std::vector<double> tail;
  for (double v : positive_sorted(values))
    if (v >= xmin) tail.push_back(v);
  double s = 0.0;
  for (double v : tail) s += std::log(v / xmin);
  if (tail.empty() || !(s > 0.0)) throw std::invalid_argument("fit_power_law_fixed: degenerate tail");
  PlFit fit;
  fit.xmin = xmin;
  fit.xmax = tail.back();
  fit.n_tail = tail.size();
  fit.alpha = 1.0 + static_cast<double>(tail.size()) / s;
  fit.alpha_sigma = (fit.alpha - 1.0) / std::sqrt(static_cast<double>(tail.size()));
  fit.ks_d = ks_power_law(tail.data(), tail.size(), xmin, fit.alpha);
  return fit;
}

PlFit fit_power_law(const std::vector<double>& values, const FitConfig& config) {
  const std::vector<double> x = positive_sorted(values);
  const std::size_t n = x.size();
  if (n < config.pl_min_tail)
    throw std::invalid_argument("fit_power_law: " + std::to_string(n) + " positive values, need " +
                                std::to_string(config.pl_min_tail));
  if (x.front() == x.back()) throw std::invalid_argument("fit_power_law: all values equal");

  // suffix[i] = sum of ln x[j] for j >= i
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + std::log(x[i]);

  const double cutoff = x[static_cast<std::size_t>(config.pl_xmin_quantile * static_cast<double>(n - 1))];
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < n && x[i] <= cutoff && n - i >= config.pl_min_tail; ++i)
    if (i == 0 || x[i] != x[i - 1]) starts.push_back(i);
  if (starts.empty()) starts.push_back(0);
  if (starts.size() > config.pl_max_xmin_candidates) {
    std::vector<std::size_t> thinned;
    const std::size_t k = config.pl_max_xmin_candidates;
    for (std::size_t j = 0; j < k; ++j)
      thinned.push_back(starts[k == 1 ? 0 : j * (starts.size() - 1) / (k - 1)]);
    thinned.erase(std::unique(thinned.begin(), thinned.end()), thinned.end());
    starts = std::move(thinned);
  }

  PlFit best;
  bool found = false;
  for (std::size_t s : starts) {
    const std::size_t m = n - s;
    const double xmin = x[s];
    const double log_sum = suffix[s] - static_cast<double>(m) * std::log(xmin);
    if (!(log_sum > 0.0)) continue;
    const double alpha = 1.0 + static_cast<double>(m) / log_sum;
    const double d = ks_power_law(x.data() + s, m, xmin, alpha);
    if (!found || d < best.ks_d) {
      found = true;
      best.alpha = alpha;
      best.xmin = xmin;
      best.ks_d = d;
      best.n_tail = m;
    }
  }
  if (!found) throw std::invalid_argument("fit_power_law: no usable xmin candidate");
  best.xmax = x.back();
  best.alpha_sigma = (best.alpha - 1.0) / std::sqrt(static_cast<double>(best.n_tail));
  return best;
}

void compare_distributions(const std::vector<double>& values, PlFit& pl, const FitConfig& config) {
  Tail t;
  for (double v : positive_sorted(values)) {
    if (v < pl.xmin) continue;
    const double y = v / pl.xmin;
    t.y.push_back(y);
    t.log_y.push_back(std::log(y));
  }
  t.n = static_cast<double>(t.y.size());
  if (t.y.size() < 2 || t.y.back() == t.y.front())
    throw std::invalid_argument("compare_distributions: degenerate tail");
  for (std::size_t i = 0; i < t.y.size(); ++i) {
    t.sum_y += t.y[i];
    t.sum_log_y += t.log_y[i];
    t.sum_log_y_sq += t.log_y[i] * t.log_y[i];
  }

  const std::vector<double> pl_ll = pl_logpdf(t, pl.alpha);
  pl.comparisons = {
      compare(TailFamily::TPL, pl_ll, fit_truncated_power_law(t), true),
      compare(TailFamily::EXPONENTIAL, pl_ll, fit_exponential(t), false),
      compare(TailFamily::LOGNORMAL, pl_ll, fit_lognormal(t), false),
      compare(TailFamily::STRETCHED_EXP, pl_ll, fit_stretched_exp(t), false),
  };
  pl.best_fit = TailFamily::PL;
  double strongest = 0.0;
  for (const Comparison& c : pl.comparisons) {
    if (c.loglik_ratio < 0.0 && c.p_value <= config.pl_p_threshold &&
        std::abs(c.normalized_ratio) > strongest) {
      strongest = std::abs(c.normalized_ratio);
      pl.best_fit = c.family;
    }
  }
}

PlFit fit_and_compare(const std::vector<double>& values, const FitConfig& config) {
  PlFit fit = fit_power_law(values, config);
  compare_distributions(values, fit, config);
  return fit;
}

}  // namespace spectral_lab
