#include "spectral_lab/marchenko_pastur.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "spectral_lab/random.hpp"

namespace spectral_lab {

namespace {

void check_params(const MpParams& p) {
  if (!(p.sigma_sq > 0.0) || !std::isfinite(p.sigma_sq))
    throw std::invalid_argument("MP params: sigma_sq must be positive");
  if (!(p.q >= 1.0) || !std::isfinite(p.q)) throw std::invalid_argument("MP params: Q must be >= 1");
}

// The density in the angle variable lambda = a + (b - a)(1 - cos t)/2, which
// removes both square-root endpoint singularities and the 1/lambda pole at Q = 1.
struct AngleDensity {
  double a, b, scale;

  explicit AngleDensity(const MpParams& p) {
    const MpEdges e = mp_edges(p);
    a = e.lambda_minus;
    b = e.lambda_plus;
    const double half = 0.5 * (b - a);
    scale = p.q / (2.0 * std::numbers::pi * p.sigma_sq) * half * half;
  }

  double operator()(double t) const {
    const double c = std::cos(t);
    if (a == 0.0) return scale * 2.0 * (1.0 + c) / b;
    const double s = std::sin(t);
    return scale * s * s / (a + 0.5 * (b - a) * (1.0 - c));
  }

  double angle(double lambda) const {
    const double u = std::clamp((lambda - a) / (b - a), 0.0, 1.0);
    return std::acos(1.0 - 2.0 * u);
  }

  // Antiderivative of operator() from 0. With alpha = a + h, beta = h:
  // sin^2 t / (alpha - beta cos t) = cos t / beta + alpha / beta^2 - (ab / beta^2) / (alpha - beta cos t).
  double primitive(double t) const {
    if (a == 0.0) return scale * 2.0 * (t + std::sin(t)) / b;
    const double h = 0.5 * (b - a);
    const double alpha = a + h;
    const double phi = std::atan2(std::sqrt(b / a) * std::sin(0.5 * t), std::cos(0.5 * t));
    return scale * (std::sin(t) / h + alpha * t / (h * h) - 2.0 * std::sqrt(a * b) * phi / (h * h));
  }
};

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// KS distance of an ascending window against a CDF evaluated at its points,
// with the model renormalized by `model_mass`.
double ks_sorted(const std::vector<double>& cdf, double model_mass) {
  const auto n = static_cast<double>(cdf.size());
  double d = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    const double f = cdf[i] / model_mass;
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace

MpEdges mp_edges(const MpParams& p) {
  check_params(p);
  const double r = 1.0 / std::sqrt(p.q);
  return {p.sigma_sq * (1.0 - r) * (1.0 - r), p.sigma_sq * (1.0 + r) * (1.0 + r)};
}

double mp_density(double lambda, const MpParams& p) {
  const MpEdges e = mp_edges(p);
  if (!(lambda > e.lambda_minus) || !(lambda < e.lambda_plus) || lambda <= 0.0) return 0.0;
  return p.q / (2.0 * std::numbers::pi * p.sigma_sq) *
         std::sqrt((e.lambda_plus - lambda) * (lambda - e.lambda_minus)) / lambda;
}

double mp_cdf(double lambda, const MpParams& p) { return mp_cdf_sorted({lambda}, p).front(); }

std::vector<double> mp_cdf_sorted(const std::vector<double>& sorted, const MpParams& p) {
  const AngleDensity g(p);
  std::vector<double> out(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i] < sorted[i - 1]) throw std::invalid_argument("mp_cdf_sorted: input not ascending");
    out[i] = std::clamp(g.primitive(g.angle(sorted[i])), 0.0, 1.0);
  }
  return out;
}

double sigma_from_lambda_plus(double lambda_plus, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("sigma_from_lambda_plus: Q must be >= 1");
  const double f = 1.0 + 1.0 / std::sqrt(q);
  return lambda_plus / (f * f);
}

double quarter_circle_density(double nu, double sigma_sq) {
  if (!(sigma_sq > 0.0)) throw std::invalid_argument("quarter_circle_density: sigma_sq must be positive");
  const double r2 = 4.0 * sigma_sq;
  if (nu < 0.0 || nu * nu >= r2) return 0.0;
  return std::sqrt(r2 - nu * nu) / (std::numbers::pi * sigma_sq);
}

double edge_fluctuation(const MpParams& p, std::size_t m) {
  if (m == 0) throw std::invalid_argument("edge_fluctuation: M must be positive");
  const double lp = mp_edges(p).lambda_plus;
  return p.sigma_sq / std::sqrt(p.q) * std::cbrt((lp / p.sigma_sq) * (lp / p.sigma_sq)) /
         std::cbrt(static_cast<double>(m) * static_cast<double>(m));
}

double ks_distance(std::vector<double> values, const MpParams& p, std::optional<double> truncate_at) {
  std::sort(values.begin(), values.end());
  if (truncate_at) values.erase(std::upper_bound(values.begin(), values.end(), *truncate_at), values.end());
  if (values.empty()) return 1.0;
  const double mass = truncate_at ? mp_cdf(*truncate_at, p) : 1.0;
  if (!(mass > 0.0)) return 1.0;
  return ks_sorted(mp_cdf_sorted(values, p), mass);
}

MpFit fit_mp_bulk(const Esd& esd, const FitConfig& config, std::optional<double> sigma_sq_shuf) {
  if (esd.eigenvalues.empty()) throw std::invalid_argument("fit_mp_bulk: empty ESD");
  MpFit fit;
  fit.sigma_sq_shuf = sigma_sq_shuf;
  fit.sigma_sq_emp = std::accumulate(esd.eigenvalues.begin(), esd.eigenvalues.end(), 0.0) /
                     static_cast<double>(esd.eigenvalues.size());

  const std::vector<double> values = esd.nonzero(config.rank_tol);
  fit.n_fit = values.size();
  if (values.size() < 8) {
    fit.warnings.push_back("fewer than 8 nonzero eigenvalues; MP fit not attempted");
    return fit;
  }
  const double q = static_cast<double>(esd.n) / static_cast<double>(values.size());
  if (values.size() < esd.eigenvalues.size())
    fit.warnings.push_back("zero eigenvalues excluded; effective Q = " + std::to_string(q));

  std::vector<double> candidates;
  for (std::size_t j = 0; j < config.grid_size; ++j) {
    const double p = 0.5 + 0.5 * static_cast<double>(j) / static_cast<double>(config.grid_size - 1);
    const double c = quantile_sorted(values, p);
    if (c > 0.0 && (candidates.empty() || c > candidates.back())) candidates.push_back(c);
  }

  struct Scored {
    double c, ks, score, delta;
  };
  const auto n = static_cast<double>(values.size());
  auto score = [&](double c) {
    const MpParams params{sigma_from_lambda_plus(c, q), q};
    const auto top = std::upper_bound(values.begin(), values.end(), c);
    const std::vector<double> window(values.begin(), top);
    const double ks = ks_sorted(mp_cdf_sorted(window, params), 1.0);
    const double delta = edge_fluctuation(params, values.size());
    const auto margin_end = std::upper_bound(top, values.end(), c + config.k_margin * delta);
    const double margin = static_cast<double>(margin_end - top) / n;
    return Scored{c, ks, ks + config.edge_weight * margin, delta};
  };
  // Candidates are ascending, so a strict comparison keeps the smaller edge on ties.
  auto argmin = [&](const std::vector<Scored>& scored) {
    const bool any_fit = std::any_of(scored.begin(), scored.end(),
                                     [&](const Scored& s) { return s.ks <= config.ks_ceiling; });
    std::optional<Scored> best;
    for (const Scored& s : scored) {
      if (any_fit && s.ks > config.ks_ceiling) continue;
      if (!best || s.score < best->score) best = s;
    }
    return std::make_pair(*best, any_fit);
  };

  std::vector<Scored> scored;
  scored.reserve(candidates.size());
  for (double c : candidates) scored.push_back(score(c));
  auto [coarse, any_fit] = argmin(scored);

  // Quantile spacing skips eigenvalues near the edge, where they are sparse;
  // rescore every eigenvalue between the neighbours of the coarse optimum.
  const auto j = static_cast<std::size_t>(
      std::find(candidates.begin(), candidates.end(), coarse.c) - candidates.begin());
  const double lo = candidates[j == 0 ? 0 : j - 1];
  const double hi = candidates[std::min(j + 1, candidates.size() - 1)];
  std::vector<Scored> fine;
  for (auto it = std::lower_bound(values.begin(), values.end(), lo); it != values.end() && *it <= hi; ++it)
    if (fine.empty() || *it > fine.back().c) fine.push_back(score(*it));
  fine.push_back(coarse);
  std::sort(fine.begin(), fine.end(), [](const Scored& a, const Scored& b) { return a.c < b.c; });
  const auto [refined, refined_fit] = argmin(fine);
  const Scored* best = &refined;
  any_fit = any_fit || refined_fit;

  fit.params = {sigma_from_lambda_plus(best->c, q), q};
  fit.ks_distance = best->ks;
  fit.edge_fluctuation = best->delta;
  if (!any_fit) {
    fit.warnings.push_back("no bulk-edge candidate reached the KS ceiling; MP fit absent");
    return fit;
  }
  // KS still falling at the median: no MP bulk holds even half of the spectrum.
  if (j == 0 && candidates.size() > 1) {
    fit.warnings.push_back("KS optimum at the lowest bulk-edge candidate; MP fit absent");
    return fit;
  }

  fit.present = true;
  fit.lambda_plus = best->c;
  fit.lambda_minus = mp_edges(fit.params).lambda_minus;
  fit.sigma_sq_bulk = fit.params.sigma_sq;
  const double spike_cut = best->c + config.k_margin * best->delta;
  for (double v : values) {
    if (v > spike_cut) {
      fit.spikes.push_back(v);
    } else if (v > best->c) {
      fit.bleeding_out.push_back(v);
    } else {
      ++fit.window_size;
    }
  }
  if (sigma_sq_shuf && fit.sigma_sq_bulk > *sigma_sq_shuf) {
    fit.sigma_sq_bulk = *sigma_sq_shuf;
    fit.warnings.push_back("sigma_sq_bulk capped at sigma_sq_shuf");
  }
  return fit;
}

double shuffled_sigma(const Matrix& w, std::size_t reps, std::uint64_t seed, const FitConfig& config) {
  if (reps < 1) throw std::invalid_argument("shuffled_sigma: reps must be >= 1");
  if (w.size() == 0 || (w.array() == w(0, 0)).all())
    throw std::invalid_argument("shuffled_sigma: constant matrix has no MP baseline");
  const Matrix tall = orient_tall(w);
  double total = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const Esd esd = correlation_esd(shuffle_elements(tall, derive_seed(seed, r)), config.normalize_by_n);
    const MpFit fit = fit_mp_bulk(esd, config);
    total += fit.present ? fit.params.sigma_sq : fit.sigma_sq_emp;
  }
  return total / static_cast<double>(reps);
}

RuleOfThumb bulk_variance_rule_of_thumb(double sigma_sq_shuf, const std::vector<double>& bleeding_eigenvalues,
                                        std::size_t m, double epsilon) {
  if (m == 0) throw std::invalid_argument("bulk_variance_rule_of_thumb: M must be positive");
  const double sum = std::accumulate(bleeding_eigenvalues.begin(), bleeding_eigenvalues.end(), 0.0);
  const double v = sigma_sq_shuf - sum / static_cast<double>(m);
  if (v < epsilon) return {epsilon, true};
  return {v, false};
}

SpikePrediction spiked_lambda_max(double sigma_sq, double q, double delta_norm_sq, std::size_t n) {
  if (!(q >= 1.0) || n == 0 || !(sigma_sq > 0.0))
    throw std::invalid_argument("spiked_lambda_max: need sigma_sq > 0, Q >= 1, N >= 1");
  const double nn = static_cast<double>(n);
  const double m = nn / q;
  if (!(std::sqrt(delta_norm_sq) > std::pow(nn * m, 0.25)))
    return {mp_edges({sigma_sq, q}).lambda_plus, true};
  return {sigma_sq * (1.0 / q + delta_norm_sq / nn) * (1.0 + nn / delta_norm_sq), false};
}

double detectability_threshold(std::size_t n, std::size_t m) {
  return std::pow(static_cast<double>(n) * static_cast<double>(m), 0.25);
}

}  // namespace spectral_lab
