#include "spectral_lab/heavy_tail.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "spectral_lab/power_law.hpp"
#include "spectral_lab/random.hpp"
#include "spectral_lab/spectra.hpp"

namespace spectral_lab {

using nlohmann::json;

std::string to_string(UniversalityClass c) {
  switch (c) {
    case UniversalityClass::VERY_HEAVY: return "VERY_HEAVY";
    case UniversalityClass::MODERATELY_HEAVY: return "MODERATELY_HEAVY";
    case UniversalityClass::WEAKLY_HEAVY: return "WEAKLY_HEAVY";
    case UniversalityClass::GAUSSIAN: return "GAUSSIAN";
  }
  return "GAUSSIAN";
}

Matrix sample_pareto_matrix(std::size_t n, std::size_t m, double mu, std::uint64_t seed) {
  if (!(mu > 0.0)) throw std::invalid_argument("sample_pareto_matrix: mu must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  const double inv_mu = -1.0 / mu;
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const double x = std::pow(1.0 - unif(rng), inv_mu);  // 1 - U lies in (0, 1]
      w(i, j) = (rng() & 1U) ? x : -x;
    }
  }
  return w;
}

TheoreticalAlpha theoretical_alpha(double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("theoretical_alpha: mu must be positive");
  return {1.0 + 0.5 * mu, mu == 2.0 || mu == 4.0, mu < 4.0};
}

std::optional<UniversalityClass> universality_class(double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("universality_class: mu must be positive");
  if (std::isinf(mu)) return UniversalityClass::GAUSSIAN;
  if (mu < 2.0) return UniversalityClass::VERY_HEAVY;
  if (mu > 2.0 && mu < 4.0) return UniversalityClass::MODERATELY_HEAVY;
  if (mu > 4.0) return UniversalityClass::WEAKLY_HEAVY;
  return std::nullopt;
}

AlphaMuCalibration calibrate_alpha_mu(double q, std::size_t m, const std::vector<double>& mu_grid,
                                      std::size_t runs, std::uint64_t seed, const FitConfig& config) {
  if (!(q >= 1.0) || m == 0 || runs == 0)
    throw std::invalid_argument("calibrate_alpha_mu: need Q >= 1, M >= 1, runs >= 1");
  AlphaMuCalibration cal;
  cal.q = q;
  cal.m = m;
  cal.seed = seed;
  cal.runs = runs;
  const auto n = static_cast<std::size_t>(std::llround(q * static_cast<double>(m)));

  for (std::size_t i = 0; i < mu_grid.size(); ++i) {
    CalibrationRow row;
    row.mu = mu_grid[i];
    std::vector<double> alphas;
    for (std::size_t r = 0; r < runs; ++r) {
      const Matrix w = sample_pareto_matrix(n, m, row.mu, derive_seed(derive_seed(seed, i), r));
      try {
        alphas.push_back(fit_power_law(correlation_esd(w).nonzero(config.rank_tol), config).alpha);
      } catch (const std::invalid_argument&) {
        ++row.failed_runs;
      }
    }
    if (!alphas.empty()) {
      double sum = 0.0;
      for (double a : alphas) sum += a;
      row.alpha_mean = sum / static_cast<double>(alphas.size());
      double ss = 0.0;
      for (double a : alphas) ss += (a - row.alpha_mean) * (a - row.alpha_mean);
      row.alpha_std = alphas.size() > 1 ? std::sqrt(ss / static_cast<double>(alphas.size() - 1)) : 0.0;
    }
    cal.rows.push_back(row);
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, k = 0.0;
  for (const auto& row : cal.rows) {
    if (!(row.mu > 2.0 && row.mu < 4.0) || row.failed_runs == runs) continue;
    sx += row.mu;
    sy += row.alpha_mean;
    sxx += row.mu * row.mu;
    sxy += row.mu * row.alpha_mean;
    k += 1.0;
  }
  const double det = k * sxx - sx * sx;
  if (k >= 2.0 && det > 0.0) {
    cal.a = (k * sxy - sx * sy) / det;
    cal.b = (sy - *cal.a * sx) / k;
  }
  return cal;
}

json to_json(const AlphaMuCalibration& c) {
  json rows = json::array();
  for (const auto& r : c.rows)
    rows.push_back({{"mu", r.mu}, {"alpha_mean", r.alpha_mean}, {"alpha_std", r.alpha_std},
                    {"failed_runs", r.failed_runs}});
  return json{{"Q", c.q},
              {"M", c.m},
              {"rows", rows},
              {"a", c.a ? json(*c.a) : json(nullptr)},
              {"b", c.b ? json(*c.b) : json(nullptr)},
              {"seed", c.seed},
              {"runs", c.runs}};
}

AlphaMuCalibration calibration_from_json(const json& j) {
  AlphaMuCalibration c;
  try {
    c.q = j.at("Q").get<double>();
    c.m = j.at("M").get<std::size_t>();
    for (const auto& r : j.at("rows")) {
      CalibrationRow row;
      row.mu = r.at("mu").get<double>();
      row.alpha_mean = r.at("alpha_mean").get<double>();
      row.alpha_std = r.at("alpha_std").get<double>();
      row.failed_runs = r.value("failed_runs", std::size_t{0});
      c.rows.push_back(row);
    }
    if (!j.at("a").is_null()) c.a = j.at("a").get<double>();
    if (!j.at("b").is_null()) c.b = j.at("b").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.runs = j.at("runs").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed calibration file: ") + e.what());
  }
  return c;
}

MuEstimate mu_from_alpha(double alpha, const AlphaMuCalibration* calibration) {
  if (!(alpha > 1.0)) throw std::invalid_argument("mu_from_alpha: alpha must exceed 1");
  MuEstimate e;
  if (alpha < 2.0) {
    e.mu = 2.0 * (alpha - 1.0);
    e.universality = UniversalityClass::VERY_HEAVY;
    e.reliable = true;
  } else if (alpha <= 4.0) {
    e.universality = UniversalityClass::MODERATELY_HEAVY;
    if (calibration && calibration->a && calibration->b && *calibration->a != 0.0) {
      e.mu = (alpha - *calibration->b) / *calibration->a;
      e.reliable = true;
    } else {
      e.note = "mu needs an alpha-mu calibration for 2 <= alpha <= 4";
    }
  } else {
    e.universality = UniversalityClass::WEAKLY_HEAVY;
    e.note = "alpha > 4: mu is not identifiable from alpha";
  }
  return e;
}

double frechet_lambda_max_scale(std::size_t m, double q, double mu) {
  if (m == 0 || !(q > 0.0) || !(mu > 0.0))
    throw std::invalid_argument("frechet_lambda_max_scale: need M >= 1, Q > 0, mu > 0");
  return std::pow(static_cast<double>(m), 4.0 / mu - 1.0) * std::pow(1.0 / q, 1.0 - 2.0 / mu);
}

}  // namespace spectral_lab
