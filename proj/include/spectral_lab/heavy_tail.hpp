#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectral_lab/config.hpp"
#include "spectral_lab/tensor_io.hpp"

namespace spectral_lab {

enum class UniversalityClass { VERY_HEAVY, MODERATELY_HEAVY, WEAKLY_HEAVY, GAUSSIAN };

std::string to_string(UniversalityClass c);

/// N x M matrix with i.i.d. entries s * x, x Pareto with density mu x^(-1-mu)
/// on x >= 1 and s an independent random sign.
Matrix sample_pareto_matrix(std::size_t n, std::size_t m, double mu, std::uint64_t seed);

struct TheoreticalAlpha {
  double alpha = 0.0;
  bool corner_case = false;  // mu = 2 or mu = 4
  bool in_range = false;     // 0 < mu < 4, where the limit law holds
};

/// 1 + mu/2.
TheoreticalAlpha theoretical_alpha(double mu);

/// Class of a Pareto tail exponent; boundaries are exclusive, so mu = 2 and
/// mu = 4 give no class. mu = +inf is GAUSSIAN.
std::optional<UniversalityClass> universality_class(double mu);

struct CalibrationRow {
  double mu = 0.0;
  double alpha_mean = 0.0;
  double alpha_std = 0.0;
  std::size_t failed_runs = 0;
};

struct AlphaMuCalibration {
  double q = 2.0;
  std::size_t m = 1000;
  std::vector<CalibrationRow> rows;
  std::optional<double> a;  // alpha ~ a mu + b on 2 < mu < 4
  std::optional<double> b;
  std::uint64_t seed = 0;
  std::size_t runs = 0;
};

/// For each mu, fits a power law to the ESD of `runs` Pareto matrices of size
/// round(Q M) x M and records mean and sample std of alpha. (a, b) are the
/// least-squares line through the rows with 2 < mu < 4 when at least two exist.
AlphaMuCalibration calibrate_alpha_mu(double q, std::size_t m, const std::vector<double>& mu_grid,
                                      std::size_t runs, std::uint64_t seed, const FitConfig& config = {});

nlohmann::json to_json(const AlphaMuCalibration& c);
AlphaMuCalibration calibration_from_json(const nlohmann::json& j);

struct MuEstimate {
  std::optional<double> mu;
  UniversalityClass universality = UniversalityClass::WEAKLY_HEAVY;
  bool reliable = false;
  std::string note;
};

/// alpha < 2: mu = 2(alpha - 1), VERY_HEAVY. 2 <= alpha <= 4: MODERATELY_HEAVY,
/// mu = (alpha - b)/a when a calibration with (a, b) is given, absent otherwise.
/// alpha > 4: WEAKLY_HEAVY with no mu.
MuEstimate mu_from_alpha(double alpha, const AlphaMuCalibration* calibration = nullptr);

/// M^(4/mu - 1) (1/Q)^(1 - 2/mu).
double frechet_lambda_max_scale(std::size_t m, double q, double mu);

}  // namespace spectral_lab
