#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace spectral_lab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every tunable of the analysis. JSON keys match the field names; missing
/// keys keep their defaults, unknown keys are rejected.
struct FitConfig {
  // MP bulk fit
  std::size_t grid_size = 200;
  double k_margin = 3.0;
  double ks_ceiling = 0.10;
  double edge_weight = 0.0;
  std::size_t shuffle_reps = 10;
  std::uint64_t seed = 0;
  double rank_tol = 1e-10;

  // power-law fit
  std::size_t pl_min_tail = 50;
  std::size_t pl_max_xmin_candidates = 400;
  double pl_xmin_quantile = 0.9;
  double pl_p_threshold = 0.05;

  // phase classifier
  double theta_zero = 0.05;
  double theta_alpha = 4.0;
  double ks_good = 0.05;
  double theta_gap = 10.0;

  // analysis driver
  std::size_t min_dim = 50;
  std::size_t top_k = 3;
  std::size_t bulk_samples = 3;
  bool normalize_by_n = true;
  bool glorot_rescale = false;
  bool markdown = true;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

nlohmann::json to_json(const FitConfig& config);
FitConfig fit_config_from_json(const nlohmann::json& j);
FitConfig load_fit_config(const std::string& path);

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(const std::string& bytes);

}  // namespace spectral_lab
