#include "spectral_lab/config.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <type_traits>

#include <openssl/evp.h>

namespace spectral_lab {

using nlohmann::json;

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    if (!j.is_number_unsigned())
      throw ConfigError(std::string("config field '") + key + "' must be a non-negative integer");
  }
  try {
    out = j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError("invalid config: " + message);
}

}  // namespace

void FitConfig::validate() const {
  require(grid_size >= 2, "grid_size must be >= 2");
  require(k_margin > 0.0, "k_margin must be positive");
  require(ks_ceiling > 0.0 && ks_ceiling <= 1.0, "ks_ceiling must be in (0, 1]");
  require(edge_weight >= 0.0, "edge_weight must be >= 0");
  require(rank_tol > 0.0 && rank_tol < 1.0, "rank_tol must be in (0, 1)");
  require(pl_min_tail >= 2, "pl_min_tail must be >= 2");
  require(pl_max_xmin_candidates >= 1, "pl_max_xmin_candidates must be >= 1");
  require(pl_xmin_quantile > 0.0 && pl_xmin_quantile < 1.0, "pl_xmin_quantile must be in (0, 1)");
  require(pl_p_threshold > 0.0 && pl_p_threshold < 1.0, "pl_p_threshold must be in (0, 1)");
  require(theta_zero > 0.0 && theta_zero <= 1.0, "theta_zero must be in (0, 1]");
  require(theta_alpha > 1.0, "theta_alpha must be > 1");
  require(ks_good > 0.0 && ks_good <= 1.0, "ks_good must be in (0, 1]");
  require(theta_gap > 0.0, "theta_gap must be positive");
  require(min_dim >= 1, "min_dim must be >= 1");
  require(top_k >= 1, "top_k must be >= 1");
}

json to_json(const FitConfig& c) {
  return json{{"grid_size", c.grid_size},
              {"k_margin", c.k_margin},
              {"ks_ceiling", c.ks_ceiling},
              {"edge_weight", c.edge_weight},
              {"shuffle_reps", c.shuffle_reps},
              {"seed", c.seed},
              {"rank_tol", c.rank_tol},
              {"pl_min_tail", c.pl_min_tail},
              {"pl_max_xmin_candidates", c.pl_max_xmin_candidates},
              {"pl_xmin_quantile", c.pl_xmin_quantile},
              {"pl_p_threshold", c.pl_p_threshold},
              {"theta_zero", c.theta_zero},
              {"theta_alpha", c.theta_alpha},
              {"ks_good", c.ks_good},
              {"theta_gap", c.theta_gap},
              {"min_dim", c.min_dim},
              {"top_k", c.top_k},
              {"bulk_samples", c.bulk_samples},
              {"normalize_by_n", c.normalize_by_n},
              {"glorot_rescale", c.glorot_rescale},
              {"markdown", c.markdown}};
}

FitConfig fit_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  FitConfig c;
  const std::map<std::string, std::function<void(const json&)>> fields = {
      {"grid_size", [&](const json& v) { read_field(v, "grid_size", c.grid_size); }},
      {"k_margin", [&](const json& v) { read_field(v, "k_margin", c.k_margin); }},
      {"ks_ceiling", [&](const json& v) { read_field(v, "ks_ceiling", c.ks_ceiling); }},
      {"edge_weight", [&](const json& v) { read_field(v, "edge_weight", c.edge_weight); }},
      {"shuffle_reps", [&](const json& v) { read_field(v, "shuffle_reps", c.shuffle_reps); }},
      {"seed", [&](const json& v) { read_field(v, "seed", c.seed); }},
      {"rank_tol", [&](const json& v) { read_field(v, "rank_tol", c.rank_tol); }},
      {"pl_min_tail", [&](const json& v) { read_field(v, "pl_min_tail", c.pl_min_tail); }},
      {"pl_max_xmin_candidates",
       [&](const json& v) { read_field(v, "pl_max_xmin_candidates", c.pl_max_xmin_candidates); }},
      {"pl_xmin_quantile", [&](const json& v) { read_field(v, "pl_xmin_quantile", c.pl_xmin_quantile); }},
      {"pl_p_threshold", [&](const json& v) { read_field(v, "pl_p_threshold", c.pl_p_threshold); }},
      {"theta_zero", [&](const json& v) { read_field(v, "theta_zero", c.theta_zero); }},
      {"theta_alpha", [&](const json& v) { read_field(v, "theta_alpha", c.theta_alpha); }},
      {"ks_good", [&](const json& v) { read_field(v, "ks_good", c.ks_good); }},
      {"theta_gap", [&](const json& v) { read_field(v, "theta_gap", c.theta_gap); }},
      {"min_dim", [&](const json& v) { read_field(v, "min_dim", c.min_dim); }},
      {"top_k", [&](const json& v) { read_field(v, "top_k", c.top_k); }},
      {"bulk_samples", [&](const json& v) { read_field(v, "bulk_samples", c.bulk_samples); }},
      {"normalize_by_n", [&](const json& v) { read_field(v, "normalize_by_n", c.normalize_by_n); }},
      {"glorot_rescale", [&](const json& v) { read_field(v, "glorot_rescale", c.glorot_rescale); }},
      {"markdown", [&](const json& v) { read_field(v, "markdown", c.markdown); }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("unknown config field '" + key + "'");
    it->second(value);
  }
  c.validate();
  return c;
}

FitConfig load_fit_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return fit_config_from_json(j);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i)
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return out.str();
}

}  // namespace spectral_lab
