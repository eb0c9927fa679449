#include "spectral_lab/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "spectral_lab/heavy_tail.hpp"
#include "spectral_lab/random.hpp"

namespace spectral_lab {

using nlohmann::json;

namespace {

Matrix gaussian(std::size_t n, std::size_t m, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  Matrix w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = normal(rng);
  return w;
}

Vector unit_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  return v / v.norm();
}

}  // namespace

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::GAUSSIAN: return "GAUSSIAN";
    case GeneratorKind::SPIKED: return "SPIKED";
    case GeneratorKind::PARETO: return "PARETO";
    case GeneratorKind::RANK_COLLAPSED: return "RANK_COLLAPSED";
    case GeneratorKind::MIXED_BULK_DECAY: return "MIXED_BULK_DECAY";
  }
  return "GAUSSIAN";
}

GeneratorKind generator_kind_from_string(const std::string& name) {
  for (auto k : {GeneratorKind::GAUSSIAN, GeneratorKind::SPIKED, GeneratorKind::PARETO,
                 GeneratorKind::RANK_COLLAPSED, GeneratorKind::MIXED_BULK_DECAY})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown generator kind '" + name + "'");
}

void GeneratorSpec::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("invalid generator spec: " + msg);
  };
  require(n >= 1 && m >= 1, "N and M must be positive");
  require(sigma > 0.0 && std::isfinite(sigma), "sigma must be positive");
  switch (kind) {
    case GeneratorKind::GAUSSIAN: break;
    case GeneratorKind::SPIKED:
      require(!spike_strengths.empty(), "SPIKED needs spike_strengths");
      require(spike_strengths.size() <= std::min(n, m), "more spikes than min(N, M)");
      for (double s : spike_strengths) require(s >= 0.0 && std::isfinite(s), "spike strengths must be >= 0");
      break;
    case GeneratorKind::PARETO: require(mu > 0.0, "PARETO needs mu > 0"); break;
    case GeneratorKind::RANK_COLLAPSED:
      require(zero_fraction >= 0.0 && zero_fraction < 1.0, "zero_fraction must be in [0, 1)");
      break;
    case GeneratorKind::MIXED_BULK_DECAY:
      require(mu > 0.0, "MIXED_BULK_DECAY needs mu > 0");
      require(mix_density > 0.0 && mix_density <= 1.0, "mix_density must be in (0, 1]");
      require(mix_scale > 0.0, "mix_scale must be positive");
      break;
  }
}

json to_json(const GeneratorSpec& s) {
  return json{{"kind", to_string(s.kind)},
              {"N", s.n},
              {"M", s.m},
              {"sigma", s.sigma},
              {"spike_strengths", s.spike_strengths},
              {"mu", s.mu},
              {"zero_fraction", s.zero_fraction},
              {"mix_density", s.mix_density},
              {"mix_scale", s.mix_scale},
              {"seed", s.seed}};
}

GeneratorSpec generator_spec_from_json(const json& j) {
  GeneratorSpec s;
  try {
    if (!j.is_object()) throw ConfigError("generator spec must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "kind") s.kind = generator_kind_from_string(value.get<std::string>());
      else if (key == "N") s.n = value.get<std::size_t>();
      else if (key == "M") s.m = value.get<std::size_t>();
      else if (key == "sigma") s.sigma = value.get<double>();
      else if (key == "spike_strengths") s.spike_strengths = value.get<std::vector<double>>();
      else if (key == "mu") s.mu = value.get<double>();
      else if (key == "zero_fraction") s.zero_fraction = value.get<double>();
      else if (key == "mix_density") s.mix_density = value.get<double>();
      else if (key == "mix_scale") s.mix_scale = value.get<double>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else throw ConfigError("unknown generator spec field '" + key + "'");
    }
    if (!j.contains("kind")) throw ConfigError("generator spec needs 'kind'");
    s.validate();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed generator spec: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

Matrix generate(const GeneratorSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  switch (spec.kind) {
    case GeneratorKind::GAUSSIAN: return gaussian(spec.n, spec.m, spec.sigma, rng);
    case GeneratorKind::SPIKED: {
      Matrix w = gaussian(spec.n, spec.m, spec.sigma, rng);
      for (double theta : spec.spike_strengths) {
        const Vector u = unit_vector(spec.n, rng);
        const Vector v = unit_vector(spec.m, rng);
        w.noalias() += (spec.sigma * theta) * u * v.transpose();
      }
      return w;
    }
    case GeneratorKind::PARETO:
      return spec.sigma * sample_pareto_matrix(spec.n, spec.m, spec.mu, splitmix64(spec.seed));
    case GeneratorKind::RANK_COLLAPSED: {
      Matrix w = gaussian(spec.n, spec.m, spec.sigma, rng);
      std::vector<Eigen::Index> cols(spec.m);
      std::iota(cols.begin(), cols.end(), 0);
      std::shuffle(cols.begin(), cols.end(), rng);
      const auto zeros = static_cast<std::size_t>(std::llround(spec.zero_fraction * static_cast<double>(spec.m)));
      for (std::size_t k = 0; k < zeros; ++k) w.col(cols[k]).setZero();
      return w;
    }
    case GeneratorKind::MIXED_BULK_DECAY: {
      Matrix w = gaussian(spec.n, spec.m, spec.sigma, rng);
      const Matrix p = sample_pareto_matrix(spec.n, spec.m, spec.mu, splitmix64(spec.seed));
      std::bernoulli_distribution mask(spec.mix_density);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i)
          if (mask(rng)) w(i, j) += spec.sigma * spec.mix_scale * p(i, j);
      return w;
    }
  }
  throw std::invalid_argument("unknown generator kind");
}

GeneratorSpec reference_spec(PhaseLabel phase, std::uint64_t seed) {
  GeneratorSpec s;
  s.seed = seed;
  const double threshold = detectability_threshold(s.n, s.m);
  switch (phase) {
    case PhaseLabel::RANDOM_LIKE: s.kind = GeneratorKind::GAUSSIAN; break;
    case PhaseLabel::BULK_SPIKES:
      s.kind = GeneratorKind::SPIKED;
      s.spike_strengths = {2.0 * threshold};
      break;
    case PhaseLabel::BLEEDING_OUT:
      s.kind = GeneratorKind::SPIKED;
      s.spike_strengths = {1.0 * threshold, 1.05 * threshold, 1.1 * threshold};
      break;
    case PhaseLabel::HEAVY_TAILED:
      s.kind = GeneratorKind::PARETO;
      s.n = 2000;
      s.mu = 1.0;
      break;
    case PhaseLabel::RANK_COLLAPSE:
      s.kind = GeneratorKind::RANK_COLLAPSED;
      s.zero_fraction = 0.3;
      break;
    case PhaseLabel::BULK_DECAY:
      s.kind = GeneratorKind::MIXED_BULK_DECAY;
      s.mu = 5.0;
      s.mix_density = 1e-3;
      s.mix_scale = 150.0;
      break;
  }
  return s;
}

std::uint64_t run_seed(std::uint64_t base, std::size_t run) { return derive_seed(base, run); }

EnsembleResult run_ensemble(const GeneratorSpec& spec, std::size_t n_runs, const FitConfig& config) {
  if (n_runs < 1) throw std::invalid_argument("run_ensemble: n_runs must be >= 1");
  EnsembleResult result;
  result.spec = spec;
  for (std::size_t r = 0; r < n_runs; ++r) {
    GeneratorSpec run = spec;
    run.seed = run_seed(spec.seed, r);
    Esd esd = correlation_esd(orient_tall(generate(run)), config.normalize_by_n);
    EsdAnalysis a = analyze_esd(esd, config);
    RunSummary summary;
    summary.seed = run.seed;
    summary.lambda_max = esd.lambda_max();
    summary.mp = std::move(a.mp);
    summary.pl = std::move(a.pl);
    summary.pl_error = std::move(a.pl_error);
    summary.phase = a.phase.label;
    result.lambda_max.push_back(summary.lambda_max);
    result.pooled.insert(result.pooled.end(), esd.eigenvalues.begin(), esd.eigenvalues.end());
    result.per_run.push_back(std::move(esd));
    result.runs.push_back(std::move(summary));
  }
  std::sort(result.pooled.begin(), result.pooled.end());
  return result;
}

}  // namespace spectral_lab
