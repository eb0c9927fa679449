#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectral_lab/config.hpp"
#include "spectral_lab/marchenko_pastur.hpp"
#include "spectral_lab/phase_classifier.hpp"
#include "spectral_lab/power_law.hpp"
#include "spectral_lab/spectra.hpp"

namespace spectral_lab {

enum class GeneratorKind { GAUSSIAN, SPIKED, PARETO, RANK_COLLAPSED, MIXED_BULK_DECAY };

std::string to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& name);

/// Synthetic weight matrix recipe. Spike strengths are |Delta| in units of
/// sigma: Delta = sigma * sum_k theta_k u_k v_k^T with unit u_k, v_k.
/// MIXED_BULK_DECAY adds mix_scale * B * P to a Gaussian bulk, where B is a
/// Bernoulli(mix_density) mask and P has Pareto(mu) magnitudes.
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::GAUSSIAN;
  std::size_t n = 4000;
  std::size_t m = 1000;
  double sigma = 1.0;
  std::vector<double> spike_strengths;
  double mu = 1.0;
  double zero_fraction = 0.0;
  double mix_density = 0.0;
  double mix_scale = 0.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when parameters do not fit the kind.
  void validate() const;
};

nlohmann::json to_json(const GeneratorSpec& spec);
/// Throws ConfigError on malformed input.
GeneratorSpec generator_spec_from_json(const nlohmann::json& j);

/// N x M matrix, deterministic for a given spec (including seed).
Matrix generate(const GeneratorSpec& spec);

/// The generator whose output is labeled `phase` in the reference ensembles.
GeneratorSpec reference_spec(PhaseLabel phase, std::uint64_t seed);

struct RunSummary {
  std::uint64_t seed = 0;
  double lambda_max = 0.0;
  MpFit mp;
  std::optional<PlFit> pl;
  std::optional<std::string> pl_error;
  PhaseLabel phase = PhaseLabel::BULK_DECAY;
};

struct EnsembleResult {
  GeneratorSpec spec;
  std::vector<Esd> per_run;
  std::vector<double> pooled;  // concatenated eigenvalues, ascending
  std::vector<double> lambda_max;
  std::vector<RunSummary> runs;
};

/// Seed for run r of an ensemble with base seed `base`.
std::uint64_t run_seed(std::uint64_t base, std::size_t run);

/// Generates and analyzes `n_runs` independent matrices. Run r uses
/// run_seed(spec.seed, r). Shuffle baselines are not computed per run.
EnsembleResult run_ensemble(const GeneratorSpec& spec, std::size_t n_runs, const FitConfig& config);

}  // namespace spectral_lab
