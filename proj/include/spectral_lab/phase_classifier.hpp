#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spectral_lab/config.hpp"
#include "spectral_lab/marchenko_pastur.hpp"
#include "spectral_lab/power_law.hpp"
#include "spectral_lab/spectra.hpp"

namespace spectral_lab {

enum class PhaseLabel { RANDOM_LIKE, BLEEDING_OUT, BULK_SPIKES, BULK_DECAY, HEAVY_TAILED, RANK_COLLAPSE };

inline constexpr PhaseLabel kAllPhases[] = {PhaseLabel::RANDOM_LIKE,  PhaseLabel::BLEEDING_OUT,
                                            PhaseLabel::BULK_SPIKES,  PhaseLabel::BULK_DECAY,
                                            PhaseLabel::HEAVY_TAILED, PhaseLabel::RANK_COLLAPSE};

std::string to_string(PhaseLabel label);
PhaseLabel phase_from_string(const std::string& name);

struct PhaseEvidence {
  PhaseLabel label = PhaseLabel::BULK_DECAY;
  std::optional<MpFit> mp_fit;     // absent when the MP fit is absent
  std::optional<PlFit> pl_fit;
  double zero_mass_fraction = 0.0;
  std::size_t spike_count = 0;
  std::size_t bleeding_count = 0;
  std::optional<double> max_gap;   // largest gap above the bulk, in units of the edge scale
  bool thin_margin = false;        // gap within a factor 2 of theta_gap
  std::map<std::string, double> scores;
  std::vector<std::string> decision_trace;
};

/// Ordered rules; the first that fires sets the label:
///   1. zero mass >= theta_zero                          -> RANK_COLLAPSE
///   2. no MP fit, PL or TPL tail with alpha <= theta_alpha -> HEAVY_TAILED
///   3. MP fit, nothing above lambda_plus, KS <= ks_good  -> RANDOM_LIKE
///   4. MP fit, eigenvalues above lambda_plus, largest gap in the sequence
///      (top bulk eigenvalue, outliers...) below theta_gap * delta -> BLEEDING_OUT
///   5. MP fit, >= 1 spike, that gap >= theta_gap * delta, KS <= ks_good -> BULK_SPIKES
///   6. otherwise                                         -> BULK_DECAY
PhaseEvidence classify(const Esd& esd, const MpFit& mp, const std::optional<PlFit>& pl,
                       const FitConfig& config);

struct EsdAnalysis {
  MpFit mp;
  std::optional<PlFit> pl;
  std::optional<std::string> pl_error;
  PhaseEvidence phase;
};

/// MP fit, power-law fit with comparisons on the nonzero eigenvalues, then classify.
EsdAnalysis analyze_esd(const Esd& esd, const FitConfig& config,
                        std::optional<double> sigma_sq_shuf = std::nullopt);

}  // namespace spectral_lab
