#include "spectral_lab/phase_classifier.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace spectral_lab {

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(4);
  out << v;
  return out.str();
}

}  // namespace

std::string to_string(PhaseLabel label) {
  switch (label) {
    case PhaseLabel::RANDOM_LIKE: return "RANDOM_LIKE";
    case PhaseLabel::BLEEDING_OUT: return "BLEEDING_OUT";
    case PhaseLabel::BULK_SPIKES: return "BULK_SPIKES";
    case PhaseLabel::BULK_DECAY: return "BULK_DECAY";
    case PhaseLabel::HEAVY_TAILED: return "HEAVY_TAILED";
    case PhaseLabel::RANK_COLLAPSE: return "RANK_COLLAPSE";
  }
  return "BULK_DECAY";
}

PhaseLabel phase_from_string(const std::string& name) {
  for (PhaseLabel p : kAllPhases)
    if (to_string(p) == name) return p;
  throw std::invalid_argument("unknown phase '" + name + "'");
}

PhaseEvidence classify(const Esd& esd, const MpFit& mp, const std::optional<PlFit>& pl,
                       const FitConfig& config) {
  PhaseEvidence ev;
  if (mp.present) ev.mp_fit = mp;
  ev.pl_fit = pl;
  const std::size_t m = esd.eigenvalues.size();
  ev.zero_mass_fraction = m ? static_cast<double>(esd.zero_count(config.rank_tol)) / static_cast<double>(m) : 0.0;
  ev.spike_count = mp.spikes.size();
  ev.bleeding_count = mp.bleeding_out.size();

  const std::size_t outliers = ev.spike_count + ev.bleeding_count;
  if (mp.present && outliers > 0 && mp.edge_fluctuation > 0.0) {
    std::vector<double> seq;
    const auto top = std::upper_bound(esd.eigenvalues.begin(), esd.eigenvalues.end(), mp.lambda_plus);
    seq.push_back(top == esd.eigenvalues.begin() ? mp.lambda_plus : *(top - 1));
    seq.insert(seq.end(), mp.bleeding_out.begin(), mp.bleeding_out.end());
    seq.insert(seq.end(), mp.spikes.begin(), mp.spikes.end());
    double gap = 0.0;
    for (std::size_t i = 1; i < seq.size(); ++i) gap = std::max(gap, seq[i] - seq[i - 1]);
    ev.max_gap = gap / mp.edge_fluctuation;
    ev.thin_margin = *ev.max_gap >= 0.5 * config.theta_gap && *ev.max_gap <= 2.0 * config.theta_gap;
  }

  const bool heavy_pl = pl && (pl->best_fit == TailFamily::PL || pl->best_fit == TailFamily::TPL) &&
                        pl->alpha <= config.theta_alpha;
  const double ks = mp.ks_distance;
  const double gap = ev.max_gap.value_or(0.0);

  ev.scores["RANK_COLLAPSE"] = std::min(1.0, ev.zero_mass_fraction / config.theta_zero);
  ev.scores["HEAVY_TAILED"] = !mp.present && heavy_pl ? 1.0 : (heavy_pl ? 0.5 : 0.0);
  ev.scores["RANDOM_LIKE"] = mp.present && outliers == 0 ? std::max(0.0, 1.0 - ks / config.ks_ceiling) : 0.0;
  ev.scores["BLEEDING_OUT"] = outliers > 0 ? std::max(0.0, 1.0 - gap / config.theta_gap) : 0.0;
  ev.scores["BULK_SPIKES"] =
      ev.spike_count > 0 ? std::min(1.0, gap / config.theta_gap) * std::min(1.0, config.ks_good / std::max(ks, 1e-12)) : 0.0;
  ev.scores["BULK_DECAY"] = mp.present ? std::min(1.0, ks / config.ks_ceiling) : (heavy_pl ? 0.0 : 1.0);

  auto& trace = ev.decision_trace;
  auto decide = [&](PhaseLabel label, const std::string& why) {
    trace.push_back(why + " -> " + to_string(label));
    ev.label = label;
    return ev;
  };

  if (ev.zero_mass_fraction >= config.theta_zero)
    return decide(PhaseLabel::RANK_COLLAPSE, "rule 1: zero mass " + fmt(ev.zero_mass_fraction) + " >= " + fmt(config.theta_zero));
  trace.push_back("rule 1: zero mass " + fmt(ev.zero_mass_fraction) + " < " + fmt(config.theta_zero));

  if (!mp.present && heavy_pl)
    return decide(PhaseLabel::HEAVY_TAILED, "rule 2: no MP fit; " + to_string(pl->best_fit) + " tail with alpha " +
                                                fmt(pl->alpha) + " <= " + fmt(config.theta_alpha));
  trace.push_back(std::string("rule 2: ") +
                  (mp.present ? "MP fit present"
                              : (pl ? "tail " + to_string(pl->best_fit) + " alpha " + fmt(pl->alpha) : "no PL fit")));

  if (mp.present && outliers == 0 && ks <= config.ks_good)
    return decide(PhaseLabel::RANDOM_LIKE, "rule 3: MP fit, no eigenvalues above lambda_plus, KS " + fmt(ks) +
                                               " <= " + fmt(config.ks_good));
  trace.push_back("rule 3: " + std::string(mp.present ? "" : "no MP fit, ") + std::to_string(ev.spike_count) +
                  " spikes, " + std::to_string(ev.bleeding_count) + " bleeding, KS " + fmt(ks));

  const std::string gap_text = "largest gap " + fmt(gap) + " edge scales vs " + fmt(config.theta_gap);
  if (mp.present && outliers > 0 && gap < config.theta_gap) {
    if (ev.thin_margin) trace.push_back("note: thin margin between bleeding-out and separated spikes");
    return decide(PhaseLabel::BLEEDING_OUT, "rule 4: " + gap_text + ", not separated");
  }
  trace.push_back("rule 4: " + (outliers > 0 ? gap_text : std::string("nothing above lambda_plus")));

  if (mp.present && ev.spike_count >= 1 && gap >= config.theta_gap && ks <= config.ks_good) {
    if (ev.thin_margin) trace.push_back("note: thin margin between bleeding-out and separated spikes");
    return decide(PhaseLabel::BULK_SPIKES, "rule 5: separated spikes, bulk KS " + fmt(ks) + " <= " + fmt(config.ks_good));
  }
  trace.push_back("rule 5: no separated spikes with a good bulk fit");

  return decide(PhaseLabel::BULK_DECAY, "rule 6: residual class");
}

EsdAnalysis analyze_esd(const Esd& esd, const FitConfig& config, std::optional<double> sigma_sq_shuf) {
  EsdAnalysis a;
  a.mp = fit_mp_bulk(esd, config, sigma_sq_shuf);
  try {
    a.pl = fit_and_compare(esd.nonzero(config.rank_tol), config);
  } catch (const std::invalid_argument& e) {
    a.pl_error = e.what();
  }
  a.phase = classify(esd, a.mp, a.pl, config);
  return a;
}

}  // namespace spectral_lab
