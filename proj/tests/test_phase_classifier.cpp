#include <gtest/gtest.h>

#include <random>

#include "spectral_lab/ensembles.hpp"
#include "spectral_lab/phase_classifier.hpp"
#include "test_support.hpp"

using namespace spectral_lab;

namespace {

Esd esd_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  Esd e;
  e.eigenvalues = std::move(values);
  e.m = e.eigenvalues.size();
  e.n = 4 * e.m;
  e.q = 4.0;
  return e;
}

// Bulk of 100 evenly spread values in (0.25, 2.2) followed by `extra`.
Esd bulk_plus(const std::vector<double>& extra, std::size_t zeros = 0) {
  std::vector<double> v(zeros, 0.0);
  for (int i = 0; i < 100; ++i) v.push_back(0.25 + 1.95 * i / 99.0);
  v.insert(v.end(), extra.begin(), extra.end());
  return esd_of(v);
}

MpFit mp_fit(double ks, std::vector<double> bleeding = {}, std::vector<double> spikes = {}) {
  MpFit f;
  f.present = true;
  f.lambda_plus = 2.25;
  f.edge_fluctuation = 0.01;
  f.ks_distance = ks;
  f.bleeding_out = std::move(bleeding);
  f.spikes = std::move(spikes);
  return f;
}

PlFit pl_fit(TailFamily family, double alpha) {
  PlFit p;
  p.alpha = alpha;
  p.best_fit = family;
  return p;
}

PhaseLabel label_of(const Matrix& w) {
  return analyze_esd(correlation_esd(orient_tall(w)), FitConfig{}).phase.label;
}

}  // namespace

TEST(Classify, Rule1RankCollapse) {
  const auto ev = classify(bulk_plus({}, 10), mp_fit(0.01), std::nullopt, FitConfig{});
  EXPECT_EQ(ev.label, PhaseLabel::RANK_COLLAPSE);
  EXPECT_NEAR(ev.zero_mass_fraction, 10.0 / 110.0, 1e-15);
  EXPECT_EQ(ev.decision_trace.size(), 1u);
}

TEST(Classify, ZeroMassBelowThresholdFallsThrough) {
  const auto ev = classify(bulk_plus({}, 4), mp_fit(0.01), std::nullopt, FitConfig{});
  EXPECT_EQ(ev.label, PhaseLabel::RANDOM_LIKE);
}

TEST(Classify, Rule2HeavyTailed) {
  FitConfig c;
  EXPECT_EQ(classify(bulk_plus({}), MpFit{}, pl_fit(TailFamily::PL, 1.5), c).label, PhaseLabel::HEAVY_TAILED);
  EXPECT_EQ(classify(bulk_plus({}), MpFit{}, pl_fit(TailFamily::TPL, 4.0), c).label, PhaseLabel::HEAVY_TAILED);
  // Too steep, or not power-law shaped, or no fit at all: residual class.
  EXPECT_EQ(classify(bulk_plus({}), MpFit{}, pl_fit(TailFamily::PL, 4.5), c).label, PhaseLabel::BULK_DECAY);
  EXPECT_EQ(classify(bulk_plus({}), MpFit{}, pl_fit(TailFamily::EXPONENTIAL, 2.0), c).label, PhaseLabel::BULK_DECAY);
  EXPECT_EQ(classify(bulk_plus({}), MpFit{}, std::nullopt, c).label, PhaseLabel::BULK_DECAY);
}

TEST(Classify, Rule2NeedsAbsentMpFit) {
  const auto ev = classify(bulk_plus({}), mp_fit(0.01), pl_fit(TailFamily::PL, 1.5), FitConfig{});
  EXPECT_EQ(ev.label, PhaseLabel::RANDOM_LIKE);
}

TEST(Classify, Rule3RandomLike) {
  FitConfig c;
  EXPECT_EQ(classify(bulk_plus({}), mp_fit(0.05), std::nullopt, c).label, PhaseLabel::RANDOM_LIKE);
  EXPECT_EQ(classify(bulk_plus({}), mp_fit(0.06), std::nullopt, c).label, PhaseLabel::BULK_DECAY);
}

TEST(Classify, Rule4BleedingOut) {
  // Gaps from the top bulk value 2.2: 0.06, 0.02 -> 6 edge scales.
  const auto ev = classify(bulk_plus({2.26, 2.28}), mp_fit(0.01, {2.26, 2.28}), std::nullopt, FitConfig{});
  EXPECT_EQ(ev.label, PhaseLabel::BLEEDING_OUT);
  ASSERT_TRUE(ev.max_gap.has_value());
  EXPECT_NEAR(*ev.max_gap, 6.0, 1e-9);
  EXPECT_TRUE(ev.thin_margin);
}

TEST(Classify, Rule4CountsUnseparatedSpikes) {
  const auto ev = classify(bulk_plus({2.27}), mp_fit(0.01, {}, {2.27}), std::nullopt, FitConfig{});
  EXPECT_EQ(ev.label, PhaseLabel::BLEEDING_OUT);
}

TEST(Classify, Rule5BulkSpikes) {
  const auto ev = classify(bulk_plus({3.4}), mp_fit(0.02, {}, {3.4}), std::nullopt, FitConfig{});
  EXPECT_EQ(ev.label, PhaseLabel::BULK_SPIKES);
  EXPECT_NEAR(*ev.max_gap, 120.0, 1e-9);
  EXPECT_FALSE(ev.thin_margin);
  EXPECT_EQ(ev.spike_count, 1u);
}

TEST(Classify, Rule5NeedsGoodBulk) {
  const auto ev = classify(bulk_plus({3.4}), mp_fit(0.08, {}, {3.4}), std::nullopt, FitConfig{});
  EXPECT_EQ(ev.label, PhaseLabel::BULK_DECAY);
}

TEST(Classify, TraceRecordsEveryRuleEvaluated) {
  const auto ev = classify(bulk_plus({3.4}), mp_fit(0.08, {}, {3.4}), std::nullopt, FitConfig{});
  ASSERT_EQ(ev.decision_trace.size(), 6u);
  for (int r = 1; r <= 6; ++r)
    EXPECT_EQ(ev.decision_trace[r - 1].rfind("rule " + std::to_string(r), 0), 0u) << ev.decision_trace[r - 1];
  EXPECT_EQ(ev.scores.size(), 6u);
}

TEST(Classify, ThresholdsComeFromConfig) {
  FitConfig c;
  c.theta_gap = 200.0;
  EXPECT_EQ(classify(bulk_plus({3.4}), mp_fit(0.02, {}, {3.4}), std::nullopt, c).label, PhaseLabel::BLEEDING_OUT);
  c = FitConfig{};
  c.ks_good = 0.1;
  EXPECT_EQ(classify(bulk_plus({}), mp_fit(0.08), std::nullopt, c).label, PhaseLabel::RANDOM_LIKE);
}

TEST(Classify, TotalOnArbitraryEvidence) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const TailFamily families[] = {TailFamily::PL, TailFamily::TPL, TailFamily::EXPONENTIAL, TailFamily::LOGNORMAL,
                                 TailFamily::STRETCHED_EXP};
  for (int t = 0; t < 500; ++t) {
    std::vector<double> values;
    const int n = 1 + static_cast<int>(unif(rng) * 50);
    for (int i = 0; i < n; ++i) values.push_back(unif(rng) < 0.1 ? 0.0 : 5.0 * unif(rng));
    MpFit mp;
    if (unif(rng) < 0.7) {
      mp = mp_fit(unif(rng) * 0.1);
      mp.edge_fluctuation = unif(rng) < 0.1 ? 0.0 : 0.05 * unif(rng);
      for (double v : values)
        if (v > mp.lambda_plus) (unif(rng) < 0.5 ? mp.spikes : mp.bleeding_out).push_back(v);
    }
    std::optional<PlFit> pl;
    if (unif(rng) < 0.7) pl = pl_fit(families[t % 5], 1.0 + 6.0 * unif(rng));
    const PhaseEvidence ev = classify(esd_of(values), mp, pl, FitConfig{});
    EXPECT_FALSE(ev.decision_trace.empty());
    EXPECT_NE(std::find(std::begin(kAllPhases), std::end(kAllPhases), ev.label), std::end(kAllPhases));
  }
}

TEST(PhaseLabelNames, RoundTrip) {
  for (PhaseLabel p : kAllPhases) EXPECT_EQ(phase_from_string(to_string(p)), p);
  EXPECT_THROW(phase_from_string("SPIKY"), std::invalid_argument);
}

TEST(AnalyzeEsd, GeneratorExamples) {
  EXPECT_EQ(label_of(test_support::gaussian(2000, 500, 1)), PhaseLabel::RANDOM_LIKE);

  GeneratorSpec spiked;
  spiked.kind = GeneratorKind::SPIKED;
  spiked.n = 2000;
  spiked.m = 500;
  spiked.spike_strengths = {2.0 * detectability_threshold(2000, 500)};
  spiked.seed = 2;
  EXPECT_EQ(label_of(generate(spiked)), PhaseLabel::BULK_SPIKES);

  GeneratorSpec pareto;
  pareto.kind = GeneratorKind::PARETO;
  pareto.n = 1000;
  pareto.m = 500;
  pareto.mu = 1.0;
  pareto.seed = 3;
  EXPECT_EQ(label_of(generate(pareto)), PhaseLabel::HEAVY_TAILED);
}

TEST(AnalyzeEsd, LabelIsScaleInvariant) {
  for (PhaseLabel phase : kAllPhases) {
    GeneratorSpec s = reference_spec(phase, 5);
    s.n /= 2;
    s.m /= 2;
    if (!s.spike_strengths.empty())
      for (auto& theta : s.spike_strengths) theta *= detectability_threshold(s.n, s.m) / detectability_threshold(2 * s.n, 2 * s.m);
    const Esd esd = correlation_esd(orient_tall(generate(s)));
    const PhaseLabel base = analyze_esd(esd, FitConfig{}).phase.label;
    for (double c : {1e-3, 0.7, 30.0}) {
      Esd scaled = esd;
      for (auto& v : scaled.eigenvalues) v *= c * c;
      EXPECT_EQ(analyze_esd(scaled, FitConfig{}).phase.label, base) << to_string(phase) << " c=" << c;
    }
  }
}
