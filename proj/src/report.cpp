#include "spectral_lab/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "spectral_lab/spectra.hpp"

namespace spectral_lab {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Non-finite values become null; the caller records why.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

json num_list(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(num(v));
  return out;
}

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "-";
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

}  // namespace

std::string to_string(LayerStatus status) {
  switch (status) {
    case LayerStatus::OK: return "ok";
    case LayerStatus::SKIPPED: return "skipped";
    case LayerStatus::ERROR: return "error";
  }
  return "error";
}

LayerReport analyze_layer(const std::string& name, const Matrix& w_in, const FitConfig& config,
                          std::uint64_t seed) {
  const auto t_start = Clock::now();
  LayerReport r;
  r.name = name;
  r.stored_rows = static_cast<std::size_t>(w_in.rows());
  r.stored_cols = static_cast<std::size_t>(w_in.cols());
  const Matrix w = orient_tall(w_in);
  r.n = static_cast<std::size_t>(w.rows());
  r.m = static_cast<std::size_t>(w.cols());
  r.q = static_cast<double>(r.n) / static_cast<double>(r.m);
  r.normalized_by_n = config.normalize_by_n;

  auto t0 = Clock::now();
  const Esd esd = correlation_esd(w, config.normalize_by_n);
  r.timings.svd_seconds = seconds_since(t0);

  t0 = Clock::now();
  if (config.shuffle_reps > 0) {
    try {
      r.sigma_sq_shuf = shuffled_sigma(w, config.shuffle_reps, seed, config);
    } catch (const std::invalid_argument& e) {
      r.shuffle_error = e.what();
    }
  }
  r.timings.shuffle_seconds = seconds_since(t0);

  t0 = Clock::now();
  EsdAnalysis analysis = analyze_esd(esd, config, r.sigma_sq_shuf);
  r.timings.fit_seconds = seconds_since(t0);

  // Singular values recovered from the eigenvalues, descending.
  const double scale = config.normalize_by_n ? static_cast<double>(r.n) : 1.0;
  std::vector<double> nu(esd.eigenvalues.rbegin(), esd.eigenvalues.rend());
  for (double& v : nu) v = std::sqrt(std::max(v, 0.0) * scale);
  r.capacity = capacity_metrics(nu, analysis.mp.present ? analysis.mp.lambda_plus : 0.0, esd.lambda_max(),
                                config.rank_tol);

  if (r.sigma_sq_shuf)
    r.sigma_sq_rule_of_thumb = bulk_variance_rule_of_thumb(*r.sigma_sq_shuf, analysis.mp.bleeding_out, r.m).sigma_sq;
  if (analysis.pl) r.heavy_tail = mu_from_alpha(analysis.pl->alpha);

  if (config.glorot_rescale) {
    const double f = static_cast<double>(r.m + r.n) / (2.0 * static_cast<double>(r.n));
    r.glorot_factor = f;
    analysis.mp.sigma_sq_bulk *= f;
    analysis.mp.sigma_sq_emp *= f;
    if (analysis.mp.sigma_sq_shuf) *analysis.mp.sigma_sq_shuf *= f;
    if (analysis.phase.mp_fit) {
      analysis.phase.mp_fit->sigma_sq_bulk *= f;
      analysis.phase.mp_fit->sigma_sq_emp *= f;
    }
    if (r.sigma_sq_shuf) *r.sigma_sq_shuf *= f;
    if (r.sigma_sq_rule_of_thumb) *r.sigma_sq_rule_of_thumb *= f;
  }
  r.analysis = std::move(analysis);

  t0 = Clock::now();
  const std::size_t top_k = std::min(config.top_k, r.m);
  const auto pairs = correlation_eigenpairs(w, top_k, config.bulk_samples, config.normalize_by_n);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    VectorLocalization v;
    v.role = i < top_k ? "top" : "bulk";
    v.eigenvalue = pairs[i].eigenvalue;
    v.rank = pairs[i].rank;
    v.metrics = localization_metrics(pairs[i].eigenvector);
    r.localization.push_back(v);
  }
  r.timings.vectors_seconds = seconds_since(t0);

  r.histogram_linear_csv = histogram_csv(histogram(esd, std::nullopt, AxisScale::Linear));
  if (esd.lambda_max() > 0.0) r.histogram_log_csv = histogram_csv(histogram(esd, std::nullopt, AxisScale::Log));
  r.timings.total_seconds = seconds_since(t_start);
  return r;
}

LayerReport skipped_layer(const LayerRecord& record, const std::string& reason) {
  LayerReport r;
  r.name = record.name;
  r.status = LayerStatus::SKIPPED;
  r.reason = reason;
  r.stored_rows = record.rows;
  r.stored_cols = record.cols;
  r.n = std::max(record.rows, record.cols);
  r.m = std::min(record.rows, record.cols);
  r.q = r.m ? static_cast<double>(r.n) / static_cast<double>(r.m) : 0.0;
  return r;
}

LayerReport failed_layer(const LayerRecord& record, const std::string& error) {
  LayerReport r = skipped_layer(record, error);
  r.status = LayerStatus::ERROR;
  return r;
}

json to_json(const MpFit& fit) {
  json j;
  j["present"] = fit.present;
  j["lambda_plus"] = num(fit.lambda_plus);
  j["lambda_minus"] = num(fit.lambda_minus);
  j["sigma_sq_bulk"] = num(fit.sigma_sq_bulk);
  j["sigma_sq_shuf"] = num(fit.sigma_sq_shuf);
  j["sigma_sq_emp"] = num(fit.sigma_sq_emp);
  j["q_effective"] = num(fit.params.q);
  j["ks_distance"] = num(fit.ks_distance);
  j["edge_fluctuation"] = num(fit.edge_fluctuation);
  j["n_fit"] = fit.n_fit;
  j["window_size"] = fit.window_size;
  j["spike_count"] = fit.spikes.size();
  j["bleeding_count"] = fit.bleeding_out.size();
  j["spikes"] = num_list(fit.spikes);
  j["bleeding_out"] = num_list(fit.bleeding_out);
  j["warnings"] = fit.warnings;
  return j;
}

json to_json(const PlFit& fit) {
  json j;
  j["alpha"] = num(fit.alpha);
  j["alpha_sigma"] = num(fit.alpha_sigma);
  j["xmin"] = num(fit.xmin);
  j["xmax"] = num(fit.xmax);
  j["D"] = num(fit.ks_d);
  j["n_tail"] = fit.n_tail;
  j["best_fit"] = to_string(fit.best_fit);
  json comparisons = json::array();
  for (const Comparison& c : fit.comparisons) {
    comparisons.push_back({{"family", to_string(c.family)},
                           {"loglik_ratio", num(c.loglik_ratio)},
                           {"normalized_ratio", num(c.normalized_ratio)},
                           {"p_value", num(c.p_value)},
                           {"nested", c.nested},
                           {"params", num_list(c.params)}});
  }
  j["comparisons"] = comparisons;
  return j;
}

json to_json(const PhaseEvidence& ev) {
  json j;
  j["label"] = to_string(ev.label);
  j["mp_fit_present"] = ev.mp_fit.has_value();
  j["pl_fit_present"] = ev.pl_fit.has_value();
  j["zero_mass_fraction"] = num(ev.zero_mass_fraction);
  j["spike_count"] = ev.spike_count;
  j["bleeding_count"] = ev.bleeding_count;
  j["max_gap"] = num(ev.max_gap);
  j["thin_margin"] = ev.thin_margin;
  json scores = json::object();
  for (const auto& [k, v] : ev.scores) scores[k] = num(v);
  j["scores"] = scores;
  j["decision_trace"] = ev.decision_trace;
  return j;
}

json to_json(const LayerReport& r) {
  json j;
  j["name"] = r.name;
  j["status"] = to_string(r.status);
  j["reason"] = r.reason ? json(*r.reason) : json(nullptr);
  j["stored_shape"] = {r.stored_rows, r.stored_cols};
  j["shape"] = {r.n, r.m};
  j["Q"] = num(r.q);
  j["normalized_by_n"] = r.normalized_by_n;

  json nulls = json::object();
  const std::string missing = r.status == LayerStatus::OK ? "" : "layer " + to_string(r.status);

  if (r.capacity) {
    j["capacity"] = {{"hard_rank", r.capacity->hard_rank},
                     {"matrix_entropy", num(r.capacity->matrix_entropy)},
                     {"stable_rank", num(r.capacity->stable_rank)},
                     {"mp_soft_rank", num(r.capacity->mp_soft_rank)}};
  } else {
    j["capacity"] = nullptr;
    nulls["capacity"] = missing;
  }

  if (r.analysis) {
    j["mp"] = to_json(r.analysis->mp);
    if (!r.analysis->mp.present) nulls["mp.lambda_plus"] = "MP fit absent; lambda_plus reported as 0";
    if (r.analysis->pl) {
      j["pl"] = to_json(*r.analysis->pl);
    } else {
      j["pl"] = nullptr;
      nulls["pl"] = r.analysis->pl_error.value_or("power-law fit failed");
    }
    j["phase"] = to_json(r.analysis->phase);
    if (!r.analysis->phase.max_gap) nulls["phase.max_gap"] = "no eigenvalues above lambda_plus";
  } else {
    j["mp"] = nullptr;
    j["pl"] = nullptr;
    j["phase"] = nullptr;
    if (!missing.empty()) nulls["mp"] = nulls["pl"] = nulls["phase"] = missing;
  }

  j["sigma_sq_shuf"] = num(r.sigma_sq_shuf);
  if (!r.sigma_sq_shuf) nulls["sigma_sq_shuf"] = r.shuffle_error.value_or(missing.empty() ? "shuffle_reps = 0" : missing);
  j["sigma_sq_rule_of_thumb"] = num(r.sigma_sq_rule_of_thumb);
  if (!r.sigma_sq_rule_of_thumb) nulls["sigma_sq_rule_of_thumb"] = "needs sigma_sq_shuf";

  if (r.heavy_tail) {
    j["heavy_tail"] = {{"mu", num(r.heavy_tail->mu)},
                       {"universality", to_string(r.heavy_tail->universality)},
                       {"reliable", r.heavy_tail->reliable},
                       {"note", r.heavy_tail->note}};
    if (!r.heavy_tail->mu) nulls["heavy_tail.mu"] = r.heavy_tail->note;
  } else {
    j["heavy_tail"] = nullptr;
    nulls["heavy_tail"] = missing.empty() ? "needs a power-law fit" : missing;
  }

  json loc = json::array();
  for (const auto& v : r.localization) {
    loc.push_back({{"role", v.role},
                   {"rank", v.rank},
                   {"eigenvalue", num(v.eigenvalue)},
                   {"vector_entropy", num(v.metrics.vector_entropy)},
                   {"localization_ratio", num(v.metrics.localization_ratio)},
                   {"participation_ratio", num(v.metrics.participation_ratio)}});
  }
  j["localization"] = loc;

  j["glorot"] = {{"applied", r.glorot_factor.has_value()}, {"factor", num(r.glorot_factor)}};
  if (!r.glorot_factor) nulls["glorot.factor"] = "rescale not applied";

  j["histograms"] = {
      {"linear", r.histogram_linear_file.empty() ? json(nullptr) : json(r.histogram_linear_file)},
      {"log", r.histogram_log_file.empty() ? json(nullptr) : json(r.histogram_log_file)}};
  if (r.histogram_log_file.empty()) nulls["histograms.log"] = missing.empty() ? "no positive eigenvalues" : missing;
  if (r.histogram_linear_file.empty()) nulls["histograms.linear"] = missing.empty() ? "not written" : missing;

  j["null_reasons"] = nulls;
  return j;
}

json build_report(const std::vector<LayerReport>& layers, const FitConfig& config, std::uint64_t seed,
                  const std::vector<std::string>& warnings) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  j["seed"] = seed;
  j["config"] = to_json(config);
  j["conventions"] = {
      {"esd", config.normalize_by_n ? "X = W^T W / N" : "X = W^T W"},
      {"vector_entropy", "-sum P ln P over ceil(sqrt(n)) bins of standardized entries; nonnegative"},
      {"matrix_entropy_rank_one", 0}};
  j["warnings"] = warnings;
  json arr = json::array();
  for (std::size_t i = 0; i < layers.size(); ++i) arr.push_back(to_json(layers[i]));
  j["layers"] = arr;
  return j;
}

std::string markdown_table(const std::vector<LayerReport>& layers) {
  std::ostringstream out;
  out << "| Layer | Q | (M×N) | α | D | Best Fit | λ⁺ | R_mp | Phase |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : layers) {
    out << "| " << r.name << " | ";
    if (r.status != LayerStatus::OK || !r.analysis) {
      out << fixed(r.q, 1) << " | (" << r.m << "×" << r.n << ") | - | - | - | - | - | " << to_string(r.status)
          << " |\n";
      continue;
    }
    const auto& a = *r.analysis;
    out << fixed(r.q, 1) << " | (" << r.m << "×" << r.n << ") | ";
    if (a.pl) {
      out << fixed(a.pl->alpha, 2) << " | " << fixed(a.pl->ks_d, 4) << " | " << to_string(a.pl->best_fit);
    } else {
      out << "- | - | -";
    }
    out << " | " << (a.mp.present ? fixed(a.mp.lambda_plus, 4) : "-") << " | "
        << fixed(r.capacity ? r.capacity->mp_soft_rank : 0.0, 3) << " | " << to_string(a.phase.label) << " |\n";
  }
  return out.str();
}

json to_json(const RunManifest& m) {
  json timings = json::array();
  for (const auto& [name, t] : m.timings) {
    timings.push_back({{"layer", name},
                       {"svd_seconds", t.svd_seconds},
                       {"shuffle_seconds", t.shuffle_seconds},
                       {"fit_seconds", t.fit_seconds},
                       {"vectors_seconds", t.vectors_seconds},
                       {"total_seconds", t.total_seconds}});
  }
  return {{"tool", kToolName},
          {"tool_version", m.tool_version},
          {"command", m.command},
          {"seed", m.seed},
          {"config_sha256", m.config_hash},
          {"input_sha256", m.input_hash},
          {"started_at", m.started_at},
          {"finished_at", m.finished_at},
          {"timings", timings}};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace spectral_lab
