#include "spectral_lab/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "spectral_lab/config.hpp"
#include "spectral_lab/ensembles.hpp"
#include "spectral_lab/heavy_tail.hpp"
#include "spectral_lab/random.hpp"
#include "spectral_lab/report.hpp"

namespace spectral_lab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

FitConfig load_config(const std::optional<fs::path>& path) {
  FitConfig config = path ? load_fit_config(path->string()) : FitConfig{};
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return config;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> explicit_seed, std::uint64_t fallback) {
  if (explicit_seed) return *explicit_seed;
  if (auto env = seed_from_env()) return *env;
  return fallback;
}

std::string file_stem(std::size_t index, const std::string& name) {
  std::string safe;
  for (char c : name) safe += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  std::ostringstream out;
  out << std::setw(3) << std::setfill('0') << index << '_' << safe;
  return out.str();
}

// Hash of the manifest followed by every layer file in manifest order.
std::string bundle_hash(const fs::path& dir, const Bundle& bundle) {
  std::string digests = sha256_hex(read_file(dir / "manifest.json"));
  for (const auto& layer : bundle.layers) digests += sha256_hex(read_file(dir / layer.file));
  return sha256_hex(digests);
}

}  // namespace

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv(kSeedEnvVar);
  if (!raw || !*raw) return std::nullopt;
  const std::string text(raw);
  if (text.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(std::string(kSeedEnvVar) + " must be an unsigned integer, got '" + text + "'");
  try {
    return std::stoull(text);
  } catch (const std::out_of_range&) {
    throw ConfigError(std::string(kSeedEnvVar) + " out of range: " + text);
  }
}

int cmd_analyze(const AnalyzeOptions& options, std::ostream& err) {
  RunManifest manifest;
  manifest.command = "analyze";
  manifest.started_at = utc_timestamp();

  FitConfig config;
  try {
    config = load_config(options.config);
    config.seed = resolve_seed(options.seed, config.seed);
    if (options.glorot_rescale) config.glorot_rescale = true;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (options.jobs < 1) {
    err << "usage error: --jobs must be >= 1\n";
    return kExitUsage;
  }

  Bundle bundle;
  try {
    bundle = read_bundle(options.bundle);
    manifest.input_hash = bundle_hash(options.bundle, bundle);
  } catch (const std::exception& e) {
    err << "cannot read bundle: " << e.what() << "\n";
    return kExitFailure;
  }

  std::vector<std::string> warnings;
  if (bundle.layers.empty()) warnings.push_back("bundle has no layers");

  const std::size_t count = bundle.layers.size();
  std::vector<LayerReport> layers(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      const LayerRecord& record = bundle.layers[i];
      const std::size_t m = std::min(record.rows, record.cols);
      if (m < config.min_dim) {
        layers[i] = skipped_layer(record, "M = " + std::to_string(m) + " below min_dim " +
                                              std::to_string(config.min_dim) + "; too few eigenvalues");
        continue;
      }
      try {
        layers[i] = analyze_layer(record.name, read_matrix(options.bundle / record.file), config,
                                  derive_seed(config.seed, i));
      } catch (const std::exception& e) {
        layers[i] = failed_layer(record, e.what());
      }
    }
  };
  const std::size_t threads = std::min(options.jobs, std::max<std::size_t>(count, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  bool any_failed = false;
  try {
    fs::create_directories(options.out_dir / "histograms");
    for (std::size_t i = 0; i < count; ++i) {
      LayerReport& r = layers[i];
      if (r.status == LayerStatus::ERROR) {
        any_failed = true;
        err << "layer " << r.name << " failed: " << r.reason.value_or("") << "\n";
      }
      const std::string stem = file_stem(i, r.name);
      if (!r.histogram_linear_csv.empty()) {
        r.histogram_linear_file = "histograms/" + stem + "_linear.csv";
        write_file_atomic(options.out_dir / r.histogram_linear_file, r.histogram_linear_csv);
      }
      if (!r.histogram_log_csv.empty()) {
        r.histogram_log_file = "histograms/" + stem + "_log.csv";
        write_file_atomic(options.out_dir / r.histogram_log_file, r.histogram_log_csv);
      }
      if (r.status == LayerStatus::OK) manifest.timings.emplace_back(r.name, r.timings);
    }
    for (const auto& w : warnings) err << "warning: " << w << "\n";

    write_file_atomic(options.out_dir / "report.json", dump_json(build_report(layers, config, config.seed, warnings)));
    if (config.markdown) write_file_atomic(options.out_dir / "report.md", markdown_table(layers));

    manifest.seed = config.seed;
    manifest.config_hash = sha256_hex(dump_json(to_json(config)));
    manifest.finished_at = utc_timestamp();
    write_file_atomic(options.out_dir / "run_manifest.json", dump_json(to_json(manifest)));
  } catch (const std::exception& e) {
    err << "cannot write report: " << e.what() << "\n";
    return kExitFailure;
  }
  return any_failed ? kExitFailure : kExitOk;
}

int cmd_generate(const fs::path& spec_path, const fs::path& out_bundle, std::optional<std::uint64_t> seed,
                 std::ostream& err) {
  GeneratorSpec spec;
  try {
    const json j = read_json_file(spec_path);
    spec = generator_spec_from_json(j);
    if (seed || !j.contains("seed")) spec.seed = resolve_seed(seed, spec.seed);
  } catch (const ConfigError& e) {
    err << "invalid spec: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    Bundle bundle;
    const std::map<std::string, std::string> meta{{"generator", to_string(spec.kind)},
                                                  {"spec", to_json(spec).dump()}};
    bundle.layers.push_back(write_layer(out_bundle, "W", generate(spec), DType::F64, meta));
    write_bundle(bundle, out_bundle);
  } catch (const std::exception& e) {
    err << "generate failed: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_ensemble(const fs::path& spec_path, std::size_t runs, const fs::path& out_dir,
                 const std::optional<fs::path>& config_path, std::optional<std::uint64_t> seed, std::ostream& err) {
  RunManifest manifest;
  manifest.command = "ensemble";
  manifest.started_at = utc_timestamp();
  GeneratorSpec spec;
  FitConfig config;
  try {
    if (runs < 1) throw ConfigError("--runs must be >= 1");
    const std::string spec_text = read_file(spec_path);
    const json j = read_json_file(spec_path);
    spec = generator_spec_from_json(j);
    if (seed || !j.contains("seed")) spec.seed = resolve_seed(seed, spec.seed);
    config = load_config(config_path);
    manifest.input_hash = sha256_hex(spec_text);
  } catch (const std::runtime_error& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const EnsembleResult result = run_ensemble(spec, runs, config);

    // Pooled ESD against the MP law implied by the generator's sigma and shape.
    const double n = static_cast<double>(std::max(spec.n, spec.m));
    const double m = static_cast<double>(std::min(spec.n, spec.m));
    const MpParams generator_mp{spec.sigma * spec.sigma, n / m};
    double mean = 0.0;
    for (double v : result.lambda_max) mean += v;
    mean /= static_cast<double>(runs);
    double var = 0.0;
    for (double v : result.lambda_max) var += (v - mean) * (v - mean);
    const double sd = runs > 1 ? std::sqrt(var / static_cast<double>(runs - 1)) : 0.0;

    json per_run = json::array();
    std::map<std::string, std::size_t> phase_counts;
    for (PhaseLabel p : kAllPhases) phase_counts[to_string(p)] = 0;
    for (const RunSummary& s : result.runs) {
      ++phase_counts[to_string(s.phase)];
      per_run.push_back({{"seed", s.seed},
                         {"lambda_max", s.lambda_max},
                         {"phase", to_string(s.phase)},
                         {"mp", to_json(s.mp)},
                         {"pl", s.pl ? to_json(*s.pl) : json(nullptr)},
                         {"pl_error", s.pl_error ? json(*s.pl_error) : json(nullptr)}});
    }

    Esd pooled;
    pooled.eigenvalues = result.pooled;
    pooled.n = static_cast<std::size_t>(n);
    pooled.m = static_cast<std::size_t>(m);
    pooled.q = n / m;
    write_file_atomic(out_dir / "pooled_linear.csv", histogram_csv(histogram(pooled, std::nullopt, AxisScale::Linear)));
    if (pooled.lambda_max() > 0.0)
      write_file_atomic(out_dir / "pooled_log.csv", histogram_csv(histogram(pooled, std::nullopt, AxisScale::Log)));

    json doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["tool"] = kToolName;
    doc["tool_version"] = kToolVersion;
    doc["spec"] = to_json(spec);
    doc["runs"] = runs;
    doc["config"] = to_json(config);
    doc["pooled"] = {{"count", result.pooled.size()},
                     {"generator_lambda_plus", mp_edges(generator_mp).lambda_plus},
                     {"ks_vs_generator_mp", ks_distance(result.pooled, generator_mp)},
                     {"lambda_max_mean", mean},
                     {"lambda_max_std", sd},
                     {"histograms", {{"linear", "pooled_linear.csv"},
                                     {"log", pooled.lambda_max() > 0.0 ? json("pooled_log.csv") : json(nullptr)}}}};
    doc["phase_counts"] = phase_counts;
    doc["per_run"] = per_run;
    write_file_atomic(out_dir / "ensemble.json", dump_json(doc));

    manifest.seed = spec.seed;
    manifest.config_hash = sha256_hex(dump_json(to_json(config)));
    manifest.finished_at = utc_timestamp();
    write_file_atomic(out_dir / "run_manifest.json", dump_json(to_json(manifest)));
  } catch (const std::exception& e) {
    err << "ensemble failed: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_calibrate(double q, std::size_t m, const std::vector<double>& mu_grid, std::size_t runs,
                  const fs::path& out_file, const std::optional<fs::path>& config_path,
                  std::optional<std::uint64_t> seed, std::ostream& err) {
  FitConfig config;
  std::uint64_t base = 0;
  try {
    if (!(q >= 1.0)) throw ConfigError("--q must be >= 1");
    if (m < 1) throw ConfigError("--m must be >= 1");
    if (runs < 1) throw ConfigError("--runs must be >= 1");
    if (mu_grid.empty()) throw ConfigError("--mu-grid is empty");
    for (double mu : mu_grid)
      if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("--mu-grid values must be positive");
    config = load_config(config_path);
    base = resolve_seed(seed, config.seed);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    const AlphaMuCalibration cal = calibrate_alpha_mu(q, m, mu_grid, runs, base, config);
    write_file_atomic(out_file, dump_json(to_json(cal)));
  } catch (const std::exception& e) {
    err << "calibrate failed: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace spectral_lab
