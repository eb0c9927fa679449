#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spectral_lab/commands.hpp"
#include "spectral_lab/report.hpp"

namespace sl = spectral_lab;

namespace {

std::optional<std::uint64_t> opt_seed(const CLI::Option* opt, std::uint64_t value) {
  if (opt->count() == 0) return std::nullopt;
  return value;
}

std::optional<std::filesystem::path> opt_path(const std::string& value) {
  if (value.empty()) return std::nullopt;
  return std::filesystem::path(value);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral analysis of weight matrices against random matrix theory"};
  app.set_version_flag("--version", std::string(sl::kToolName) + " " + sl::kToolVersion);
  app.require_subcommand(1);

  sl::AnalyzeOptions analyze;
  std::string analyze_bundle, analyze_config, analyze_out;
  std::uint64_t analyze_seed = 0;
  auto* a = app.add_subcommand("analyze", "Analyze every layer of a weight bundle");
  a->add_option("bundle", analyze_bundle, "Bundle directory")->required();
  a->add_option("--config", analyze_config, "FitConfig JSON");
  a->add_option("--out", analyze_out, "Output directory")->required();
  a->add_option("--jobs", analyze.jobs, "Layers analyzed concurrently")->check(CLI::PositiveNumber);
  auto* a_seed = a->add_option("--seed", analyze_seed, "Base seed (default: $SPECTRAL_LAB_SEED, then config seed)");
  a->add_flag("--glorot-rescale", analyze.glorot_rescale, "Rescale reported variances by (M+N)/(2N)");

  std::string gen_spec, gen_out;
  std::uint64_t gen_seed = 0;
  auto* g = app.add_subcommand("generate", "Write a synthetic matrix as a one-layer bundle");
  g->add_option("--spec", gen_spec, "GeneratorSpec JSON")->required();
  g->add_option("--out", gen_out, "Bundle directory")->required();
  auto* g_seed = g->add_option("--seed", gen_seed, "Overrides the spec seed");

  std::string ens_spec, ens_out, ens_config;
  std::size_t ens_runs = 10;
  std::uint64_t ens_seed = 0;
  auto* e = app.add_subcommand("ensemble", "Generate and analyze independent runs of one spec");
  e->add_option("--spec", ens_spec, "GeneratorSpec JSON")->required();
  e->add_option("--runs", ens_runs, "Number of runs")->required();
  e->add_option("--out", ens_out, "Output directory")->required();
  e->add_option("--config", ens_config, "FitConfig JSON");
  auto* e_seed = e->add_option("--seed", ens_seed, "Overrides the spec seed");

  double cal_q = 2.0;
  std::size_t cal_m = 1000, cal_runs = 10;
  std::vector<double> cal_mu;
  std::string cal_out, cal_config;
  std::uint64_t cal_seed = 0;
  auto* c = app.add_subcommand("calibrate", "Fit alpha against the Pareto exponent mu");
  c->add_option("--q", cal_q, "Aspect ratio N/M")->required();
  c->add_option("--m", cal_m, "Columns M")->required();
  c->add_option("--mu-grid", cal_mu, "Comma-separated mu values")->required()->delimiter(',');
  c->add_option("--runs", cal_runs, "Runs per mu")->required();
  c->add_option("--out", cal_out, "Output JSON file")->required();
  c->add_option("--config", cal_config, "FitConfig JSON");
  auto* c_seed = c->add_option("--seed", cal_seed, "Base seed (default: $SPECTRAL_LAB_SEED, then config seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForVersion& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return sl::kExitUsage;
  }

  try {
    if (*a) {
      analyze.bundle = analyze_bundle;
      analyze.config = opt_path(analyze_config);
      analyze.out_dir = analyze_out;
      analyze.seed = opt_seed(a_seed, analyze_seed);
      return sl::cmd_analyze(analyze, std::cerr);
    }
    if (*g) return sl::cmd_generate(gen_spec, gen_out, opt_seed(g_seed, gen_seed), std::cerr);
    if (*e) return sl::cmd_ensemble(ens_spec, ens_runs, ens_out, opt_path(ens_config), opt_seed(e_seed, ens_seed), std::cerr);
    if (*c)
      return sl::cmd_calibrate(cal_q, cal_m, cal_mu, cal_runs, cal_out, opt_path(cal_config), opt_seed(c_seed, cal_seed),
                               std::cerr);
  } catch (const sl::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return sl::kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return sl::kExitFailure;
  }
  return sl::kExitUsage;
}
