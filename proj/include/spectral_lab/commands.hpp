#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spectral_lab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kSeedEnvVar = "SPECTRAL_LAB_SEED";

/// SPECTRAL_LAB_SEED parsed as an unsigned integer; absent when unset.
/// Throws ConfigError when set to something else.
std::optional<std::uint64_t> seed_from_env();

struct AnalyzeOptions {
  std::filesystem::path bundle;
  std::optional<std::filesystem::path> config;
  std::filesystem::path out_dir;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;  // falls back to the env var, then config.seed
  bool glorot_rescale = false;
};

/// Writes report.json, run_manifest.json, report.md (when config.markdown)
/// and histograms/<index>_<layer>_{linear,log}.csv under out_dir.
/// Returns 1 when the bundle is unreadable or any layer failed, 2 on config
/// errors.
int cmd_analyze(const AnalyzeOptions& options, std::ostream& err);

/// Writes a one-layer bundle holding generate(spec).
int cmd_generate(const std::filesystem::path& spec_path, const std::filesystem::path& out_bundle,
                 std::optional<std::uint64_t> seed, std::ostream& err);

/// Writes ensemble.json, pooled histograms and run_manifest.json under out_dir.
int cmd_ensemble(const std::filesystem::path& spec_path, std::size_t runs, const std::filesystem::path& out_dir,
                 const std::optional<std::filesystem::path>& config_path, std::optional<std::uint64_t> seed,
                 std::ostream& err);

/// Writes the alpha-mu calibration table as JSON.
int cmd_calibrate(double q, std::size_t m, const std::vector<double>& mu_grid, std::size_t runs,
                  const std::filesystem::path& out_file, const std::optional<std::filesystem::path>& config_path,
                  std::optional<std::uint64_t> seed, std::ostream& err);

}  // namespace spectral_lab
