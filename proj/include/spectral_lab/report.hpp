#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectral_lab/config.hpp"
#include "spectral_lab/heavy_tail.hpp"
#include "spectral_lab/metrics.hpp"
#include "spectral_lab/phase_classifier.hpp"
#include "spectral_lab/tensor_io.hpp"

namespace spectral_lab {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kToolName = "spectral-lab";
inline constexpr const char* kToolVersion = "0.1.0";

enum class LayerStatus { OK, SKIPPED, ERROR };

std::string to_string(LayerStatus status);

struct VectorLocalization {
  std::string role;    // "top" or "bulk"
  std::size_t rank = 0;  // position in descending eigenvalue order
  double eigenvalue = 0.0;
  LocalizationMetrics metrics;
};

struct LayerTimings {
  double svd_seconds = 0.0;
  double shuffle_seconds = 0.0;
  double fit_seconds = 0.0;
  double vectors_seconds = 0.0;
  double total_seconds = 0.0;
};

/// Everything computed for one layer. Optional sections are null in JSON;
/// `reason` says why for skipped and failed layers.
struct LayerReport {
  std::string name;
  LayerStatus status = LayerStatus::OK;
  std::optional<std::string> reason;
  std::size_t stored_rows = 0;
  std::size_t stored_cols = 0;
  std::size_t n = 0;  // after orienting tall
  std::size_t m = 0;
  double q = 0.0;
  bool normalized_by_n = true;

  std::optional<CapacityMetrics> capacity;
  std::optional<EsdAnalysis> analysis;
  std::optional<double> sigma_sq_shuf;
  std::optional<std::string> shuffle_error;
  std::optional<double> sigma_sq_rule_of_thumb;
  std::optional<MuEstimate> heavy_tail;
  std::vector<VectorLocalization> localization;
  std::optional<double> glorot_factor;  // set when the rescale was applied

  // Plot data, written next to the report rather than inside it.
  std::string histogram_linear_csv;
  std::string histogram_log_csv;
  std::string histogram_linear_file;
  std::string histogram_log_file;

  LayerTimings timings;  // kept out of the report JSON
};

/// Full per-layer pipeline: ESD, capacity metrics, optional shuffle baseline
/// (config.shuffle_reps > 0, seeded by `seed`), MP and power-law fits, phase,
/// eigenvector localization and histograms. `w` may have any orientation.
LayerReport analyze_layer(const std::string& name, const Matrix& w, const FitConfig& config,
                          std::uint64_t seed);

LayerReport skipped_layer(const LayerRecord& record, const std::string& reason);
LayerReport failed_layer(const LayerRecord& record, const std::string& error);

nlohmann::json to_json(const MpFit& fit);
nlohmann::json to_json(const PlFit& fit);
nlohmann::json to_json(const PhaseEvidence& evidence);
nlohmann::json to_json(const LayerReport& layer);

/// Deterministic report document: no timestamps, timings or absolute paths.
nlohmann::json build_report(const std::vector<LayerReport>& layers, const FitConfig& config,
                            std::uint64_t seed, const std::vector<std::string>& warnings);

/// One row per analyzed layer: Layer | Q | (M x N) | alpha | D | Best Fit | ...
std::string markdown_table(const std::vector<LayerReport>& layers);

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string command;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string input_hash;
  std::string started_at;  // UTC, ISO 8601
  std::string finished_at;
  std::vector<std::pair<std::string, LayerTimings>> timings;
};

nlohmann::json to_json(const RunManifest& manifest);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Serialized form used for hashing and writing: two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace spectral_lab
