#pragma once

// Weight bundles: a directory holding `manifest.json` plus one ESDM matrix
// file per layer.
//
// Matrix file layout (all integers little-endian):
//   0..3    magic "ESDM"
//   4       format version (1)
//   5       dtype code (0 = f32, 1 = f64)
//   6..7    reserved, zero
//   8..15   rows (u64)
//   16..23  cols (u64)
//   24..    rows*cols IEEE-754 values, row-major
//
// Files keep the orientation they were written with. Readers that feed the
// analysis call `load_layer`/`orient_tall`, which transpose wide matrices so
// that N >= M downstream.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spectral_lab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr std::uint8_t kMatrixFormatVersion = 1;
inline constexpr std::size_t kMatrixHeaderBytes = 24;
inline constexpr int kBundleVersion = 1;

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

std::string to_string(DType dtype);
DType dtype_from_string(const std::string& name);

/// Raised for malformed matrix files and manifests.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MatrixHeader {
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  DType dtype = DType::F64;
};

struct LayerRecord {
  std::string name;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  DType dtype = DType::F64;
  std::string file;  // relative to the bundle directory
  std::map<std::string, std::string> meta;
};

struct Bundle {
  int version = kBundleVersion;
  std::vector<LayerRecord> layers;
};

/// Writes `matrix` in stored orientation. f32 output rounds each value.
/// Throws std::invalid_argument on non-finite entries, std::runtime_error on
/// I/O failure. The file is written to a temporary and renamed into place.
void write_matrix(const Matrix& matrix, const std::filesystem::path& path,
                  DType dtype = DType::F64);

MatrixHeader read_matrix_header(const std::filesystem::path& path);

/// Reads a matrix in its stored orientation, promoting f32 to f64.
Matrix read_matrix(const std::filesystem::path& path);

/// Transposes wide matrices so that rows >= cols.
Matrix orient_tall(Matrix matrix);

Bundle read_bundle(const std::filesystem::path& dir);

/// Emits `manifest.json` after validating every record against its file.
void write_bundle(const Bundle& bundle, const std::filesystem::path& dir);

/// Writes the matrix file for one layer and returns its manifest record.
LayerRecord write_layer(const std::filesystem::path& dir, const std::string& name,
                        const Matrix& matrix, DType dtype = DType::F64,
                        std::map<std::string, std::string> meta = {});

/// Reads a layer's matrix, promoted to f64 and oriented tall.
Matrix load_layer(const std::filesystem::path& dir, const LayerRecord& record);

/// Write `contents` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace spectral_lab
