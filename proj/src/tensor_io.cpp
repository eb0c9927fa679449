#include "spectral_lab/tensor_io.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace spectral_lab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<char, 4> kMagic = {'E', 'S', 'D', 'M'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::size_t element_size(DType dtype) { return dtype == DType::F32 ? 4 : 8; }

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MatrixHeader parse_header(const std::string& bytes, const fs::path& path) {
  if (bytes.size() < kMatrixHeaderBytes)
    throw FormatError(path.string() + ": truncated header");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    throw FormatError(path.string() + ": bad magic, not an ESDM matrix file");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (p[4] != kMatrixFormatVersion)
    throw FormatError(path.string() + ": unsupported format version " + std::to_string(p[4]));
  if (p[5] > 1) throw FormatError(path.string() + ": unknown dtype code " + std::to_string(p[5]));
  if (p[6] != 0 || p[7] != 0) throw FormatError(path.string() + ": reserved bytes not zero");
  MatrixHeader h;
  h.dtype = static_cast<DType>(p[5]);
  h.rows = get_u64(p + 8);
  h.cols = get_u64(p + 16);
  if (h.rows == 0 || h.cols == 0) throw FormatError(path.string() + ": empty shape");
  return h;
}

json record_to_json(const LayerRecord& r) {
  json meta = json::object();
  for (const auto& [k, v] : r.meta) meta[k] = v;
  return json{{"name", r.name}, {"rows", r.rows},  {"cols", r.cols},
              {"dtype", to_string(r.dtype)}, {"file", r.file}, {"meta", meta}};
}

LayerRecord record_from_json(const json& j) {
  LayerRecord r;
  try {
    r.name = j.at("name").get<std::string>();
    r.rows = j.at("rows").get<std::uint64_t>();
    r.cols = j.at("cols").get<std::uint64_t>();
    r.dtype = dtype_from_string(j.at("dtype").get<std::string>());
    r.file = j.at("file").get<std::string>();
    if (j.contains("meta")) {
      for (const auto& [k, v] : j.at("meta").items())
        r.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed layer record: ") + e.what());
  }
  return r;
}

void validate_records(const Bundle& bundle, const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& r : bundle.layers) {
    if (!names.insert(r.name).second) throw FormatError("duplicate layer name: " + r.name);
    if (r.rows == 0 || r.cols == 0) throw FormatError(r.name + ": rows and cols must be positive");
    if (fs::path(r.file).is_absolute()) throw FormatError(r.name + ": file path must be relative");
    const fs::path file = dir / r.file;
    if (!fs::exists(file)) throw FormatError(r.name + ": missing matrix file " + file.string());
    const MatrixHeader h = read_matrix_header(file);
    if (h.rows != r.rows || h.cols != r.cols || h.dtype != r.dtype) {
      throw FormatError(r.name + ": manifest says " + std::to_string(r.rows) + "x" +
                        std::to_string(r.cols) + " " + to_string(r.dtype) + " but file holds " +
                        std::to_string(h.rows) + "x" + std::to_string(h.cols) + " " +
                        to_string(h.dtype));
    }
  }
}

}  // namespace

std::string to_string(DType dtype) { return dtype == DType::F32 ? "f32" : "f64"; }

DType dtype_from_string(const std::string& name) {
  if (name == "f32") return DType::F32;
  if (name == "f64") return DType::F64;
  throw FormatError("unknown dtype '" + name + "'");
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_matrix(const Matrix& matrix, const fs::path& path, DType dtype) {
  if (matrix.rows() == 0 || matrix.cols() == 0)
    throw std::invalid_argument("cannot write an empty matrix");
  if (!matrix.allFinite()) throw std::invalid_argument("matrix contains non-finite values");

  const auto rows = static_cast<std::uint64_t>(matrix.rows());
  const auto cols = static_cast<std::uint64_t>(matrix.cols());
  std::string out;
  out.reserve(kMatrixHeaderBytes + rows * cols * element_size(dtype));
  out.append(kMagic.data(), kMagic.size());
  out.push_back(static_cast<char>(kMatrixFormatVersion));
  out.push_back(static_cast<char>(dtype));
  out.push_back('\0');
  out.push_back('\0');
  put_u64(out, rows);
  put_u64(out, cols);
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (dtype == DType::F64) {
        put_u64(out, std::bit_cast<std::uint64_t>(matrix(i, j)));
      } else {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(matrix(i, j))));
      }
    }
  }
  write_file_atomic(path, out);
}

MatrixHeader read_matrix_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string bytes(kMatrixHeaderBytes, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  bytes.resize(static_cast<std::size_t>(in.gcount()));
  return parse_header(bytes, path);
}

Matrix read_matrix(const fs::path& path) {
  const std::string bytes = read_all(path);
  const MatrixHeader h = parse_header(bytes, path);
  const std::size_t width = element_size(h.dtype);
  const std::uint64_t count = h.rows * h.cols;
  if (count / h.cols != h.rows) throw FormatError(path.string() + ": shape overflows");
  const std::uint64_t payload = bytes.size() - kMatrixHeaderBytes;
  if (payload != count * width) {
    throw FormatError(path.string() + ": payload holds " + std::to_string(payload / width) +
                      " values, header declares " + std::to_string(count) +
                      (payload < count * width ? " (truncated)" : " (trailing bytes)"));
  }
  Matrix m(static_cast<Eigen::Index>(h.rows), static_cast<Eigen::Index>(h.cols));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + kMatrixHeaderBytes;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j, p += width) {
      const double v = h.dtype == DType::F64 ? std::bit_cast<double>(get_u64(p))
                                             : static_cast<double>(std::bit_cast<float>(get_u32(p)));
      if (!std::isfinite(v)) throw FormatError(path.string() + ": non-finite value in payload");
      m(i, j) = v;
    }
  }
  return m;
}

Matrix orient_tall(Matrix matrix) {
  if (matrix.rows() < matrix.cols()) return matrix.transpose();
  return matrix;
}

Bundle read_bundle(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest)) throw FormatError("missing manifest: " + manifest.string());
  json j;
  try {
    j = json::parse(read_all(manifest));
  } catch (const json::parse_error& e) {
    throw FormatError("manifest is not valid JSON: " + std::string(e.what()));
  }
  Bundle bundle;
  try {
    bundle.version = j.at("version").get<int>();
    for (const auto& layer : j.at("layers")) bundle.layers.push_back(record_from_json(layer));
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest: " + std::string(e.what()));
  }
  if (bundle.version != kBundleVersion)
    throw FormatError("unsupported bundle version " + std::to_string(bundle.version));
  validate_records(bundle, dir);
  return bundle;
}

void write_bundle(const Bundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  validate_records(bundle, dir);
  json layers = json::array();
  for (const auto& r : bundle.layers) layers.push_back(record_to_json(r));
  const json j{{"version", bundle.version}, {"layers", layers}};
  write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

LayerRecord write_layer(const fs::path& dir, const std::string& name, const Matrix& matrix,
                        DType dtype, std::map<std::string, std::string> meta) {
  LayerRecord r;
  r.name = name;
  r.rows = static_cast<std::uint64_t>(matrix.rows());
  r.cols = static_cast<std::uint64_t>(matrix.cols());
  r.dtype = dtype;
  std::string stem;
  for (char c : name) stem.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  r.file = stem + ".esdm";
  r.meta = std::move(meta);
  write_matrix(matrix, dir / r.file, dtype);
  return r;
}

Matrix load_layer(const fs::path& dir, const LayerRecord& record) {
  Matrix m = read_matrix(dir / record.file);
  if (static_cast<std::uint64_t>(m.rows()) != record.rows ||
      static_cast<std::uint64_t>(m.cols()) != record.cols) {
    throw FormatError(record.name + ": shape mismatch between manifest and file");
  }
  return orient_tall(std::move(m));
}

}  // namespace spectral_lab
