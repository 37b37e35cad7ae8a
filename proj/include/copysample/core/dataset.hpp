#pragma once

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "copysample/core/error.hpp"
#include "copysample/core/types.hpp"

namespace copysample {

/// Oracle-labelled synthetic samples in generation order.
///
/// Samplers append; everything downstream treats the dataset as immutable.
/// `query_count` meters oracle calls and may exceed `size()` because some
/// samplers query probes they do not keep.
struct SyntheticDataset {
  int dim = 0;
  int num_classes = 0;
  std::string generator_id;
  std::uint64_t seed = 0;
  std::uint64_t query_count = 0;
  std::vector<LabeledSample> samples;
  /// Free-form sampler annotations (parameters, fallback flags).
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  const LabeledSample& operator[](std::size_t i) const { return samples[i]; }

  void append(Point z, ClassLabel y) { samples.push_back({std::move(z), y}); }
};

/// The first j samples with unchanged metadata.
inline SyntheticDataset prefix(const SyntheticDataset& ds, std::size_t j) {
  if (j > ds.size()) {
    throw RangeError("prefix: j=" + std::to_string(j) + " exceeds dataset size " + std::to_string(ds.size()));
  }
  SyntheticDataset out;
  out.dim = ds.dim;
  out.num_classes = ds.num_classes;
  out.generator_id = ds.generator_id;
  out.seed = ds.seed;
  out.query_count = ds.query_count;
  out.metadata = ds.metadata;
  out.samples.assign(ds.samples.begin(), ds.samples.begin() + static_cast<std::ptrdiff_t>(j));
  return out;
}

/// Real-valued rows with integer labels; the raw-data counterpart of SyntheticDataset.
struct LabelledMatrix {
  Eigen::MatrixXd x;  // rows are observations
  std::vector<int> y;

  std::size_t rows() const { return y.size(); }
  int cols() const { return static_cast<int>(x.cols()); }
};

inline LabelledMatrix to_matrix(const SyntheticDataset& ds) {
  LabelledMatrix m;
  m.x.resize(static_cast<Eigen::Index>(ds.size()), ds.dim);
  m.y.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    m.x.row(static_cast<Eigen::Index>(i)) = ds.samples[i].point.transpose();
    m.y[i] = ds.samples[i].label.value;
  }
  return m;
}

namespace csv_detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

inline int parse_int(std::string_view s, std::size_t line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string header(int dim) {
  std::string h;
  for (int i = 0; i < dim; ++i) h += "x" + std::to_string(i) + ",";
  return h + "label";
}

}  // namespace csv_detail

/// Writes `x0,...,x{d-1},label` rows with 17 significant digits.
inline void write_csv(std::ostream& os, const LabelledMatrix& m) {
  os << csv_detail::header(m.cols()) << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) os << csv_detail::format_double(m.x(static_cast<Eigen::Index>(i), j)) << ',';
    os << m.y[i] << '\n';
  }
}

inline LabelledMatrix read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto head = csv_detail::split(line, ',');
  if (head.size() < 2 || head.back() != "label") throw FormatError("CSV header must be x0,...,label");
  const int dim = static_cast<int>(head.size()) - 1;
  for (int i = 0; i < dim; ++i) {
    if (head[static_cast<std::size_t>(i)] != "x" + std::to_string(i)) throw FormatError("unexpected header column " + std::string(head[static_cast<std::size_t>(i)]));
  }
  std::vector<double> values;
  LabelledMatrix m;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = csv_detail::split(line, ',');
    if (cells.size() != head.size()) throw FormatError("line " + std::to_string(lineno) + ": wrong column count");
    for (int i = 0; i < dim; ++i) values.push_back(csv_detail::parse_double(cells[static_cast<std::size_t>(i)], lineno));
    m.y.push_back(csv_detail::parse_int(cells.back(), lineno));
  }
  m.x.resize(static_cast<Eigen::Index>(m.y.size()), dim);
  for (std::size_t r = 0; r < m.y.size(); ++r)
    for (int c = 0; c < dim; ++c) m.x(static_cast<Eigen::Index>(r), c) = values[r * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];
  return m;
}

inline void write_csv(std::ostream& os, const SyntheticDataset& ds) {
  os << csv_detail::header(ds.dim) << '\n';
  for (const auto& s : ds.samples) {
    for (int j = 0; j < ds.dim; ++j) os << csv_detail::format_double(s.point[j]) << ',';
    os << s.label.value << '\n';
  }
}

inline nlohmann::json sidecar_json(const SyntheticDataset& ds) {
  nlohmann::json j;
  j["generator_id"] = ds.generator_id;
  j["seed"] = ds.seed;
  j["query_count"] = ds.query_count;
  j["d"] = ds.dim;
  j["k"] = ds.num_classes;
  j["n"] = ds.size();
  j["metadata"] = ds.metadata;
  return j;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p += ".meta.json";
  return p;
}

/// Writes the CSV plus a `<path>.meta.json` sidecar.
inline void save_dataset(const std::filesystem::path& path, const SyntheticDataset& ds) {
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    write_csv(os, ds);
  }
  std::ofstream meta(sidecar_path(path), std::ios::binary);
  if (!meta) throw FormatError("cannot open sidecar for " + path.string());
  meta << sidecar_json(ds).dump(2) << '\n';
}

/// Loads a dataset CSV. The sidecar is optional; without it only d and the samples are known.
inline SyntheticDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  const auto m = read_csv(is);
  SyntheticDataset ds;
  ds.dim = m.cols();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    ds.append(m.x.row(static_cast<Eigen::Index>(i)).transpose(), ClassLabel(m.y[i]));
    ds.num_classes = std::max(ds.num_classes, m.y[i] + 1);
  }
  ds.query_count = ds.size();
  std::ifstream meta(sidecar_path(path));
  if (meta) {
    nlohmann::json j;
    try {
      meta >> j;
      ds.generator_id = j.at("generator_id").get<std::string>();
      ds.seed = j.at("seed").get<std::uint64_t>();
      ds.query_count = j.at("query_count").get<std::uint64_t>();
      ds.num_classes = j.at("k").get<int>();
      if (j.at("d").get<int>() != ds.dim) throw FormatError("sidecar dimension mismatch for " + path.string());
      ds.metadata = j.value("metadata", std::map<std::string, std::string>{});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bad sidecar for " + path.string() + ": " + e.what());
    }
  }
  return ds;
}

}  // namespace copysample
