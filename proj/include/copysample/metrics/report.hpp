#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "copysample/core/dataset.hpp"

namespace copysample {

/// One (oracle, method, arch, N, seed) evaluation.
struct ReportRow {
  std::string oracle;
  std::string method;
  std::string arch;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double fidelity_error = 0.0;
  double balanced_error = 0.0;
  double wall_time_s = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

inline constexpr const char* report_header = "oracle,method,arch,N,seed,R_F,R_Fb,wall_time_s";

inline void write_report_row(std::ostream& os, const ReportRow& r) {
  using csv_detail::format_double;
  os << r.oracle << ',' << r.method << ',' << r.arch << ',' << r.n << ',' << r.seed << ',' << format_double(r.fidelity_error)
     << ',' << format_double(r.balanced_error) << ',' << format_double(r.wall_time_s) << '\n';
}

inline void write_reports(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << report_header << '\n';
  for (const auto& r : rows) write_report_row(os, r);
}

inline std::vector<ReportRow> read_reports(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != report_header) throw FormatError("report CSV: bad header");
  std::vector<ReportRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = csv_detail::split(line, ',');
    if (c.size() != 8) throw FormatError("report CSV line " + std::to_string(lineno) + ": expected 8 columns");
    ReportRow r;
    r.oracle = std::string(c[0]);
    r.method = std::string(c[1]);
    r.arch = std::string(c[2]);
    r.n = static_cast<std::size_t>(csv_detail::parse_double(c[3], lineno));
    r.seed = std::stoull(std::string(c[4]));
    r.fidelity_error = csv_detail::parse_double(c[5], lineno);
    r.balanced_error = csv_detail::parse_double(c[6], lineno);
    r.wall_time_s = csv_detail::parse_double(c[7], lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Linear-interpolation percentile, q in [0, 1].
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw PreconditionError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline double median(std::vector<double> values) { return percentile(std::move(values), 0.5); }

struct Percentiles {
  double p20 = 0.0;
  double p50 = 0.0;
  double p80 = 0.0;
};

inline Percentiles percentile_band(const std::vector<double>& v) { return {percentile(v, 0.2), percentile(v, 0.5), percentile(v, 0.8)}; }

/// Repetitions of one (method, arch, N) cell folded into medians and bands.
struct FidelityReport {
  std::string oracle;
  std::string method;
  std::string arch;
  std::size_t n = 0;
  std::size_t repetitions = 0;
  double fidelity_error = 0.0;  // median
  double balanced_error = 0.0;  // median
  Percentiles fidelity_band;
  Percentiles balanced_band;
  double wall_time_s = 0.0;     // median
};

using CellKey = std::tuple<std::string, std::string, std::size_t>;  // oracle, arch, N

inline std::vector<FidelityReport> summarize(const std::vector<ReportRow>& rows) {
  std::map<std::tuple<std::string, std::string, std::string, std::size_t>, std::vector<const ReportRow*>> groups;
  for (const auto& r : rows) groups[{r.oracle, r.method, r.arch, r.n}].push_back(&r);
  std::vector<FidelityReport> out;
  for (const auto& [key, members] : groups) {
    std::vector<double> rf, rfb, wt;
    for (const auto* r : members) {
      rf.push_back(r->fidelity_error);
      rfb.push_back(r->balanced_error);
      wt.push_back(r->wall_time_s);
    }
    FidelityReport f;
    std::tie(f.oracle, f.method, f.arch, f.n) = key;
    f.repetitions = members.size();
    f.fidelity_band = percentile_band(rf);
    f.balanced_band = percentile_band(rfb);
    f.fidelity_error = f.fidelity_band.p50;
    f.balanced_error = f.balanced_band.p50;
    f.wall_time_s = median(wt);
    out.push_back(std::move(f));
  }
  return out;
}

struct ComparisonEntry {
  std::string method_a;
  std::string method_b;
  std::size_t victories = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;

  friend bool operator==(const ComparisonEntry&, const ComparisonEntry&) = default;
};

/// Pairwise victory/tie/loss counts over (oracle, arch, N) cells.
///
/// Per cell, each method's median balanced error is compared; a difference
/// within `tie_margin` is a tie, otherwise the lower error wins. Every method
/// must cover exactly the same cells.
inline std::vector<ComparisonEntry> compare_methods(const std::vector<ReportRow>& rows, double tie_margin) {
  if (!(tie_margin >= 0.0)) throw PreconditionError("compare_methods: tie margin must be >= 0");
  std::map<std::string, std::map<CellKey, std::vector<double>>> by_method;
  for (const auto& r : rows) by_method[r.method][{r.oracle, r.arch, r.n}].push_back(r.balanced_error);

  std::map<std::string, std::map<CellKey, double>> medians;
  for (const auto& [method, cells] : by_method)
    for (const auto& [cell, values] : cells) medians[method][cell] = median(values);

  if (!medians.empty()) {
    const auto& first = medians.begin()->second;
    for (const auto& [method, cells] : medians) {
      if (cells.size() != first.size() ||
          !std::equal(cells.begin(), cells.end(), first.begin(), [](const auto& a, const auto& b) { return a.first == b.first; })) {
        throw ComparisonError("compare_methods: method '" + method + "' covers a different (oracle, arch, N) grid than '" +
                              medians.begin()->first + "'");
      }
    }
  }

  std::vector<ComparisonEntry> out;
  for (const auto& [a, cells_a] : medians) {
    for (const auto& [b, cells_b] : medians) {
      if (a == b) continue;
      ComparisonEntry e{a, b};
      for (const auto& [cell, ea] : cells_a) {
        const double eb = cells_b.at(cell);
        if (std::abs(ea - eb) <= tie_margin) ++e.ties;
        else if (ea < eb) ++e.victories;
        else ++e.losses;
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

inline void write_comparison(std::ostream& os, const std::vector<ComparisonEntry>& entries) {
  os << "method_a,method_b,victories,ties,losses\n";
  for (const auto& e : entries) os << e.method_a << ',' << e.method_b << ',' << e.victories << ',' << e.ties << ',' << e.losses << '\n';
}

}  // namespace copysample
