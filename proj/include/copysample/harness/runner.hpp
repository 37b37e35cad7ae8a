#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "copysample/harness/experiment.hpp"
#include "copysample/harness/svg.hpp"
#include "copysample/harness/timing.hpp"
#include "copysample/metrics/fidelity.hpp"
#include "copysample/metrics/report.hpp"

namespace copysample {

struct CellFailure {
  std::string method;
  std::size_t repetition = 0;
  std::string arch;  // empty when dataset generation itself failed
  std::size_t n = 0;
  std::string message;
};

struct RunSummary {
  std::size_t cells_total = 0;
  std::size_t cells_computed = 0;
  std::size_t cells_skipped = 0;
  std::size_t cells_failed = 0;
  std::size_t datasets_generated = 0;
  std::size_t timing_profiles_run = 0;
  std::size_t plots_written = 0;
  bool reference_built = false;
  bool reference_quota_warning = false;
  bool comparison_written = false;
  std::size_t report_rows = 0;
  std::vector<CellFailure> failures;

  bool ok() const { return failures.empty(); }
  /// True when the run did no sampling, training or profiling.
  bool nothing_recomputed() const {
    return cells_computed == 0 && datasets_generated == 0 && timing_profiles_run == 0 && !reference_built && plots_written == 0;
  }
};

namespace runner_detail {

namespace fs = std::filesystem;

/// Writes to a sibling temp file and renames, so an interrupted run never
/// leaves a truncated file that a resume would mistake for a finished one.
inline void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw FormatError("cannot write " + tmp.string());
    os << text;
    if (!os) throw FormatError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Runs jobs 0..count-1 on up to `workers` threads.
inline void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& job) {
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline std::string dataset_stem(Method m, std::size_t rep) { return std::string(to_string(m)) + "_rep" + std::to_string(rep); }

}  // namespace runner_detail

struct RunOptions {
  std::ostream* log = nullptr;
};

/// Seed of repetition `rep` of `method`; recorded in report rows.
inline std::uint64_t repetition_seed(std::uint64_t base, Method method, std::size_t rep) {
  return derive_seed(base, std::string(to_string(method)) + "/rep" + std::to_string(rep));
}

/// Full sweep into `out`.
///
/// Layout:
///   config.resolved.ini             every setting used
///   reference.csv                   oracle-labelled evaluation set
///   datasets/<method>_rep<r>.csv    max-N synthetic set per repetition (+ .meta.json)
///   cells/<method>_rep<r>_<arch>_N<n>.csv   one report row per finished cell
///   reports.csv                     all cell rows, sorted
///   comparison.csv                  pairwise victory/tie/loss (+ .meta.json)
///   timing/<method>.csv, timing.csv method,sample_count,elapsed_s
///   plots/<method>_N<n>.svg         2-D only
///   failures.csv                    cells that threw, with the message
///
/// Existing dataset, cell, timing and plot files are reused as-is, so a rerun
/// over a finished directory computes nothing and rewrites identical
/// aggregate files.
inline RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out, const RunOptions& opts = {}) {
  namespace fs = std::filesystem;
  using namespace runner_detail;
  cfg.validate();
  std::mutex log_mu;
  auto log = [&](const std::string& msg) {
    if (!opts.log) return;
    std::lock_guard lk(log_mu);
    *opts.log << msg << '\n';
  };

  fs::create_directories(out / "datasets");
  fs::create_directories(out / "cells");
  fs::create_directories(out / "timing");

  const std::string resolved = cfg.resolved().dump();
  if (!fs::exists(out / "config.resolved.ini") || read_text(out / "config.resolved.ini") != resolved)
    write_atomic(out / "config.resolved.ini", resolved);

  const OracleFactory make_oracle = cfg.oracle.factory();
  const int workers = cfg.oracle.serial_only() ? 1 : cfg.workers;
  const std::string oracle_name = cfg.oracle.name();
  RunSummary summary;

  // Reference set.
  std::vector<LabeledSample> reference;
  int num_classes = 0;
  {
    auto oracle = make_oracle();
    num_classes = oracle->num_classes();
    const fs::path ref_path = out / "reference.csv";
    if (fs::exists(ref_path)) {
      std::ifstream is(ref_path);
      const LabelledMatrix m = read_csv(is);
      for (std::size_t i = 0; i < m.rows(); ++i)
        reference.push_back({m.x.row(static_cast<Eigen::Index>(i)).transpose(), ClassLabel(m.y[i])});
    } else {
      RandomSource rng(derive_seed(cfg.seed, "reference"));
      ReferenceSet ref = build_reference_set(*oracle, cfg.reference_size, cfg.reference_balanced, rng, cfg.max_attempts());
      summary.reference_built = true;
      summary.reference_quota_warning = ref.quota_warning;
      if (ref.quota_warning) log("warning: reference set quota not met after " + std::to_string(ref.attempts) + " draws");
      SyntheticDataset tmp;
      tmp.dim = oracle->dim();
      tmp.num_classes = num_classes;
      tmp.samples = ref.samples;
      std::ostringstream os;
      write_csv(os, to_matrix(tmp));
      write_atomic(ref_path, os.str());
      reference = std::move(ref.samples);
    }
    log("reference set: " + std::to_string(reference.size()) + " points");
  }

  // Datasets.
  struct DatasetJob {
    Method method;
    std::size_t rep;
    std::optional<SyntheticDataset> data;
    std::string error;
  };
  std::vector<DatasetJob> datasets;
  for (Method m : cfg.methods)
    for (std::size_t r = 0; r < cfg.repetitions_for(m); ++r) datasets.push_back({m, r, std::nullopt, {}});

  std::atomic<std::size_t> generated{0};
  parallel_for(datasets.size(), workers, [&](std::size_t i) {
    auto& job = datasets[i];
    const fs::path path = out / "datasets" / (dataset_stem(job.method, job.rep) + ".csv");
    try {
      if (fs::exists(path)) {
        job.data = load_dataset(path);
        if (job.data->size() < cfg.max_n()) throw FormatError("stored dataset " + path.string() + " is shorter than the largest N");
        return;
      }
      auto oracle = make_oracle();
      RandomSource rng(repetition_seed(cfg.seed, job.method, job.rep));
      SyntheticDataset ds = generate(job.method, cfg.max_n(), *oracle, cfg.sampler_settings, rng);
      std::ostringstream csv;
      write_csv(csv, ds);
      write_atomic(sidecar_path(path), sidecar_json(ds).dump(2) + "\n");
      write_atomic(path, csv.str());
      job.data = std::move(ds);
      ++generated;
      log("generated " + path.filename().string());
    } catch (const std::exception& e) {
      job.error = e.what();
      log("dataset " + dataset_stem(job.method, job.rep) + " failed: " + job.error);
    }
  });
  summary.datasets_generated = generated;

  // Cells.
  struct CellJob {
    const DatasetJob* dataset;
    Architecture arch;
    std::size_t n;
    std::optional<ReportRow> row;
    std::string error;
    bool computed = false;
  };
  std::vector<CellJob> cells;
  for (const auto& d : datasets)
    for (Architecture a : cfg.archs)
      for (std::size_t n : cfg.n_grid) cells.push_back({&d, a, n, std::nullopt, {}, false});
  summary.cells_total = cells.size();

  parallel_for(cells.size(), workers, [&](std::size_t i) {
    auto& cell = cells[i];
    const DatasetJob& d = *cell.dataset;
    const std::string stem =
        dataset_stem(d.method, d.rep) + "_" + std::string(to_string(cell.arch)) + "_N" + std::to_string(cell.n);
    const fs::path path = out / "cells" / (stem + ".csv");
    try {
      if (fs::exists(path)) {
        std::ifstream is(path);
        const auto rows = read_reports(is);
        if (rows.size() != 1) throw FormatError("cell file " + path.string() + " must hold one row");
        cell.row = rows.front();
        return;
      }
      if (!d.data) throw Error("dataset unavailable: " + d.error);
      const auto start = std::chrono::steady_clock::now();
      const std::uint64_t rep_seed = repetition_seed(cfg.seed, d.method, d.rep);
      TrainConfig tc = cfg.train;
      tc.seed = derive_seed(rep_seed, std::string(to_string(cell.arch)) + "/N" + std::to_string(cell.n));
      const CopyModel copy = train(cell.arch, prefix(*d.data, cell.n), tc);
      ReportRow row;
      row.oracle = oracle_name;
      row.method = std::string(to_string(d.method));
      row.arch = std::string(to_string(cell.arch));
      row.n = cell.n;
      row.seed = rep_seed;
      row.fidelity_error = empirical_fidelity_error(copy, reference);
      row.balanced_error = balanced_empirical_fidelity_error(copy, reference, num_classes);
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      row.wall_time_s = cfg.record_wall_time ? elapsed : 0.0;
      std::ostringstream os;
      write_reports(os, {row});
      write_atomic(path, os.str());
      cell.row = row;
      cell.computed = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
      log("cell " + stem + " failed: " + cell.error);
    }
  });

  std::vector<ReportRow> rows;
  for (const auto& c : cells) {
    if (c.row) {
      rows.push_back(*c.row);
      (c.computed ? summary.cells_computed : summary.cells_skipped)++;
    } else {
      ++summary.cells_failed;
      summary.failures.push_back(
          {std::string(to_string(c.dataset->method)), c.dataset->rep, std::string(to_string(c.arch)), c.n, c.error});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.oracle, a.method, a.arch, a.n, a.seed) < std::tie(b.oracle, b.method, b.arch, b.n, b.seed);
  });
  summary.report_rows = rows.size();
  {
    std::ostringstream os;
    write_reports(os, rows);
    write_atomic(out / "reports.csv", os.str());
  }

  // Comparison over per-cell medians; needs every method on the same grid.
  try {
    const auto entries = compare_methods(rows, cfg.tie_margin);
    std::ostringstream os;
    write_comparison(os, entries);
    write_atomic(out / "comparison.csv", os.str());
    nlohmann::json meta;
    meta["metric"] = "median R_Fb per (oracle, arch, N)";
    meta["tie_margin"] = cfg.tie_margin;
    write_atomic(out / "comparison.csv.meta.json", meta.dump(2) + "\n");
    summary.comparison_written = true;
  } catch (const ComparisonError& e) {
    log(std::string("comparison skipped: ") + e.what());
    std::error_code ec;
    fs::remove(out / "comparison.csv", ec);
    fs::remove(out / "comparison.csv.meta.json", ec);
  }

  // Timing profiles, one generation run per method with the N grid as checkpoints.
  std::vector<TimingProfile> profiles;
  for (Method m : cfg.methods) {
    const fs::path path = out / "timing" / (std::string(to_string(m)) + ".csv");
    TimingProfile p{std::string(to_string(m)), {}};
    try {
      if (fs::exists(path)) {
        std::ifstream is(path);
        std::string line;
        std::getline(is, line);
        std::size_t lineno = 1;
        while (std::getline(is, line)) {
          ++lineno;
          const auto c = csv_detail::split(line, ',');
          if (c.size() != 3) throw FormatError("timing file " + path.string() + ": expected 3 columns");
          p.checkpoints.emplace_back(static_cast<std::size_t>(csv_detail::parse_int(c[1], lineno)),
                                     csv_detail::parse_double(c[2], lineno));
        }
      } else {
        auto oracle = make_oracle();
        RandomSource rng(derive_seed(cfg.seed, std::string(to_string(m)) + "/timing"));
        p = timing_profile(m, cfg.n_grid, *oracle, cfg.sampler_settings, rng);
        std::ostringstream os;
        write_timing(os, {p});
        write_atomic(path, os.str());
        ++summary.timing_profiles_run;
      }
      profiles.push_back(std::move(p));
    } catch (const std::exception& e) {
      log("timing for " + std::string(to_string(m)) + " failed: " + e.what());
    }
  }
  {
    std::ostringstream os;
    write_timing(os, profiles);
    write_atomic(out / "timing.csv", os.str());
  }

  // Plots of the first repetition at each N.
  if (cfg.plots) {
    auto oracle = make_oracle();
    const auto* analytic = dynamic_cast<const AnalyticOracle*>(oracle.get());
    if (oracle->dim() == 2) {
      fs::create_directories(out / "plots");
      for (const auto& d : datasets) {
        if (d.rep != 0 || !d.data) continue;
        for (std::size_t n : cfg.n_grid) {
          const fs::path path = out / "plots" / (std::string(to_string(d.method)) + "_N" + std::to_string(n) + ".svg");
          if (fs::exists(path)) continue;
          write_atomic(path, render_svg(prefix(*d.data, n), analytic));
          ++summary.plots_written;
        }
      }
    }
  }

  {
    std::ostringstream os;
    os << "method,repetition,arch,N,error\n";
    for (const auto& f : summary.failures) {
      std::string msg = f.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      os << f.method << ',' << f.repetition << ',' << f.arch << ',' << f.n << ',' << msg << '\n';
    }
    write_atomic(out / "failures.csv", os.str());
  }
  return summary;
}

}  // namespace copysample
