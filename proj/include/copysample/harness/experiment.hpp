#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "copysample/copies/copy_model.hpp"
#include "copysample/gp/bayesian_sampler.hpp"
#include "copysample/harness/config.hpp"
#include "copysample/oracles/analytic.hpp"
#include "copysample/oracles/external.hpp"
#include "copysample/oracles/table.hpp"
#include "copysample/samplers/boundary.hpp"
#include "copysample/samplers/jacobian.hpp"
#include "copysample/samplers/random_sampler.hpp"

namespace copysample {

using OracleFactory = std::function<std::unique_ptr<Oracle>()>;

/// Builds oracles from an [oracle] section.
///
///   type = halfspace      normal = <w...>   offset = <c>
///   type = circles        center = <x...>   radii = <r...>
///   type = checkerboard   dim = <d>         cells = <m>
///   type = spiral         turns = <t>
///   type = table          path = <csv>      [classes = <k>]
///   type = external       command = <shell command speaking the line protocol>
///
/// Without an [oracle] section the circle of radius 0.25 centred in the
/// square is used.
struct OracleSpec {
  KeyValueConfig::Section settings{{"type", "circles"}};

  std::string type() const { return value("type", ""); }

  std::string value(const std::string& key, const std::string& fallback) const {
    auto it = settings.find(key);
    return it == settings.end() ? fallback : it->second;
  }

  /// Short name used in report rows.
  std::string name() const { return value("name", type()); }

  bool serial_only() const { return type() == "external"; }

  void validate() const {
    const std::string t = type();
    if (t.empty()) throw ConfigError("[oracle] type is required");
    if (t == "table") {
      const std::filesystem::path p = value("path", "");
      if (p.empty() || !std::filesystem::exists(p)) throw ConfigError("[oracle] table path does not exist: '" + p.string() + "'");
    } else if (t == "external") {
      if (value("command", "").empty()) throw ConfigError("[oracle] external oracle needs a command");
    } else if (t != "halfspace" && t != "circles" && t != "checkerboard" && t != "spiral") {
      throw ConfigError("[oracle] unknown type '" + t + "'");
    }
  }

  OracleFactory factory() const {
    validate();
    KeyValueConfig cfg;
    for (const auto& [k, v] : settings) cfg.set("oracle", k, v);
    const std::string t = type();
    if (t == "halfspace") {
      const auto w = cfg.get_doubles("oracle", "normal");
      if (w.empty()) throw ConfigError("[oracle] halfspace needs normal");
      Halfspace h{Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
                  cfg.get_double("oracle", "offset", 0.5)};
      return [h] { return std::make_unique<AnalyticOracle>(h); };
    }
    if (t == "circles") {
      auto c = cfg.get_doubles("oracle", "center");
      if (c.empty()) c = {0.5, 0.5};
      ConcentricCircles circ{Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())),
                             cfg.get_doubles("oracle", "radii")};
      if (!cfg.has("oracle", "radii")) circ.radii = {0.25};
      return [circ] { return std::make_unique<AnalyticOracle>(circ); };
    }
    if (t == "checkerboard") {
      Checkerboard b{static_cast<int>(cfg.get_int("oracle", "dim", 2)), static_cast<int>(cfg.get_int("oracle", "cells", 2))};
      return [b] { return std::make_unique<AnalyticOracle>(b); };
    }
    if (t == "spiral") {
      Spiral2d s{cfg.get_double("oracle", "turns", 1.0)};
      return [s] { return std::make_unique<AnalyticOracle>(s); };
    }
    if (t == "table") {
      auto table = std::make_shared<LabelledMatrix>();
      std::ifstream is(value("path", ""));
      *table = read_csv(is);
      const int k = static_cast<int>(cfg.get_int("oracle", "classes", 0));
      return [table, k] { return std::make_unique<TableOracle>(*table, k); };
    }
    const std::string command = value("command", "");
    return [command]() -> std::unique_ptr<Oracle> { return ExternalOracle::spawn(command); };
  }
};

enum class Method { Random, Boundary, Bayesian, Jacobian };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Random: return "random";
    case Method::Boundary: return "boundary";
    case Method::Bayesian: return "bayesian";
    case Method::Jacobian: return "jacobian";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "random") return Method::Random;
  if (s == "boundary") return Method::Boundary;
  if (s == "bayesian") return Method::Bayesian;
  if (s == "jacobian") return Method::Jacobian;
  throw ConfigError("unknown sampling method '" + std::string(s) + "' (expected random, boundary, bayesian or jacobian)");
}

/// Per-method parameter overrides; anything unset takes the budget-dependent default.
struct SamplerSettings {
  KeyValueConfig overrides;

  BoundaryParams boundary(std::size_t n) const {
    BoundaryParams p = BoundaryParams::for_budget(n);
    p.epsilon = overrides.get_double("boundary", "epsilon", p.epsilon);
    p.step = overrides.get_double("boundary", "step", p.step);
    p.spawn_rate = overrides.get_double("boundary", "spawn_rate", p.spawn_rate);
    p.runs = static_cast<int>(overrides.get_int("boundary", "runs", p.runs));
    p.max_threads = static_cast<int>(overrides.get_int("boundary", "max_threads", p.max_threads));
    p.max_steps = static_cast<int>(overrides.get_int("boundary", "max_steps", p.max_steps));
    return p;
  }

  FastBayesParams bayes() const {
    FastBayesParams p;
    p.cap = static_cast<std::size_t>(overrides.get_int("bayesian", "cap", static_cast<long long>(p.cap)));
    p.slowness = overrides.get_double("bayesian", "slowness", p.slowness);
    p.init_count = static_cast<std::size_t>(overrides.get_int("bayesian", "init_count", static_cast<long long>(p.init_count)));
    p.local_iters = static_cast<int>(overrides.get_int("bayesian", "local_iters", p.local_iters));
    return p;
  }

  SEKernel kernel(int dim, int k) const {
    SEKernel kern = SEKernel::defaults(dim, k);
    kern.length_scale = overrides.get_double("bayesian", "length_scale", kern.length_scale);
    kern.variance = overrides.get_double("bayesian", "variance", kern.variance);
    return kern;
  }

  AcquisitionParams acquisition() const { return {overrides.get_double("bayesian", "tau", 10.0)}; }

  JacobianParams jacobian(std::size_t n) const {
    JacobianParams p = JacobianParams::for_budget(n);
    p.refits = static_cast<int>(overrides.get_int("jacobian", "refits", p.refits));
    p.seeds_per_refit = static_cast<int>(overrides.get_int("jacobian", "seeds_per_refit", p.seeds_per_refit));
    p.step = overrides.get_double("jacobian", "step", p.step);
    p.rounds = static_cast<int>(overrides.get_int("jacobian", "rounds", p.rounds));
    const long long cap = overrides.get_int("jacobian", "fit_cap", static_cast<long long>(p.fit_cap));
    if (cap < 1) throw ConfigError("[jacobian] fit_cap must be >= 1");
    p.fit_cap = static_cast<std::size_t>(cap);
    return p;
  }
};

/// Runs one sampler for a budget of n samples.
inline SyntheticDataset generate(Method method, std::size_t n, Oracle& oracle, const SamplerSettings& settings,
                                 RandomSource& rng, ProgressFn progress = {}) {
  switch (method) {
    case Method::Random: return random_sampler(n, oracle, rng, std::move(progress));
    case Method::Boundary: return boundary_sampler(n, oracle, settings.boundary(n), rng, std::move(progress));
    case Method::Bayesian:
      return fast_bayesian_sampler(n, oracle, settings.bayes(), settings.kernel(oracle.dim(), oracle.num_classes()),
                                   settings.acquisition(), rng, std::move(progress));
    case Method::Jacobian: return jacobian_sampler(n, oracle, settings.jacobian(n), rng, std::move(progress));
  }
  throw ConfigError("unknown method");
}

/// Fully resolved sweep description.
struct ExperimentConfig {
  OracleSpec oracle;
  std::vector<Method> methods{Method::Random, Method::Boundary, Method::Bayesian, Method::Jacobian};
  SamplerSettings sampler_settings;
  std::vector<Architecture> archs{Architecture::DT, Architecture::LR};
  TrainConfig train;
  std::vector<std::size_t> n_grid{100, 1000, 10000};
  std::size_t repetitions = 10;
  std::size_t bayesian_repetitions = 5;
  std::uint64_t seed = 1;
  std::size_t reference_size = 100000;
  bool reference_balanced = true;
  std::uint64_t reference_max_attempts = 0;  // 0: 100 * reference_size
  int workers = 1;
  double tie_margin = 0.01;
  bool record_wall_time = false;
  bool plots = true;

  std::size_t repetitions_for(Method m) const { return m == Method::Bayesian ? bayesian_repetitions : repetitions; }
  std::size_t max_n() const { return n_grid.back(); }
  std::uint64_t max_attempts() const {
    return reference_max_attempts ? reference_max_attempts : 100 * static_cast<std::uint64_t>(reference_size);
  }

  void validate() const {
    oracle.validate();
    if (methods.empty()) throw ConfigError("[samplers] methods is empty");
    if (archs.empty()) throw ConfigError("[copies] archs is empty");
    if (n_grid.empty()) throw ConfigError("[run] n_grid is empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (n_grid[i] < 1 || (i > 0 && n_grid[i] <= n_grid[i - 1])) throw ConfigError("[run] n_grid must be strictly ascending and positive");
    }
    if (repetitions < 1 || bayesian_repetitions < 1) throw ConfigError("[run] repetitions must be >= 1");
    if (reference_size < 1) throw ConfigError("[run] reference_size must be >= 1");
    if (workers < 1) throw ConfigError("[run] workers must be >= 1");
    if (!(tie_margin >= 0.0)) throw ConfigError("[run] tie_margin must be >= 0");
    try {
      train.validate();
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("[copies] ") + e.what());
    }
  }

  static ExperimentConfig from(const KeyValueConfig& kv) {
    ExperimentConfig c;
    if (kv.has_section("oracle")) c.oracle.settings = kv.section("oracle");
    if (kv.has("samplers", "methods")) {
      c.methods.clear();
      for (const auto& m : kv.get_list("samplers", "methods")) c.methods.push_back(parse_method(m));
    }
    for (const char* s : {"boundary", "bayesian", "jacobian"})
      for (const auto& [k, v] : kv.section(s)) c.sampler_settings.overrides.set(s, k, v);
    if (kv.has("copies", "archs")) {
      c.archs.clear();
      for (const auto& a : kv.get_list("copies", "archs")) c.archs.push_back(parse_architecture(a));
    }
    c.train.learning_rate = kv.get_double("copies", "learning_rate", c.train.learning_rate);
    c.train.epochs = static_cast<int>(kv.get_int("copies", "epochs", c.train.epochs));
    c.train.batch_size = static_cast<int>(kv.get_int("copies", "batch_size", c.train.batch_size));
    c.train.max_depth = static_cast<int>(kv.get_int("copies", "max_depth", c.train.max_depth));
    c.train.min_leaf = static_cast<int>(kv.get_int("copies", "min_leaf", c.train.min_leaf));
    if (kv.has("run", "n_grid")) {
      c.n_grid.clear();
      for (double v : kv.get_doubles("run", "n_grid")) {
        if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v))) throw ConfigError("[run] n_grid entries must be positive integers");
        c.n_grid.push_back(static_cast<std::size_t>(v));
      }
    }
    c.repetitions = static_cast<std::size_t>(kv.get_int("run", "repetitions", static_cast<long long>(c.repetitions)));
    c.bayesian_repetitions = static_cast<std::size_t>(
        kv.get_int("run", "bayesian_repetitions", kv.has("run", "repetitions") && !kv.has("run", "bayesian_repetitions")
                                                      ? static_cast<long long>(std::min<std::size_t>(c.repetitions, 5))
                                                      : static_cast<long long>(c.bayesian_repetitions)));
    c.seed = static_cast<std::uint64_t>(kv.get_int("run", "seed", static_cast<long long>(c.seed)));
    c.reference_size = static_cast<std::size_t>(kv.get_int("run", "reference_size", static_cast<long long>(c.reference_size)));
    c.reference_balanced = kv.get_bool("run", "reference_balanced", c.reference_balanced);
    c.reference_max_attempts = static_cast<std::uint64_t>(kv.get_int("run", "reference_max_attempts", 0));
    c.workers = static_cast<int>(kv.get_int("run", "workers", c.workers));
    c.tie_margin = kv.get_double("run", "tie_margin", c.tie_margin);
    c.record_wall_time = kv.get_bool("run", "record_wall_time", c.record_wall_time);
    c.plots = kv.get_bool("run", "plots", c.plots);
    c.validate();
    return c;
  }

  /// Every setting written out explicitly, enough to replay the run.
  KeyValueConfig resolved() const {
    KeyValueConfig kv;
    for (const auto& [k, v] : oracle.settings) kv.set("oracle", k, v);
    std::string ms;
    for (auto m : methods) ms += (ms.empty() ? "" : " ") + std::string(to_string(m));
    kv.set("samplers", "methods", ms);
    for (const char* s : {"boundary", "bayesian", "jacobian"})
      for (const auto& [k, v] : sampler_settings.overrides.section(s)) kv.set(s, k, v);
    std::string as;
    for (auto a : archs) as += (as.empty() ? "" : " ") + std::string(to_string(a));
    kv.set("copies", "archs", as);
    kv.set("copies", "learning_rate", csv_detail::format_double(train.learning_rate));
    kv.set("copies", "epochs", std::to_string(train.epochs));
    kv.set("copies", "batch_size", std::to_string(train.batch_size));
    kv.set("copies", "max_depth", std::to_string(train.max_depth));
    kv.set("copies", "min_leaf", std::to_string(train.min_leaf));
    std::string grid;
    for (auto n : n_grid) grid += (grid.empty() ? "" : " ") + std::to_string(n);
    kv.set("run", "n_grid", grid);
    kv.set("run", "repetitions", std::to_string(repetitions));
    kv.set("run", "bayesian_repetitions", std::to_string(bayesian_repetitions));
    kv.set("run", "seed", std::to_string(seed));
    kv.set("run", "reference_size", std::to_string(reference_size));
    kv.set("run", "reference_balanced", reference_balanced ? "true" : "false");
    kv.set("run", "reference_max_attempts", std::to_string(max_attempts()));
    kv.set("run", "workers", std::to_string(workers));
    kv.set("run", "tie_margin", csv_detail::format_double(tie_margin));
    kv.set("run", "record_wall_time", record_wall_time ? "true" : "false");
    kv.set("run", "plots", plots ? "true" : "false");
    return kv;
  }
};

}  // namespace copysample
