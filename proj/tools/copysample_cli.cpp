// copysample: sample a black-box classifier, train copies, evaluate, compare.
//
//   copysample run      --config exp.ini --out results/ [--seed S] [--workers W]
//   copysample sample   --config exp.ini --method boundary --n 1000 --out z.csv
//   copysample copy     --data z.csv --arch DT --out dt.model [--n 500]
//   copysample evaluate --config exp.ini --model dt.model [--n L]
//   copysample compare  --reports reports.csv [--margin 0.01] [--out comparison.csv]
//   copysample profile  --config exp.ini --method random [--n 1000 --n 10000] [--out timing.csv]
//   copysample plot     --data z.csv [--config exp.ini] --out z.svg [--n 250]
//   copysample serve    --config exp.ini        (oracle over stdin/stdout)
//
// Exit status: 0 success, 1 runtime or cell failure, 2 configuration error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "copysample/harness/runner.hpp"

using namespace copysample;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int workers = 0;
  std::string method;
  std::string arch;
  std::vector<std::size_t> n;
  std::string data;
  std::string model;
  std::string reports;
  double margin = -1.0;
};

ExperimentConfig load_config(const Options& o) {
  KeyValueConfig kv;
  if (!o.config.empty()) kv = KeyValueConfig::load(o.config);
  if (o.seed_given) kv.set("run", "seed", std::to_string(o.seed));
  if (o.workers > 0) kv.set("run", "workers", std::to_string(o.workers));
  return ExperimentConfig::from(kv);
}

std::ostream& output(const Options& o, std::ofstream& file) {
  if (o.out.empty() || o.out == "-") return std::cout;
  file.open(o.out, std::ios::binary);
  if (!file) throw FormatError("cannot write " + o.out);
  return file;
}

std::uint64_t command_seed(const Options& o, const ExperimentConfig* cfg) {
  return o.seed_given || !cfg ? o.seed : cfg->seed;
}

int cmd_run(const Options& o) {
  if (o.out.empty()) throw ConfigError("run: --out <dir> is required");
  const ExperimentConfig cfg = load_config(o);
  RunOptions ro;
  ro.log = &std::cerr;
  const RunSummary s = run_experiment(cfg, o.out, ro);
  std::cerr << "cells: " << s.cells_total << " total, " << s.cells_computed << " computed, " << s.cells_skipped
            << " reused, " << s.cells_failed << " failed\n";
  return s.ok() ? 0 : 1;
}

int cmd_sample(const Options& o) {
  if (o.method.empty() || o.n.size() != 1) throw ConfigError("sample: --method and a single --n are required");
  if (o.out.empty()) throw ConfigError("sample: --out <csv> is required");
  const ExperimentConfig cfg = load_config(o);
  auto oracle = cfg.oracle.factory()();
  RandomSource rng(command_seed(o, &cfg));
  const SyntheticDataset ds = generate(parse_method(o.method), o.n.front(), *oracle, cfg.sampler_settings, rng);
  save_dataset(o.out, ds);
  std::cerr << "wrote " << ds.size() << " samples (" << ds.query_count << " queries) to " << o.out << "\n";
  return 0;
}

int cmd_copy(const Options& o) {
  if (o.data.empty() || o.arch.empty() || o.out.empty()) throw ConfigError("copy: --data, --arch and --out are required");
  const ExperimentConfig cfg = load_config(o);
  SyntheticDataset ds = load_dataset(o.data);
  if (!o.n.empty()) ds = prefix(ds, o.n.front());
  TrainConfig tc = cfg.train;
  tc.seed = command_seed(o, &cfg);
  const CopyModel m = train(parse_architecture(o.arch), ds, tc);
  save_model(std::filesystem::path(o.out), m);
  std::cerr << "training error " << m.meta().training_error << "\n";
  return 0;
}

int cmd_evaluate(const Options& o) {
  if (o.model.empty()) throw ConfigError("evaluate: --model is required");
  const ExperimentConfig cfg = load_config(o);
  const CopyModel m = load_model(std::filesystem::path(o.model));
  auto oracle = cfg.oracle.factory()();
  if (oracle->dim() != m.dim()) throw ConfigError("evaluate: model and oracle dimensions differ");
  const std::size_t size = o.n.empty() ? cfg.reference_size : o.n.front();
  RandomSource rng(derive_seed(command_seed(o, &cfg), "reference"));
  const ReferenceSet ref = build_reference_set(*oracle, size, cfg.reference_balanced, rng, cfg.max_attempts());
  if (ref.quota_warning) std::cerr << "warning: reference quota not met\n";
  std::ofstream file;
  std::ostream& os = output(o, file);
  os << "R_F,R_Fb\n"
     << csv_detail::format_double(empirical_fidelity_error(m, ref.samples)) << ','
     << csv_detail::format_double(balanced_empirical_fidelity_error(m, ref.samples, oracle->num_classes())) << '\n';
  return 0;
}

int cmd_compare(const Options& o) {
  if (o.reports.empty()) throw ConfigError("compare: --reports is required");
  std::ifstream is(o.reports);
  if (!is) throw ConfigError("compare: cannot open " + o.reports);
  double margin = o.margin;
  if (margin < 0.0) margin = o.config.empty() ? 0.01 : load_config(o).tie_margin;
  const auto entries = compare_methods(read_reports(is), margin);
  std::ofstream file;
  write_comparison(output(o, file), entries);
  return 0;
}

int cmd_profile(const Options& o) {
  if (o.method.empty()) throw ConfigError("profile: --method is required");
  const ExperimentConfig cfg = load_config(o);
  auto oracle = cfg.oracle.factory()();
  RandomSource rng(command_seed(o, &cfg));
  const auto checkpoints = o.n.empty() ? cfg.n_grid : o.n;
  const TimingProfile p = timing_profile(parse_method(o.method), checkpoints, *oracle, cfg.sampler_settings, rng);
  std::ofstream file;
  write_timing(output(o, file), {p});
  return 0;
}

int cmd_plot(const Options& o) {
  if (o.data.empty() || o.out.empty()) throw ConfigError("plot: --data and --out are required");
  SyntheticDataset ds = load_dataset(o.data);
  if (!o.n.empty()) ds = prefix(ds, o.n.front());
  std::unique_ptr<Oracle> oracle;
  if (!o.config.empty()) oracle = load_config(o).oracle.factory()();
  plot_2d(ds, dynamic_cast<const AnalyticOracle*>(oracle.get()), o.out);
  return 0;
}

int cmd_serve(const Options& o) {
  const ExperimentConfig cfg = load_config(o);
  auto oracle = cfg.oracle.factory()();
  serve_oracle(*oracle, std::cin, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Copy black-box classifiers from synthetic samples"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output file or directory");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) {
          o.seed = s;
          o.seed_given = true;
        }, "Base seed");
    sub->add_option("--workers", o.workers, "Concurrent jobs")->check(CLI::PositiveNumber);
    sub->add_option("--method", o.method, "random | boundary | bayesian | jacobian");
    sub->add_option("--arch", o.arch, "LR | DT | ANN | ANN2");
    sub->add_option("--n", o.n, "Sample count (repeatable for profile)");
    sub->add_option("--data", o.data, "Dataset CSV");
    sub->add_option("--model", o.model, "Model file");
    sub->add_option("--reports", o.reports, "Report CSV");
    sub->add_option("--margin", o.margin, "Tie margin");
  };

  std::map<CLI::App*, int (*)(const Options&)> handlers;
  const std::pair<const char*, int (*)(const Options&)> commands[] = {
      {"run", cmd_run},         {"sample", cmd_sample},   {"copy", cmd_copy}, {"evaluate", cmd_evaluate},
      {"compare", cmd_compare}, {"profile", cmd_profile}, {"plot", cmd_plot}, {"serve", cmd_serve}};
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name);
    common(sub);
    handlers[sub] = fn;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (auto& [sub, fn] : handlers)
      if (sub->parsed()) return fn(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
