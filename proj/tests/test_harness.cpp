#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "copysample/harness/runner.hpp"

using namespace copysample;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("copysample_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

KeyValueConfig parse(const std::string& text) {
  std::istringstream is(text);
  return KeyValueConfig::parse(is);
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::size_t lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

int run_cli(const std::string& args) {
  const int status = std::system((std::string(COPYSAMPLE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(KeyValueConfig, Grammar) {
  const auto kv = parse("top = 1\n# comment\n; other\n[run]\n  seed = 42  \nn_grid = 100 1000\n\n[copies]\narchs=DT LR\nseed = 7\n");
  EXPECT_EQ(kv.get("", "top", ""), "1");
  EXPECT_EQ(kv.get_int("run", "seed", 0), 42);
  EXPECT_EQ(kv.get_doubles("run", "n_grid"), (std::vector<double>{100, 1000}));
  EXPECT_EQ(kv.get_list("copies", "archs"), (std::vector<std::string>{"DT", "LR"}));
  EXPECT_EQ(kv.get_int("copies", "seed", 0), 7);
  EXPECT_FALSE(kv.has("run", "missing"));
  EXPECT_TRUE(kv.has_section("copies"));
  EXPECT_EQ(kv.get_double("run", "missing", 2.5), 2.5);
}

TEST(KeyValueConfig, Errors) {
  EXPECT_THROW(parse("[run\n"), ConfigError);
  EXPECT_THROW(parse("[]\n"), ConfigError);
  EXPECT_THROW(parse("[run]\njust words\n"), ConfigError);
  EXPECT_THROW(parse("[run]\n= 3\n"), ConfigError);
  const auto kv = parse("[run]\nseed = abc\nflag = maybe\n");
  EXPECT_THROW(kv.get_int("run", "seed", 0), ConfigError);
  EXPECT_THROW(kv.get_bool("run", "flag", false), ConfigError);
  EXPECT_THROW(kv.require("run", "absent"), ConfigError);
}

TEST(KeyValueConfig, DumpParsesBack) {
  const auto kv = parse("[b]\nz = 1\na = two words\n[a]\nk = v\n");
  const auto again = parse(kv.dump());
  EXPECT_EQ(again.dump(), kv.dump());
  EXPECT_EQ(again.get("b", "a", ""), "two words");
}

TEST(ExperimentConfig, Defaults) {
  const auto cfg = ExperimentConfig::from(KeyValueConfig{});
  EXPECT_EQ(cfg.oracle.type(), "circles");
  EXPECT_EQ(cfg.methods.size(), 4u);
  EXPECT_EQ(cfg.n_grid, (std::vector<std::size_t>{100, 1000, 10000}));
  EXPECT_EQ(cfg.repetitions, 10u);
  EXPECT_EQ(cfg.bayesian_repetitions, 5u);
  EXPECT_EQ(cfg.reference_size, 100000u);
  EXPECT_DOUBLE_EQ(cfg.tie_margin, 0.01);
}

TEST(ExperimentConfig, Validation) {
  EXPECT_THROW(ExperimentConfig::from(parse("[run]\nn_grid = 1000 100\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from(parse("[run]\nn_grid = 100 100\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from(parse("[run]\nn_grid = 10.5\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from(parse("[run]\nrepetitions = 0\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from(parse("[oracle]\ntype = table\npath = /no/such/file.csv\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from(parse("[oracle]\ntype = moon\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from(parse("[samplers]\nmethods = random smart\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from(parse("[copies]\narchs = DT SVM\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from(parse("[copies]\nepochs = 0\n")), ConfigError);
}

TEST(ExperimentConfig, ResolvedConfigReplays) {
  const auto cfg = ExperimentConfig::from(parse(
      "[oracle]\ntype = halfspace\nnormal = 1 2\noffset = 0.7\n[samplers]\nmethods = boundary random\n"
      "[boundary]\nstep = 0.04\n[copies]\narchs = LR\n[run]\nn_grid = 50 500\nseed = 9\n"));
  const std::string text = cfg.resolved().dump();
  const auto again = ExperimentConfig::from(parse(text));
  EXPECT_EQ(again.resolved().dump(), text);
  EXPECT_EQ(again.methods, (std::vector<Method>{Method::Boundary, Method::Random}));
  EXPECT_DOUBLE_EQ(again.sampler_settings.boundary(500).step, 0.04);
  EXPECT_EQ(again.seed, 9u);
}

TEST(OracleSpec, BuildsEachAnalyticKind) {
  for (const char* text : {"[oracle]\ntype = halfspace\nnormal = 1 0 0\noffset = 0.5\n",
                           "[oracle]\ntype = circles\nradii = 0.1 0.3\n", "[oracle]\ntype = checkerboard\ndim = 3\ncells = 2\n",
                           "[oracle]\ntype = spiral\nturns = 1.5\n"}) {
    const auto cfg = ExperimentConfig::from(parse(text));
    auto o = cfg.oracle.factory()();
    EXPECT_NE(dynamic_cast<AnalyticOracle*>(o.get()), nullptr) << text;
  }
  EXPECT_THROW(ExperimentConfig::from(parse("[oracle]\ntype = external\n")), ConfigError);
}

TEST(OracleSpec, TableFromCsv) {
  const auto dir = fresh_dir("table");
  std::ofstream(dir / "t.csv") << "x0,x1,label\n0,0,0\n1,1,1\n";
  const auto cfg = ExperimentConfig::from(parse("[oracle]\ntype = table\npath = " + (dir / "t.csv").string() + "\n"));
  auto o = cfg.oracle.factory()();
  EXPECT_EQ(o->query(Eigen::Vector2d(0.9, 0.9)), ClassLabel(1));
}

TEST(OracleSpec, ExternalCommand) {
  const auto cfg = ExperimentConfig::from(parse("[oracle]\ntype = external\ncommand = " + std::string(COPYSAMPLE_CLI) + " serve\n"));
  EXPECT_TRUE(cfg.oracle.serial_only());
  auto o = cfg.oracle.factory()();
  EXPECT_EQ(o->query(Eigen::Vector2d(0.5, 0.5)), ClassLabel(0));
}

TEST(Generate, DispatchesEveryMethod) {
  AnalyticOracle o(ConcentricCircles{Eigen::Vector2d(0.5, 0.5), {0.25}});
  for (auto m : {Method::Random, Method::Boundary, Method::Bayesian, Method::Jacobian}) {
    RandomSource rng(1);
    const auto ds = generate(m, 60, o, SamplerSettings{}, rng);
    EXPECT_EQ(ds.size(), 60u);
    EXPECT_EQ(ds.generator_id, std::string(to_string(m)));
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
}

TEST(TimingProfile, Checkpoints) {
  AnalyticOracle o(ConcentricCircles{Eigen::Vector2d(0.5, 0.5), {0.25}});
  RandomSource rng(2);
  const auto one = timing_profile(Method::Random, {500}, o, SamplerSettings{}, rng);
  ASSERT_EQ(one.checkpoints.size(), 1u);
  EXPECT_EQ(one.checkpoints[0].first, 500u);
  const auto many = timing_profile(Method::Boundary, {100, 200, 400, 800}, o, SamplerSettings{}, rng);
  ASSERT_EQ(many.checkpoints.size(), 4u);
  for (std::size_t i = 1; i < many.checkpoints.size(); ++i) {
    EXPECT_GT(many.checkpoints[i].first, many.checkpoints[i - 1].first);
    EXPECT_GE(many.checkpoints[i].second, many.checkpoints[i - 1].second);
  }
  EXPECT_THROW(timing_profile(Method::Random, {200, 100}, o, SamplerSettings{}, rng), PreconditionError);
  std::ostringstream os;
  write_timing(os, {many});
  EXPECT_EQ(os.str().substr(0, 30), "method,sample_count,elapsed_s\n");
  EXPECT_EQ(lines(os.str()), 5u);
}

TEST(Svg, EmptyDatasetHasAxesOnly) {
  SyntheticDataset ds;
  ds.dim = 2;
  const std::string svg = render_svg(ds, nullptr);
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("id=\"axes\""), std::string::npos);
  EXPECT_EQ(count(svg, "<circle"), 0u);
}

TEST(Svg, OneMarkerPerSample) {
  AnalyticOracle o(ConcentricCircles{Eigen::Vector2d(0.5, 0.5), {0.25}});
  RandomSource rng(3);
  const auto ds = generate(Method::Random, 50, o, SamplerSettings{}, rng);
  const std::string svg = render_svg(ds, &o);
  EXPECT_EQ(count(svg, "<circle"), 50u);
  EXPECT_NE(svg.find("id=\"boundary\""), std::string::npos);
  EXPECT_EQ(svg, render_svg(ds, &o));

  const auto dir = fresh_dir("svg");
  plot_2d(ds, &o, dir / "a.svg");
  plot_2d(ds, &o, dir / "b.svg");
  EXPECT_EQ(slurp(dir / "a.svg"), slurp(dir / "b.svg"));
}

TEST(Svg, BoundaryTraceFollowsCircle) {
  AnalyticOracle o(ConcentricCircles{Eigen::Vector2d(0.5, 0.5), {0.25}});
  SyntheticDataset ds;
  ds.dim = 2;
  PlotStyle style;
  const std::string svg = render_svg(ds, &o, style);
  const auto start = svg.find(" d=\"") + 4;
  const std::string path = svg.substr(start, svg.find('"', start) - start);
  const std::regex coord(R"(([0-9.]+),([0-9.]+))");
  std::size_t points = 0;
  for (auto it = std::sregex_iterator(path.begin(), path.end(), coord); it != std::sregex_iterator(); ++it) {
    const double x = (std::stod((*it)[1]) - style.margin) / style.size;
    const double y = 1.0 - (std::stod((*it)[2]) - style.margin) / style.size;
    EXPECT_NEAR(std::hypot(x - 0.5, y - 0.5), 0.25, 1.5 / style.boundary_grid);
    ++points;
  }
  EXPECT_GT(points, 100u);
}

TEST(Svg, RequiresTwoDimensions) {
  SyntheticDataset ds;
  ds.dim = 3;
  EXPECT_THROW(render_svg(ds, nullptr), UnsupportedError);
}

TEST(RunExperiment, SingleCell) {
  const auto dir = fresh_dir("single");
  const auto cfg = ExperimentConfig::from(parse(
      "[samplers]\nmethods = random\n[copies]\narchs = DT\n[run]\nn_grid = 100\nrepetitions = 1\nreference_size = 2000\n"));
  const auto s = run_experiment(cfg, dir);
  EXPECT_TRUE(s.ok());
  EXPECT_EQ(s.report_rows, 1u);
  EXPECT_EQ(lines(slurp(dir / "reports.csv")), 2u);
  for (const char* f : {"config.resolved.ini", "reference.csv", "reports.csv", "comparison.csv", "comparison.csv.meta.json",
                        "timing.csv", "failures.csv", "datasets/random_rep0.csv", "plots/random_N100.svg"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_NE(slurp(dir / "comparison.csv.meta.json").find("\"tie_margin\": 0.01"), std::string::npos);
  EXPECT_EQ(ExperimentConfig::from(KeyValueConfig::load(dir / "config.resolved.ini")).resolved().dump(),
            slurp(dir / "config.resolved.ini"));
}

TEST(RunExperiment, ToyGridResumesAndReproduces) {
  const std::string text =
      "[oracle]\ntype = circles\n[samplers]\nmethods = random boundary bayesian jacobian\n[copies]\narchs = DT LR\n"
      "[run]\nn_grid = 100 1000\nrepetitions = 5\nreference_size = 5000\nworkers = 2\n";
  const auto cfg = ExperimentConfig::from(parse(text));
  const auto a = fresh_dir("toy_a");
  const auto first = run_experiment(cfg, a);
  EXPECT_TRUE(first.ok());
  EXPECT_EQ(first.report_rows, 4u * 2 * 2 * 5);
  EXPECT_EQ(lines(slurp(a / "reports.csv")), 81u);
  EXPECT_EQ(lines(slurp(a / "comparison.csv")), 1u + 4 * 3);

  std::map<fs::path, std::string> before;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) before[e.path()] = slurp(e.path());
  const auto again = run_experiment(cfg, a);
  EXPECT_TRUE(again.nothing_recomputed());
  EXPECT_EQ(again.cells_skipped, 80u);
  for (const auto& [p, content] : before) EXPECT_EQ(slurp(p), content) << p;

  auto serial = cfg;
  serial.workers = 1;
  const auto b = fresh_dir("toy_b");
  run_experiment(serial, b);
  EXPECT_EQ(slurp(a / "reports.csv"), slurp(b / "reports.csv"));
  EXPECT_EQ(slurp(a / "comparison.csv"), slurp(b / "comparison.csv"));
}

TEST(RunExperiment, ResumeFillsMissingCells) {
  const auto dir = fresh_dir("partial");
  const auto cfg = ExperimentConfig::from(parse(
      "[samplers]\nmethods = random boundary\n[copies]\narchs = DT\n[run]\nn_grid = 50 200\nrepetitions = 2\nreference_size = 2000\n"));
  run_experiment(cfg, dir);
  const std::string full = slurp(dir / "reports.csv");
  fs::remove(dir / "cells" / "boundary_rep1_DT_N200.csv");
  const auto s = run_experiment(cfg, dir);
  EXPECT_EQ(s.cells_computed, 1u);
  EXPECT_EQ(s.datasets_generated, 0u);
  EXPECT_EQ(slurp(dir / "reports.csv"), full);
}

TEST(RunExperiment, CellFailuresAreIsolated) {
  const auto dir = fresh_dir("failing");
  // Too few reference draws to see the tiny inner disc: every balanced score throws.
  const auto cfg = ExperimentConfig::from(parse(
      "[oracle]\ntype = circles\nradii = 0.002\n[samplers]\nmethods = random\n[copies]\narchs = DT\n"
      "[run]\nn_grid = 20 40\nrepetitions = 2\nreference_size = 50\nreference_max_attempts = 50\n"));
  const auto s = run_experiment(cfg, dir);
  EXPECT_FALSE(s.ok());
  EXPECT_EQ(s.cells_failed, 4u);
  EXPECT_EQ(s.report_rows, 0u);
  EXPECT_EQ(lines(slurp(dir / "failures.csv")), 5u);
  EXPECT_TRUE(fs::exists(dir / "timing.csv"));
}

TEST(Cli, ExitCodes) {
  const auto dir = fresh_dir("cli");
  std::ofstream(dir / "bad.ini") << "[run]\nn_grid = 100 10\n";
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.ini").string() + " --out " + (dir / "out").string()), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);

  std::ofstream(dir / "fail.ini") << "[oracle]\ntype = circles\nradii = 0.002\n[samplers]\nmethods = random\n[copies]\narchs = DT\n"
                                     "[run]\nn_grid = 20\nrepetitions = 1\nreference_size = 50\nreference_max_attempts = 50\n";
  EXPECT_EQ(run_cli("run --config " + (dir / "fail.ini").string() + " --out " + (dir / "fail").string()), 1);

  std::ofstream(dir / "ok.ini") << "[samplers]\nmethods = random\n[copies]\narchs = DT\n"
                                   "[run]\nn_grid = 30\nrepetitions = 1\nreference_size = 500\n";
  EXPECT_EQ(run_cli("run --config " + (dir / "ok.ini").string() + " --out " + (dir / "ok").string() + " --seed 5 --workers 2"), 0);
  EXPECT_NE(slurp(dir / "ok" / "config.resolved.ini").find("seed = 5"), std::string::npos);
}

TEST(Cli, Subcommands) {
  const auto dir = fresh_dir("cli_sub");
  const std::string d = dir.string();
  ASSERT_EQ(run_cli("sample --method boundary --n 300 --seed 3 --out " + d + "/z.csv"), 0);
  ASSERT_EQ(run_cli("sample --method boundary --n 300 --seed 3 --out " + d + "/z2.csv"), 0);
  EXPECT_EQ(slurp(dir / "z.csv"), slurp(dir / "z2.csv"));
  EXPECT_EQ(load_dataset(dir / "z.csv").size(), 300u);
  ASSERT_EQ(run_cli("copy --data " + d + "/z.csv --arch DT --seed 1 --out " + d + "/m.model"), 0);
  ASSERT_EQ(run_cli("evaluate --model " + d + "/m.model --n 2000 --seed 1 --out " + d + "/eval.csv"), 0);
  EXPECT_EQ(slurp(dir / "eval.csv").rfind("R_F,R_Fb\n", 0), 0u);
  ASSERT_EQ(run_cli("profile --method random --n 100 --n 1000 --seed 1 --out " + d + "/t.csv"), 0);
  EXPECT_EQ(lines(slurp(dir / "t.csv")), 3u);
  ASSERT_EQ(run_cli("plot --data " + d + "/z.csv --n 50 --seed 1 --out " + d + "/z.svg"), 0);
  EXPECT_EQ(count(slurp(dir / "z.svg"), "<circle"), 50u);

  std::ofstream(dir / "r.csv") << report_header << "\ntoy,a,DT,100,1,0.1,0.1,0\ntoy,b,DT,100,1,0.3,0.3,0\n";
  ASSERT_EQ(run_cli("compare --reports " + d + "/r.csv --margin 0.05 --seed 1 --out " + d + "/c.csv"), 0);
  EXPECT_EQ(slurp(dir / "c.csv"), "method_a,method_b,victories,ties,losses\na,b,1,0,0\nb,a,0,0,1\n");
  EXPECT_EQ(run_cli("sample --method nope --n 10 --out " + d + "/x.csv"), 2);
}
