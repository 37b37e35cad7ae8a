#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "copysample/oracles/analytic.hpp"
#include "copysample/samplers/boundary.hpp"
#include "copysample/samplers/jacobian.hpp"
#include "copysample/samplers/random_sampler.hpp"

using namespace copysample;

namespace {

AnalyticOracle circle() { return AnalyticOracle(ConcentricCircles{Eigen::Vector2d(0.5, 0.5), {0.25}}); }
AnalyticOracle halfspace(int d = 2, double c = 0.5) {
  Point w = Point::Zero(d);
  w[0] = 1;
  return AnalyticOracle(Halfspace{w, c});
}

class ConstantOracle final : public Oracle {
 public:
  explicit ConstantOracle(int d) : Oracle(d, 1) {}
  bool thread_safe() const override { return true; }
  std::string describe() const override { return "constant"; }

 protected:
  ClassLabel classify(const Point&) override { return ClassLabel(0); }
};

std::string serialize(const SyntheticDataset& ds) {
  std::ostringstream os;
  write_csv(os, ds);
  return os.str();
}

void expect_valid(const SyntheticDataset& ds, std::size_t n, const Oracle& oracle) {
  ASSERT_EQ(ds.size(), n);
  const SampleSpace space(oracle.dim());
  for (const auto& s : ds.samples) {
    ASSERT_TRUE(space.contains(s.point));
    ASSERT_GE(s.label.value, 0);
    ASSERT_LT(s.label.value, oracle.num_classes());
  }
}

}  // namespace

TEST(RandomSampler, SinglePoint) {
  auto o = circle();
  RandomSource rng(1);
  const auto ds = random_sampler(1, o, rng);
  expect_valid(ds, 1, o);
  EXPECT_EQ(ds.samples[0].label, o.label_of(ds.samples[0].point));
}

TEST(RandomSampler, HalfspaceClassBalance) {
  auto o = halfspace();
  RandomSource rng(2);
  const auto ds = random_sampler(10000, o, rng);
  std::size_t zeros = 0;
  for (const auto& s : ds.samples) zeros += s.label.value == 0 ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(zeros) / 10000.0, 0.5, 0.02);
}

TEST(RandomSampler, PrefixEqualsSmallerRun) {
  auto o = circle();
  RandomSource a(3), b(3);
  const auto big = random_sampler(1000, o, a);
  const auto small = random_sampler(100, o, b);
  EXPECT_EQ(serialize(prefix(big, 100)), serialize(small));
}

TEST(BoundaryParams, BudgetDefaults) {
  const auto p = BoundaryParams::for_budget(1000);
  EXPECT_EQ(p.runs, static_cast<int>(std::lround(2 + std::log(1000.0))));
  EXPECT_EQ(p.runs, 9);
  EXPECT_EQ(p.max_threads, 36);
  EXPECT_EQ(p.max_steps, 22);
  EXPECT_DOUBLE_EQ(p.epsilon, 0.01);
  EXPECT_DOUBLE_EQ(p.step, 0.05);
  EXPECT_DOUBLE_EQ(p.spawn_rate, 5.0);
}

TEST(BoundaryParams, Validation) {
  auto p = BoundaryParams::for_budget(100);
  p.epsilon = 0.1;
  EXPECT_THROW(p.validate(), PreconditionError);
  p = BoundaryParams::for_budget(100);
  p.max_steps = 0;
  EXPECT_THROW(p.validate(), PreconditionError);
}

TEST(BinarySearch, UnitIntervalTakesSevenSteps) {
  auto o = halfspace(1);
  const LabeledSample a{Point::Constant(1, 0.0), ClassLabel(0)};
  const LabeledSample b{Point::Constant(1, 1.0), ClassLabel(1)};
  const auto r = binary_search_boundary(a, b, 0.01, o);

  // Direct simulation of halving [0,1] around 0.5.
  double lo = 0, hi = 1;
  int expected = 0;
  while (hi - lo >= 0.01) {
    const double mid = 0.5 * (lo + hi);
    (mid >= 0.5 ? hi : lo) = mid;
    ++expected;
  }
  EXPECT_EQ(expected, 7);
  EXPECT_EQ(r.visited.size(), 7u);
  EXPECT_EQ(o.query_count(), 7u);
  EXPECT_LT((r.a.point - r.b.point).norm(), 0.01);
  EXPECT_LT(r.a.point[0], 0.5);
  EXPECT_GE(r.b.point[0], 0.5);
  EXPECT_EQ(r.a.label, ClassLabel(0));
  EXPECT_EQ(r.b.label, ClassLabel(1));
}

TEST(BinarySearch, CloseEndpointsAreReturnedAsIs) {
  auto o = halfspace(1);
  const LabeledSample a{Point::Constant(1, 0.497), ClassLabel(0)};
  const LabeledSample b{Point::Constant(1, 0.503), ClassLabel(1)};
  const auto r = binary_search_boundary(a, b, 0.01, o);
  EXPECT_TRUE(r.visited.empty());
  EXPECT_EQ(r.a.point, a.point);
  EXPECT_EQ(r.b.point, b.point);
  EXPECT_EQ(o.query_count(), 0u);
}

TEST(BinarySearch, StraddlesAndRespectsBound) {
  RandomSource rng(4);
  AnalyticOracle oracles[] = {circle(), halfspace(3, 0.4), AnalyticOracle(Checkerboard{2, 3})};
  int runs = 0;
  while (runs < 100) {
    auto& o = oracles[runs % 3];
    const Point za = rng.uniform_point(o.dim()), zb = rng.uniform_point(o.dim());
    const ClassLabel ya = o.label_of(za), yb = o.label_of(zb);
    if (ya == yb) continue;
    ++runs;
    const auto before = o.query_count();
    const auto r = binary_search_boundary({za, ya}, {zb, yb}, 0.01, o);
    EXPECT_LT((r.a.point - r.b.point).norm(), 0.01);
    EXPECT_NE(r.a.label, r.b.label);
    EXPECT_EQ(r.a.label, o.label_of(r.a.point));
    EXPECT_EQ(r.b.label, o.label_of(r.b.point));
    const double bound = std::ceil(std::log2((za - zb).norm() / 0.01)) + 1;
    EXPECT_LE(static_cast<double>(r.visited.size()), bound);
    EXPECT_EQ(o.query_count() - before, r.visited.size());
  }
}

TEST(ThreadStep, StepLengthIsExact) {
  auto o = circle();
  RandomSource rng(5);
  int accepted = 0;
  for (int trial = 0; trial < 200; ++trial) {
    // Start next to the circle so a flip is reachable.
    const double th = rng.uniform(0, 2 * M_PI);
    const double r = 0.25 + rng.uniform(-0.02, 0.02);
    Thread t;
    t.current.point = Eigen::Vector2d(0.5 + r * std::cos(th), 0.5 + r * std::sin(th));
    t.current.label = o.label_of(t.current.point);
    const Point u = rng.normal_vector(2);
    t.direction = u / u.norm();
    t.spawn_countdown = 3;
    const auto s = thread_step(t, o, 0.05, 5.0, rng);
    if (!s) continue;
    ++accepted;
    EXPECT_NEAR((s->thread.current.point - t.current.point).norm(), 0.05, 1e-12);
    EXPECT_NE(s->thread.current.label, t.current.label);
    EXPECT_NEAR(s->thread.direction.norm(), 1.0, 1e-12);
    EXPECT_EQ(s->thread.steps_taken, 1);
  }
  EXPECT_GT(accepted, 100);
}

TEST(ThreadStep, ParallelDirectionTurnsAcrossHalfspace) {
  auto o = halfspace();
  RandomSource rng(6);
  int accepted = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Thread t;
    t.current = {Eigen::Vector2d(0.49, 0.5), ClassLabel(0)};
    t.direction = Eigen::Vector2d(0, 1);
    t.spawn_countdown = 5;
    const auto s = thread_step(t, o, 0.05, 5.0, rng);
    if (!s) continue;
    ++accepted;
    EXPECT_GT(std::abs(s->thread.direction[0]), 0.0);
    EXPECT_EQ(s->thread.current.label, ClassLabel(1));
  }
  EXPECT_GT(accepted, 0);
}

TEST(ThreadStep, StopsWhenNoFlipIsReachable) {
  auto o = circle();
  RandomSource rng(7);
  Thread t;
  t.current = {Eigen::Vector2d(0.5, 0.5), ClassLabel(0)};
  t.direction = Eigen::Vector2d(1, 0);
  t.spawn_countdown = 5;
  EXPECT_FALSE(thread_step(t, o, 0.05, 5.0, rng).has_value());
}

TEST(ThreadStep, SpawnGapMean) {
  RandomSource rng(8);
  double sum = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto g = draw_spawn_gap(5.0, rng);
    ASSERT_GE(g, 1);
    sum += static_cast<double>(g);
  }
  EXPECT_NEAR(sum / n, 5.0, 0.2);
}

TEST(BoundarySampler, ExactBudgetAndAccounting) {
  for (std::size_t n : {2u, 3u, 57u, 500u}) {
    auto o = circle();
    RandomSource rng(9);
    const auto ds = boundary_sampler(n, o, rng);
    expect_valid(ds, n, o);
    EXPECT_GE(o.query_count(), n);
    EXPECT_EQ(ds.query_count, o.query_count());
    for (const auto& s : ds.samples) EXPECT_EQ(s.label, o.label_of(s.point));
  }
}

TEST(BoundarySampler, Deterministic) {
  auto o1 = circle(), o2 = circle();
  RandomSource a(10), b(10);
  EXPECT_EQ(serialize(boundary_sampler(800, o1, a)), serialize(boundary_sampler(800, o2, b)));
}

TEST(BoundarySampler, ExplorationConcentratesNearBoundary) {
  auto o = circle();
  RandomSource rng(11);
  const auto ds = boundary_sampler(2000, o, rng);
  std::size_t near = 0, total = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!is_exploration_index(i)) continue;
    ++total;
    near += o.boundary_distance(ds.samples[i].point) <= 0.1 ? 1 : 0;
  }
  EXPECT_EQ(total, 1000u);
  EXPECT_GE(static_cast<double>(near) / static_cast<double>(total), 0.25);
  EXPECT_EQ(ds.metadata.at("fallback"), "false");
}

TEST(BoundarySampler, ConstantOracleFallsBackToUniform) {
  ConstantOracle o(2);
  RandomSource rng(12);
  // The fallback needs a same-label run of 10 * max_steps exploration draws.
  const auto ds = boundary_sampler(1000, o, rng);
  expect_valid(ds, 1000, o);
  EXPECT_EQ(ds.metadata.at("fallback"), "true");
}

TEST(BoundarySampler, OneDimensional) {
  auto o = halfspace(1, 0.3);
  RandomSource rng(13);
  const auto ds = boundary_sampler(200, o, rng);
  expect_valid(ds, 200, o);
}

TEST(BoundarySampler, BudgetBelowTwoIsRejected) {
  auto o = circle();
  RandomSource rng(1);
  EXPECT_ANY_THROW(boundary_sampler(1, o, rng));
}

TEST(JacobianParams, BudgetDefaults) {
  EXPECT_EQ(JacobianParams::for_budget(200).refits, std::min(100, static_cast<int>(std::lround(5 + 200 / 4.0))));
  EXPECT_EQ(JacobianParams::for_budget(200).refits, 55);
  EXPECT_EQ(JacobianParams::for_budget(10000).refits, 100);
  EXPECT_EQ(JacobianParams::for_budget(200).seeds_per_refit, 50);
  EXPECT_EQ(JacobianParams::for_budget(200).rounds, 5);
}

TEST(JacobianSampler, RefitsBoundedByBudgetFormula) {
  auto o = circle();
  RandomSource rng(14);
  JacobianTrace trace;
  const auto ds = jacobian_sampler(200, o, JacobianParams::for_budget(200), rng, {}, &trace);
  expect_valid(ds, 200, o);
  EXPECT_GE(trace.refits_run, 1);
  EXPECT_LE(trace.refits_run, 55);
  EXPECT_EQ(ds.query_count, o.query_count());
}

TEST(JacobianSampler, OffsetsAreSignSteps) {
  auto o = circle();
  RandomSource rng(15);
  JacobianTrace trace;
  const auto params = JacobianParams::for_budget(1000);
  const auto ds = jacobian_sampler(1000, o, params, rng, {}, &trace);
  ASSERT_FALSE(trace.steps.empty());
  std::size_t diagonal = 0;
  for (const auto& s : trace.steps) {
    EXPECT_NEAR(s.offset.cwiseAbs().maxCoeff(), params.step, 1e-15);
    bool diag = true;
    for (Eigen::Index j = 0; j < s.offset.size(); ++j) {
      const double a = std::abs(s.offset[j]);
      EXPECT_TRUE(a == 0.0 || a == params.step);
      diag = diag && a == params.step;
    }
    diagonal += diag ? 1 : 0;
    const Point expect = SampleSpace(2).clip(ds.samples[s.parent].point + s.offset);
    EXPECT_EQ(ds.samples[s.child].point, expect);
    EXPECT_LT(s.parent, s.child);
  }
  EXPECT_GT(diagonal, trace.steps.size() * 9 / 10);
}

TEST(JacobianSampler, Deterministic) {
  auto o1 = circle(), o2 = circle();
  RandomSource a(16), b(16);
  EXPECT_EQ(serialize(jacobian_sampler(300, o1, a)), serialize(jacobian_sampler(300, o2, b)));
}

TEST(JacobianSampler, NoDuplicatePoints) {
  auto o = circle();
  RandomSource rng(17);
  const auto ds = jacobian_sampler(600, o, rng);
  std::set<Point, jacobian_detail::PointLess> seen;
  for (const auto& s : ds.samples) EXPECT_TRUE(seen.insert(s.point).second);
}

TEST(Samplers, ProgressReportsEverySample) {
  auto o = circle();
  RandomSource rng(18);
  std::size_t last = 0, calls = 0;
  const auto ds = boundary_sampler(
      150, o, rng, [&](std::size_t k) {
        EXPECT_EQ(k, last + 1);
        last = k;
        ++calls;
      });
  EXPECT_EQ(calls, 150u);
}
