#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "copysample/copies/copy_model.hpp"
#include "copysample/oracles/analytic.hpp"
#include "copysample/samplers/boundary.hpp"
#include "copysample/samplers/random_sampler.hpp"

using namespace copysample;

namespace {

AnalyticOracle circle() { return AnalyticOracle(ConcentricCircles{Eigen::Vector2d(0.5, 0.5), {0.25}}); }

SyntheticDataset labelled_uniform(Oracle& o, std::size_t n, std::uint64_t seed) {
  RandomSource rng(seed);
  return random_sampler(n, o, rng);
}

std::string saved(const CopyModel& m) {
  std::ostringstream os;
  save_model(os, m);
  return os.str();
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(Architecture, NamesRoundTrip) {
  for (auto a : {Architecture::LR, Architecture::DT, Architecture::ANN, Architecture::ANN2})
    EXPECT_EQ(parse_architecture(to_string(a)), a);
  EXPECT_THROW(parse_architecture("SVM"), ConfigError);
  EXPECT_EQ(hidden_layers(Architecture::ANN), std::vector<int>{5});
  EXPECT_EQ(hidden_layers(Architecture::ANN2), (std::vector<int>{50, 50, 50}));
  EXPECT_TRUE(hidden_layers(Architecture::LR).empty());
}

TEST(SoftmaxNetwork, ProbabilitiesSumToOne) {
  RandomSource rng(1);
  SoftmaxNetwork net(3, {7, 4}, 5, rng);
  Eigen::MatrixXd x(3, 20);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal() * 3;
  const auto p = net.probabilities(x);
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    EXPECT_NEAR(p.col(j).sum(), 1.0, 1e-9);
    EXPECT_GE(p.col(j).minCoeff(), 0.0);
  }
}

TEST(SoftmaxNetwork, LossGradientMatchesFiniteDifferences) {
  RandomSource rng(2);
  SoftmaxNetwork net(2, {6, 5}, 3, rng);
  Eigen::MatrixXd x(2, 16);
  std::vector<int> y;
  for (int i = 0; i < 16; ++i) {
    x.col(i) = rng.uniform_point(2);
    y.push_back(static_cast<int>(rng.index(3)));
  }
  // Nonzero biases keep pre-activations off the ReLU kink.
  Eigen::VectorXd jiggled = net.flat_parameters();
  for (Eigen::Index i = 0; i < jiggled.size(); ++i) jiggled[i] += 0.1 * rng.normal();
  net.set_flat_parameters(jiggled);
  std::vector<DenseLayer> grads;
  net.loss_gradient(x, y, &grads);
  const Eigen::VectorXd g = SoftmaxNetwork::flatten(grads);
  const Eigen::VectorXd theta = net.flat_parameters();
  ASSERT_EQ(g.size(), theta.size());
  ASSERT_EQ(static_cast<std::size_t>(theta.size()), net.parameter_count());
  for (int trial = 0; trial < 10; ++trial) {
    const auto i = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(theta.size())));
    const double h = 1e-6;
    Eigen::VectorXd tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    SoftmaxNetwork a = net, b = net;
    a.set_flat_parameters(tp);
    b.set_flat_parameters(tm);
    const double fd = (a.loss_gradient(x, y, nullptr) - b.loss_gradient(x, y, nullptr)) / (2 * h);
    EXPECT_NEAR(g[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "parameter " << i;
  }
}

TEST(SoftmaxNetwork, InputGradientMatchesFiniteDifferences) {
  RandomSource rng(3);
  SoftmaxNetwork net(3, {}, 4, rng);
  const Point z = rng.uniform_point(3);
  for (int c = 0; c < 4; ++c) {
    const Point g = net.probability_gradient(z, c);
    for (int j = 0; j < 3; ++j) {
      Point zp = z, zm = z;
      zp[j] += 1e-6;
      zm[j] -= 1e-6;
      const double fd = (net.probabilities(Eigen::MatrixXd(zp))(c, 0) - net.probabilities(Eigen::MatrixXd(zm))(c, 0)) / 2e-6;
      EXPECT_NEAR(g[j], fd, 1e-6);
    }
  }
}

TEST(Train, LinearRegionLR) {
  AnalyticOracle o(Halfspace{Eigen::Vector2d(1, 1), 1.0});
  RandomSource rng(4);
  const auto ds = boundary_sampler(500, o, rng);
  const auto m = train(Architecture::LR, ds, TrainConfig{});
  // Points hug the boundary, so judge the copy on uniform draws instead.
  std::size_t wrong = 0;
  for (int i = 0; i < 20000; ++i) {
    const Point z = rng.uniform_point(2);
    wrong += m.predict(z) == o.label_of(z) ? 0 : 1;
  }
  EXPECT_LE(wrong / 20000.0, 0.01);
}

TEST(Train, TreeFitsConsistentSetExactly) {
  auto o = circle();
  const auto ds = labelled_uniform(o, 700, 5);
  const auto m = train(Architecture::DT, ds, TrainConfig{});
  EXPECT_EQ(training_error(m, ds), 0.0);
  EXPECT_EQ(m.meta().training_error, 0.0);
}

TEST(Train, SingleClassGivesConstant) {
  SyntheticDataset ds;
  ds.dim = 2;
  ds.num_classes = 3;
  for (int i = 0; i < 5; ++i) ds.append(Eigen::Vector2d(0.1 * i, 0.2), ClassLabel(2));
  for (auto a : {Architecture::LR, Architecture::DT, Architecture::ANN}) {
    const auto m = train(a, ds, TrainConfig{});
    EXPECT_TRUE(m.is_constant());
    EXPECT_EQ(training_error(m, ds), 0.0);
    RandomSource rng(6);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(m.predict(rng.uniform_point(2)), ClassLabel(2));
  }
}

TEST(Train, Errors) {
  SyntheticDataset empty;
  empty.dim = 2;
  empty.num_classes = 2;
  EXPECT_THROW(train(Architecture::DT, empty, TrainConfig{}), PreconditionError);
  auto o = circle();
  TrainConfig bad;
  bad.epochs = 0;
  EXPECT_THROW(train(Architecture::ANN, labelled_uniform(o, 20, 1), bad), PreconditionError);
}

TEST(Train, Deterministic) {
  auto o = circle();
  const auto ds = labelled_uniform(o, 300, 7);
  TrainConfig cfg;
  cfg.seed = 99;
  cfg.epochs = 30;
  for (auto a : {Architecture::LR, Architecture::DT, Architecture::ANN, Architecture::ANN2})
    EXPECT_EQ(saved(train(a, ds, cfg)), saved(train(a, ds, cfg))) << to_string(a);
}

TEST(Predict, PlantedLogisticWeightsMatchHalfspace) {
  // Two logits whose difference is w.z - c.
  const Eigen::Vector2d w(0.8, -0.6);
  const double c = 0.1;
  DenseLayer layer{Eigen::MatrixXd(2, 2), Eigen::VectorXd(2)};
  layer.weight.row(0).setZero();
  layer.weight.row(1) = w.transpose();
  layer.bias << 0.0, -c;
  const CopyModel m(Architecture::LR, 2, 2, SoftmaxNetwork(2, 2, {layer}));
  AnalyticOracle o(Halfspace{w, c});
  RandomSource rng(8);
  for (int i = 0; i < 10000; ++i) {
    const Point z = rng.uniform_point(2);
    if (std::abs(w.dot(z) - c) < 1e-12) continue;
    ASSERT_EQ(m.predict(z), o.label_of(z));
  }
}

TEST(Predict, StumpFlipsAtThreshold) {
  const CopyModel m(Architecture::DT, 2, 2, DecisionTree::stump(2, 2, 0, 0.5, 0, 1));
  EXPECT_EQ(m.predict(Eigen::Vector2d(0.5, 0.9)), ClassLabel(0));
  EXPECT_EQ(m.predict(Eigen::Vector2d(std::nextafter(0.5, 1.0), 0.9)), ClassLabel(1));
  EXPECT_EQ(m.predict(Eigen::Vector2d(0.1, 0.1)), ClassLabel(0));
  EXPECT_EQ(m.predict(Eigen::Vector2d(0.9, 0.1)), ClassLabel(1));
}

TEST(Predict, ConstantEverywhere) {
  const CopyModel m(Architecture::ANN, 3, 4, ConstantClassifier{3});
  RandomSource rng(9);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(m.predict(rng.uniform_point(3)), ClassLabel(3));
  EXPECT_THROW(m.predict(Eigen::Vector2d(0.1, 0.1)), PreconditionError);
}

TEST(DecisionTree, DepthLimit) {
  auto o = circle();
  const auto ds = labelled_uniform(o, 500, 10);
  TrainConfig cfg;
  cfg.max_depth = 1;
  const auto m = train(Architecture::DT, ds, cfg);
  EXPECT_EQ(m.meta().depth, 1);
  cfg.max_depth = 3;
  EXPECT_LE(train(Architecture::DT, ds, cfg).meta().depth, 3);
}

TEST(DecisionTree, MinLeafIsRespected) {
  Eigen::MatrixXd x(6, 1);
  x << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  const std::vector<int> y{0, 1, 0, 1, 0, 1};
  const auto t = DecisionTree::fit(x, y, 2, TreeSettings{100, 3});
  EXPECT_LE(t.depth(), 1);
}

TEST(ModelIo, RoundTripIsBitExact) {
  auto o = circle();
  const auto ds = labelled_uniform(o, 200, 11);
  TrainConfig cfg;
  cfg.epochs = 20;
  RandomSource rng(12);
  std::vector<Point> probes;
  for (int i = 0; i < 200; ++i) probes.push_back(rng.uniform_point(2));
  for (auto a : {Architecture::LR, Architecture::DT, Architecture::ANN, Architecture::ANN2}) {
    const auto m = train(a, ds, cfg);
    std::istringstream is(saved(m));
    const auto back = load_model(is);
    EXPECT_EQ(saved(back), saved(m));
    EXPECT_EQ(back.architecture(), a);
    if (const auto* n1 = std::get_if<SoftmaxNetwork>(&m.impl())) {
      const auto* n2 = std::get_if<SoftmaxNetwork>(&back.impl());
      ASSERT_NE(n2, nullptr);
      EXPECT_EQ(n1->flat_parameters(), n2->flat_parameters());
    }
    for (const auto& z : probes) EXPECT_EQ(back.predict(z), m.predict(z));
  }
}

TEST(ModelIo, ConstantRoundTrip) {
  const CopyModel m(Architecture::DT, 2, 3, ConstantClassifier{1});
  std::istringstream is(saved(m));
  EXPECT_TRUE(load_model(is).is_constant());
}

TEST(ModelIo, RejectsGarbage) {
  std::istringstream wrong_magic("model 1\n");
  EXPECT_THROW(load_model(wrong_magic), FormatError);
  std::istringstream wrong_version("copysample-model 2\n");
  EXPECT_THROW(load_model(wrong_version), FormatError);
  std::istringstream truncated("copysample-model 1\narch DT\ndim 2\nclasses 2\nmeta 0 0 0 0x0p+0\nkind tree 3\n");
  EXPECT_THROW(load_model(truncated), FormatError);
}

TEST(Capacity, LargerNetworksAndTreesFitBetter) {
  auto o = circle();
  std::vector<double> ann, ann2, dt;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto ds = labelled_uniform(o, 5000, 100 + seed);
    TrainConfig cfg;
    cfg.seed = seed;
    ann.push_back(training_error(train(Architecture::ANN, ds, cfg), ds));
    ann2.push_back(training_error(train(Architecture::ANN2, ds, cfg), ds));
    dt.push_back(training_error(train(Architecture::DT, ds, cfg), ds));
  }
  EXPECT_LE(median_of(ann2), median_of(ann) + 0.02);
  EXPECT_LE(median_of(dt), 0.01);
}
