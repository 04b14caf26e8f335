#include "aeroalloc/nncore.hpp"
#include "aeroalloc/nncore_io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using aeroalloc::nn::Activation;
using aeroalloc::nn::Adam;
using aeroalloc::nn::Layer;
using Net = aeroalloc::nn::Network<double>;

namespace {

Net random_net(std::uint64_t seed, std::vector<int> widths) {
  auto net = Net::glorot(widths, seed);
  std::mt19937_64 rng(seed ^ 0x5eed);
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto& layer : net.mutable_layers()) layer.bias = layer.bias.unaryExpr([&](double) { return n(rng); });
  return net;
}

}  // namespace

TEST(Forward, IdentityLayerPassesInputThrough) {
  Layer<double> layer{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), Activation::Identity};
  Net net({layer});
  EXPECT_EQ(net.forward(Eigen::VectorXd(Eigen::Vector2d(1, 2))), Eigen::VectorXd(Eigen::Vector2d(1, 2)));
}

TEST(Forward, ZeroTanhLayerGivesZero) {
  Layer<double> layer{Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3), Activation::Tanh};
  Net net({layer});
  EXPECT_TRUE(net.forward(Eigen::VectorXd(Eigen::Vector2d(-4, 7))).isZero(0));
}

TEST(Forward, MatchesScalarLoopOracle) {
  const auto net = random_net(11, {4, 6, 3});
  const std::vector<double> x{0.3, -1.2, 0.7, 2.0};
  const auto got = net.forward(Eigen::Map<const Eigen::VectorXd>(x.data(), 4).eval());
  const auto want = oracle::forward(net, x);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(got(i), want[static_cast<std::size_t>(i)], 1e-14);
}

TEST(Forward, BatchColumnsMatchSingleSamples) {
  const auto net = random_net(3, {3, 5, 5, 2});
  Eigen::MatrixXd batch = Eigen::MatrixXd::Random(3, 7);
  const auto out = net.forward(batch);
  for (int k = 0; k < 7; ++k) EXPECT_TRUE(out.col(k).isApprox(net.forward(Eigen::VectorXd(batch.col(k))), 1e-14));
}

TEST(Forward, IsBitwiseRepeatable) {
  const auto net = random_net(5, {5, 8, 3});
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -1, 1);
  EXPECT_EQ(net.forward(x), net.forward(x));
}

TEST(Forward, RejectsWrongWidth) {
  const auto net = random_net(5, {5, 8, 3});
  EXPECT_THROW(net.forward(Eigen::VectorXd(Eigen::VectorXd::Zero(4))), aeroalloc::DimensionError);
}

TEST(Network, RejectsLayersThatDoNotChain) {
  Layer<double> a{Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3), Activation::Tanh};
  Layer<double> b{Eigen::MatrixXd::Zero(1, 4), Eigen::VectorXd::Zero(1), Activation::Identity};
  EXPECT_THROW(Net({a, b}), aeroalloc::DimensionError);
}

TEST(Network, GlorotStaysInsideBound) {
  const auto net = Net::glorot(std::vector<int>{10, 20}, 1);
  const double bound = std::sqrt(6.0 / 30.0);
  EXPECT_LE(net.layers()[0].weight.cwiseAbs().maxCoeff(), bound);
  EXPECT_TRUE(net.layers()[0].bias.isZero(0));
  EXPECT_EQ(net, Net::glorot(std::vector<int>{10, 20}, 1));
  EXPECT_FALSE(net == Net::glorot(std::vector<int>{10, 20}, 2));
}

TEST(Backward, LinearScalarDerivative) {
  Layer<double> layer{Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, 0.5), Activation::Identity};
  Net net({layer});
  const auto tape = net.backward(Eigen::VectorXd::Constant(1, 3.0), Eigen::VectorXd::Constant(1, 1.0));
  EXPECT_DOUBLE_EQ(tape.weight[0](0, 0), 3.0);
  EXPECT_DOUBLE_EQ(tape.bias[0](0), 1.0);
}

TEST(Backward, ZeroUpstreamGivesZeroTape) {
  const auto net = random_net(8, {3, 4, 2});
  EXPECT_TRUE(net.backward(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(2)).all_zero());
}

TEST(Backward, RejectsUpstreamOfWrongWidth) {
  const auto net = random_net(8, {3, 4, 2});
  EXPECT_THROW(net.backward(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(3)), aeroalloc::DimensionError);
}

TEST(Backward, MatchesCentralDifferencesOnRandomNets) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> width(1, 8);
  std::uniform_int_distribution<int> depth(1, 3);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<int> widths{width(rng)};
    const int d = depth(rng);
    for (int l = 0; l < d; ++l) widths.push_back(width(rng));
    auto net = random_net(static_cast<std::uint64_t>(trial), widths);
    const Eigen::VectorXd x = Eigen::VectorXd::Random(widths.front());
    const Eigen::VectorXd up = Eigen::VectorXd::Random(widths.back());
    const auto tape = net.backward(x, up);
    const auto loss = [&] { return up.dot(net.forward(x)); };
    for (std::size_t i = 0; i < net.parameter_count(); ++i) {
      const double fd = oracle::central_difference(loss, net.parameter(i));
      EXPECT_LT(oracle::relative_error(tape.value(i), fd), 1e-4) << "trial " << trial << " parameter " << i;
    }
  }
}

TEST(Backward, InputGradientMatchesCentralDifferences) {
  const auto net = random_net(17, {4, 6, 3});
  Eigen::VectorXd x = Eigen::VectorXd::Random(4);
  const Eigen::VectorXd up = Eigen::VectorXd::Random(3);
  Net::Trace trace;
  net.forward(Eigen::MatrixXd(x), &trace);
  Eigen::MatrixXd dx;
  net.backward(trace, Eigen::MatrixXd(up), &dx);
  for (int i = 0; i < 4; ++i) {
    const double fd = oracle::central_difference([&] { return up.dot(net.forward(x)); }, x(i));
    EXPECT_LT(oracle::relative_error(dx(i, 0), fd), 1e-4);
  }
}

TEST(Huber, QuadraticBranch) { EXPECT_DOUBLE_EQ(aeroalloc::nn::huber(0.5, 1.0), 0.125); }

TEST(Huber, LinearBranch) { EXPECT_DOUBLE_EQ(aeroalloc::nn::huber(2.0, 1.0), 1.5); }

TEST(Huber, ContinuousAtThreshold) {
  EXPECT_DOUBLE_EQ(aeroalloc::nn::huber(1.0, 1.0), 0.5);
  EXPECT_NEAR(aeroalloc::nn::huber(1.0 + 1e-12, 1.0), 0.5, 1e-11);
  EXPECT_NEAR(aeroalloc::nn::huber(1.0 - 1e-12, 1.0), 0.5, 1e-11);
}

TEST(Huber, RejectsNonPositiveThreshold) {
  EXPECT_THROW(aeroalloc::nn::huber(1.0, 0.0), aeroalloc::InvalidParameter);
  EXPECT_THROW(aeroalloc::nn::huber(1.0, -1.0), aeroalloc::InvalidParameter);
}

TEST(Huber, EvenMonotoneAndSlopeBounded) {
  for (double delta : {0.1, 0.5, 2.0}) {
    double prev = -1.0;
    for (double e = 0.0; e < 5.0; e += 0.01) {
      const double h = aeroalloc::nn::huber(e, delta);
      EXPECT_DOUBLE_EQ(h, aeroalloc::nn::huber(-e, delta));
      EXPECT_GE(h, prev);
      prev = h;
      EXPECT_LE(std::abs(aeroalloc::nn::huber_derivative(e, delta)), delta);
      EXPECT_LE(std::abs(aeroalloc::nn::huber_derivative(-e, delta)), delta);
      double ee = e + 0.3;
      const double fd = oracle::central_difference([&] { return aeroalloc::nn::huber(ee, delta); }, ee, 1e-7);
      EXPECT_NEAR(aeroalloc::nn::huber_derivative(e + 0.3, delta), fd, 1e-6);
    }
  }
}

TEST(Adam, ZeroGradientLeavesParametersAndCountsStep) {
  auto net = random_net(1, {2, 3});
  const auto before = net;
  Adam<double> opt(net);
  opt.step(net, net.zero_tape());
  EXPECT_EQ(net, before);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Layer<double> layer{Eigen::MatrixXd::Constant(1, 1, 0.7), Eigen::VectorXd::Zero(1), Activation::Identity};
  Net net({layer});
  Adam<double> opt(net, {0.1});
  auto tape = net.zero_tape();
  tape.weight[0](0, 0) = 1.0;
  opt.step(net, tape);
  // m_hat = 1, v_hat = 1, update = 0.1 / (1 + 1e-8).
  EXPECT_NEAR(net.layers()[0].weight(0, 0), 0.7 - 0.1, 1e-8);
}

TEST(Adam, QuadraticShrinksMonotonicallyAfterBurnIn) {
  Layer<double> layer{Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Zero(1), Activation::Identity};
  Net net({layer});
  Adam<double> opt(net, {0.01});
  std::vector<double> w;
  for (int i = 0; i < 300; ++i) {
    auto tape = net.zero_tape();
    tape.weight[0](0, 0) = 2.0 * net.layers()[0].weight(0, 0);
    opt.step(net, tape);
    w.push_back(std::abs(net.layers()[0].weight(0, 0)));
  }
  for (std::size_t i = 10; i < w.size(); ++i) EXPECT_LT(w[i], w[i - 1]);
  EXPECT_LT(w.back(), 0.1);
}

TEST(Adam, RejectsMismatchedTape) {
  auto net = random_net(1, {2, 3});
  Adam<double> opt(net);
  const auto other = random_net(1, {2, 4, 3});
  EXPECT_THROW(opt.step(net, other.zero_tape()), aeroalloc::DimensionError);
}

TEST(Serialization, RoundTripIsExact) {
  const auto net = random_net(9, {5, 7, 3});
  const auto doc = aeroalloc::nn::to_json(net);
  EXPECT_EQ(doc.at("version"), "nncore-v1");
  EXPECT_EQ(aeroalloc::nn::network_from_json(doc), net);
  EXPECT_EQ(aeroalloc::nn::network_from_json(nlohmann::json::parse(doc.dump())), net);
}

TEST(Serialization, WeightsAreRowMajor) {
  Layer<double> layer{(Eigen::MatrixXd(2, 3) << 1, 2, 3, 4, 5, 6).finished(), Eigen::VectorXd::Zero(2),
                      Activation::Identity};
  const auto doc = aeroalloc::nn::to_json(Net({layer}));
  EXPECT_EQ(doc.at("layers")[0].at("weight").get<std::vector<double>>(), (std::vector<double>{1, 2, 3, 4, 5, 6}));
}

TEST(Serialization, RejectsWrongVersion) {
  auto doc = aeroalloc::nn::to_json(random_net(9, {2, 2}));
  doc["version"] = "other";
  EXPECT_THROW(aeroalloc::nn::network_from_json(doc), std::exception);
}
