#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "perimeter/errors.hpp"
#include "perimeter/mlp.hpp"

using namespace perimeter;

namespace {

double half_sq(const Eigen::MatrixXd& y) { return 0.5 * y.squaredNorm(); }

}  // namespace

TEST(Mlp, ShapesAndParameterCount) {
  std::mt19937_64 rng(1);
  Mlp net({3, 5, 4, 2}, OutputActivation::Identity, rng);
  EXPECT_EQ(net.input_size(), 3);
  EXPECT_EQ(net.output_size(), 2);
  EXPECT_EQ(net.parameter_count(), static_cast<std::size_t>(3 * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2));
  const Eigen::MatrixXd y = net.forward(Eigen::MatrixXd::Random(3, 7));
  EXPECT_EQ(y.rows(), 2);
  EXPECT_EQ(y.cols(), 7);
}

TEST(Mlp, FanInInitialisation) {
  std::mt19937_64 rng(2);
  Mlp net({16, 8, 1}, OutputActivation::Identity, rng, 1e-3);
  EXPECT_LE(net.layers()[0].weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(16.0));
  EXPECT_LE(net.layers()[1].weight.cwiseAbs().maxCoeff(), 1e-3 / std::sqrt(8.0));
}

TEST(Mlp, BoundedOutputRange) {
  std::mt19937_64 rng(3);
  Mlp net({2, 4, 2}, OutputActivation::Bounded, rng, 1.0, 0.1, 0.9);
  const Eigen::MatrixXd y = net.forward(prop::random_matrix(2, 200, rng, 100.0));
  EXPECT_GE(y.minCoeff(), 0.1);
  EXPECT_LE(y.maxCoeff(), 0.9);
  net.set_parameters(std::vector<double>(net.parameter_count(), 0.0));
  EXPECT_NEAR(net.forward(Eigen::MatrixXd::Ones(2, 1))(0, 0), 0.5, 1e-15);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (auto act : {OutputActivation::Identity, OutputActivation::Bounded}) {
    Mlp net({3, 6, 5, 2}, act, rng, 1.0, -1.0, 2.0);
    const Eigen::MatrixXd x = prop::random_matrix(3, 4, rng);
    Mlp::Tape tape;
    const Eigen::MatrixXd y = net.forward(x, tape);
    MlpGradients g = net.zero_gradients();
    const Eigen::MatrixXd dx = net.backward(tape, y, &g);

    const auto num = prop::parameter_fd(net, [&] { return half_sq(net.forward(x)); });
    EXPECT_LT(prop::max_relative_error(Mlp::flatten(g), num), 1e-4);

    std::vector<double> ana, fd;
    for (int i = 0; i < x.size(); ++i) {
      Eigen::MatrixXd up = x, down = x;
      up.data()[i] += 1e-5;
      down.data()[i] -= 1e-5;
      fd.push_back((half_sq(net.forward(up)) - half_sq(net.forward(down))) / 2e-5);
      ana.push_back(dx.data()[i]);
    }
    EXPECT_LT(prop::max_relative_error(ana, fd), 1e-4);
  }
}

TEST(Mlp, ParameterRoundTrip) {
  std::mt19937_64 rng(5);
  Mlp a({2, 3, 1}, OutputActivation::Identity, rng);
  Mlp b({2, 3, 1}, OutputActivation::Identity, rng);
  b.set_parameters(a.parameters());
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_TRUE(a.same_architecture(b));
  EXPECT_THROW(b.set_parameters(std::vector<double>(3, 0.0)), DomainError);
}

TEST(Mlp, JsonRoundTrip) {
  std::mt19937_64 rng(6);
  Mlp a({4, 8, 2}, OutputActivation::Bounded, rng, 1e-3, 0.1, 0.9);
  const Mlp b = Mlp::from_json(a.to_json());
  EXPECT_TRUE(a.same_architecture(b));
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_EQ(b.lo(), 0.1);
  EXPECT_EQ(b.hi(), 0.9);
  EXPECT_ANY_THROW(Mlp::from_json("{\"format\": \"other\"}"));
}

TEST(Mlp, FiniteCheck) {
  std::mt19937_64 rng(7);
  Mlp a({2, 2, 1}, OutputActivation::Identity, rng);
  EXPECT_TRUE(a.finite());
  a.layer(0).weight(0, 0) = std::nan("");
  EXPECT_FALSE(a.finite());
}

TEST(Adam, FirstStepHasLearningRateMagnitude) {
  std::mt19937_64 rng(8);
  Mlp net({1, 1}, OutputActivation::Identity, rng);
  const auto before = net.parameters();
  Adam opt(net);
  MlpGradients g = net.zero_gradients();
  g.weight[0](0, 0) = 3.0;
  g.bias[0](0) = -0.5;
  opt.descend(net, g, 0.01);
  const auto after = net.parameters();
  EXPECT_NEAR(after[0] - before[0], -0.01, 1e-8);
  EXPECT_NEAR(after[1] - before[1], 0.01, 1e-7);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, MinimisesQuadratic) {
  std::mt19937_64 rng(9);
  Mlp net({2, 1}, OutputActivation::Identity, rng);
  const Eigen::MatrixXd x = prop::random_matrix(2, 16, rng);
  const Eigen::MatrixXd target = (Eigen::RowVector2d(1.5, -0.7) * x).array() + 0.3;
  Adam opt(net);
  auto loss = [&] { return (net.forward(x) - target).squaredNorm(); };
  const double start = loss();
  for (int i = 0; i < 2000; ++i) {
    Mlp::Tape tape;
    const Eigen::MatrixXd y = net.forward(x, tape);
    MlpGradients g = net.zero_gradients();
    net.backward(tape, 2.0 * (y - target), &g);
    opt.descend(net, g, 0.01);
  }
  EXPECT_LT(loss(), 1e-6 * start);
}
