#include <gtest/gtest.h>

#include <cmath>

#include "drlpa/verify.hpp"

using namespace drlpa;

namespace {

Layer make_layer(Matrix w, Vector b, Activation a, double scale = 1.0) {
  Layer l;
  l.w = std::move(w);
  l.b = std::move(b);
  l.activation = a;
  l.scale = scale;
  return l;
}

// Scalar Adam recursion written out by hand.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double theta, double g, double lr) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    return theta - lr * mh / (std::sqrt(vh) + 1e-8);
  }
};

}  // namespace

TEST(Mlp, ZeroLinearIsZero) {
  Mlp net({make_layer(Matrix::Zero(3, 4), Vector::Zero(3), Activation::kLinear)});
  const std::vector<double> x = {1.0, -2.0, 3.0, 4.0};
  for (double y : net.predict(x)) EXPECT_EQ(y, 0.0);
}

TEST(Mlp, SoftmaxIsADistribution) {
  Rng rng(1);
  Mlp net(6, {{16, Activation::kRelu}, {10, Activation::kSoftmax}}, rng);
  std::normal_distribution<double> n(0.0, 30.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(6);
    for (double& v : x) v = n(rng);
    const auto p = net.predict(x);
    double sum = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Mlp, ScaledSigmoidAtZero) {
  const double p_max = 6310.0;
  Mlp net({make_layer(Matrix::Zero(1, 2), Vector::Zero(1), Activation::kScaledSigmoid, p_max)});
  const std::vector<double> x = {5.0, -1.0};
  EXPECT_DOUBLE_EQ(net.predict(x)[0], 3155.0);
}

TEST(Mlp, LinearLayerClosedFormGradients) {
  Matrix w(2, 3);
  w << 1, 2, 3, -1, 0.5, 4;
  Vector b(2);
  b << 0.1, -0.2;
  Mlp net({make_layer(w, b, Activation::kLinear)});
  const std::vector<double> x = {0.3, -0.7, 2.0};
  const std::vector<double> u = {1.5, -2.0};
  ForwardCache cache;
  net.forward(x, cache);
  auto tape = net.make_tape();
  net.backward(cache, u, tape);
  const Vector xv = Mlp::as_column(x);
  const Vector uv = Mlp::as_column(u);
  EXPECT_LT((tape.dw[0] - uv * xv.transpose()).norm(), 1e-14);
  EXPECT_LT((tape.db[0] - uv).norm(), 1e-14);
  EXPECT_LT((tape.input_grad.col(0) - w.transpose() * uv).norm(), 1e-14);
}

TEST(Mlp, ReluBlocksNegativeUnits) {
  Matrix w(2, 1);
  w << 1.0, -1.0;
  Mlp net({make_layer(w, Vector::Zero(2), Activation::kRelu)});
  const std::vector<double> x = {2.0};
  ForwardCache cache;
  net.forward(x, cache);
  auto tape = net.make_tape();
  const std::vector<double> u = {1.0, 1.0};
  net.backward(cache, u, tape);
  EXPECT_DOUBLE_EQ(tape.dw[0](0, 0), 2.0);
  EXPECT_DOUBLE_EQ(tape.dw[0](1, 0), 0.0);
  EXPECT_DOUBLE_EQ(tape.db[0](1), 0.0);
}

TEST(Mlp, IndependentFiniteDifferenceOnDeepNetwork) {
  Rng rng(2);
  Mlp net(5, {{7, Activation::kRelu}, {6, Activation::kRelu}, {3, Activation::kLinear}}, rng);
  for (auto& l : net.mutable_layers()) l.b.setConstant(0.05);
  Matrix x(5, 2);
  x.setRandom();
  const Matrix u = Matrix::Constant(3, 2, 1.0);
  auto loss = [&](const Mlp& n) {
    ForwardCache c;
    return n.forward(x, c).sum();
  };
  ForwardCache cache;
  net.forward(x, cache);
  auto tape = net.make_tape();
  net.backward(cache, u, tape);
  const double h = 1e-6;
  for (std::size_t li = 0; li < net.layers().size(); ++li)
    for (Eigen::Index r = 0; r < net.layers()[li].w.rows(); ++r)
      for (Eigen::Index c = 0; c < net.layers()[li].w.cols(); ++c) {
        Mlp p = net, m = net;
        p.mutable_layers()[li].w(r, c) += h;
        m.mutable_layers()[li].w(r, c) -= h;
        const double fd = (loss(p) - loss(m)) / (2 * h);
        EXPECT_NEAR(tape.dw[li](r, c), fd, 1e-6 * std::max(1.0, std::abs(fd)));
      }
}

TEST(Mlp, RandomNetworkGradientProperty) {
  GradientCheckOptions opt;
  const auto rep = check_network_gradients(opt);
  EXPECT_TRUE(rep.passed);
  EXPECT_LE(rep.max_param_error, 1e-4);
  EXPECT_LE(rep.max_input_error, 1e-4);
  EXPECT_EQ(rep.networks, opt.networks);
}

TEST(Mlp, PlantedGradientBugIsCaught) {
  GradientCheckOptions opt;
  opt.networks = 4;
  opt.corrupt = [](GradientTape& t) { t.dw.front() *= 1.01; };
  EXPECT_FALSE(check_network_gradients(opt).passed);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Mlp net({make_layer(Matrix::Constant(1, 1, 0.5), Vector::Zero(1), Activation::kLinear)});
  auto tape = net.make_tape();
  tape.dw[0](0, 0) = 1.0;
  net.adam_step(tape, 1e-3);
  EXPECT_NEAR(net.layers()[0].w(0, 0), 0.5 - 1e-3, 1e-10);
  EXPECT_DOUBLE_EQ(net.layers()[0].b(0), 0.0);
  EXPECT_EQ(net.adam_steps(), 1);
}

TEST(Adam, MatchesScalarRecursion) {
  Mlp net({make_layer(Matrix::Constant(1, 1, 0.5), Vector::Zero(1), Activation::kLinear)});
  ScalarAdam oracle;
  double theta = 0.5;
  const double grads[] = {1.0, -0.3, 2.5, 0.0, 0.7, -4.0};
  for (double g : grads) {
    auto tape = net.make_tape();
    tape.dw[0](0, 0) = g;
    net.adam_step(tape, 1e-2);
    theta = oracle.step(theta, g, 1e-2);
    EXPECT_NEAR(net.layers()[0].w(0, 0), theta, 1e-14);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Rng rng(3);
  Mlp net(4, {{5, Activation::kRelu}, {2, Activation::kLinear}}, rng);
  const Mlp before = net;
  net.adam_step(net.make_tape(), 1e-3);
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    EXPECT_EQ(net.layers()[i].w, before.layers()[i].w);
    EXPECT_EQ(net.layers()[i].b, before.layers()[i].b);
  }
  EXPECT_EQ(net.adam_steps(), 1);
}

TEST(Mlp, SameSeedSameInit) {
  Rng a(4), b(4);
  Mlp x(48, {{64, Activation::kRelu}, {128, Activation::kRelu}, {10, Activation::kSoftmax}}, a);
  Mlp y(48, {{64, Activation::kRelu}, {128, Activation::kRelu}, {10, Activation::kSoftmax}}, b);
  for (std::size_t i = 0; i < x.layers().size(); ++i) EXPECT_EQ(x.layers()[i].w, y.layers()[i].w);
}

TEST(Mlp, JsonRoundTripKeepsOptimizerState) {
  Rng rng(5);
  Mlp net(3, {{4, Activation::kRelu}, {1, Activation::kScaledSigmoid, 10.0}}, rng);
  auto tape = net.make_tape();
  tape.dw[0].setConstant(0.3);
  net.adam_step(tape, 1e-3);
  Mlp back = Mlp::from_json(nlohmann::json::parse(net.to_json().dump()));
  EXPECT_EQ(back.adam_steps(), 1);
  net.adam_step(tape, 1e-3);
  back.adam_step(tape, 1e-3);
  const std::vector<double> x = {0.1, 0.2, 0.3};
  EXPECT_DOUBLE_EQ(net.predict(x)[0], back.predict(x)[0]);
  EXPECT_EQ(back.layers()[1].scale, 10.0);
}

TEST(Mlp, RejectsShapeErrors) {
  Rng rng(6);
  Mlp net(3, {{2, Activation::kLinear}}, rng);
  const std::vector<double> bad = {1.0, 2.0};
  EXPECT_THROW(net.predict(bad), std::invalid_argument);
  ForwardCache empty;
  auto tape = net.make_tape();
  const std::vector<double> u = {1.0, 1.0};
  EXPECT_THROW(net.backward(empty, u, tape), std::logic_error);
}
