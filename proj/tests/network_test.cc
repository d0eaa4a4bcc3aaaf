#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>

#include "ceqln/network.hpp"
#include "support.hpp"

namespace ceqln {
namespace {

using testing::Gen;
using testing::kind_of;
using Big = boost::multiprecision::cpp_dec_float_50;

NetworkSpec single_unit(Activation a) {
  NetworkSpec spec;
  spec.hidden.push_back(LayerSpec{{a}});
  spec.basis_count = 1;
  return spec;
}

// f0 = (-6.56 t + 0.5) x (1.85 t - 0.97), copied to the output.
std::pair<NetworkSpec, NetworkParams> product_unit() {
  NetworkSpec spec = single_unit(Activation::kProduct);
  NetworkParams p = zeros_like(spec);
  p.hidden[0].W << -6.56, 1.85;
  p.hidden[0].b << 0.5, -0.97;
  p.output.W << 1.0;
  return {spec, p};
}

TEST(Activations, SigmoidMatchesHighPrecision) {
  for (int i = 0; i <= 4000; ++i) {
    const double z = -20.0 + 0.01 * i;
    const Big ref = Big(1) / (Big(1) + boost::multiprecision::exp(-Big(z)));
    EXPECT_NEAR(sigmoid(z), ref.convert_to<double>(), 1e-12) << z;
  }
}

TEST(Activations, SechMatchesHighPrecision) {
  for (int i = 0; i <= 4000; ++i) {
    const double z = -20.0 + 0.01 * i;
    const Big bz(z);
    const Big ref = Big(2) / (boost::multiprecision::exp(bz) + boost::multiprecision::exp(-bz));
    EXPECT_NEAR(sech(z), ref.convert_to<double>(), 1e-12) << z;
  }
}

TEST(Activations, ExtremeArgumentsStayFinite) {
  for (double z : {-1e308, -800.0, -710.0, 710.0, 800.0, 1e308}) {
    EXPECT_TRUE(std::isfinite(sigmoid(z))) << z;
    EXPECT_TRUE(std::isfinite(sech(z))) << z;
    EXPECT_GE(sech(z), 0.0);
  }
  EXPECT_EQ(sigmoid(800.0), 1.0);
  EXPECT_EQ(sigmoid(-800.0), 0.0);
  EXPECT_EQ(sech(800.0), 0.0);
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_DOUBLE_EQ(sech(0.0), 1.0);
}

TEST(Activations, NamesRoundTrip) {
  for (int k = 0; k < 6; ++k) {
    const auto a = static_cast<Activation>(k);
    EXPECT_EQ(activation_from_string(to_string(a)), a);
  }
  EXPECT_EQ(kind_of([] { activation_from_string("tanh"); }), ErrorKind::kConfig);
}

TEST(LayerSpec, PreWidthCountsProductsTwice) {
  const LayerSpec layer = repeat_layer(2, {Activation::kIdentity, Activation::kSine, Activation::kCosine,
                                           Activation::kSigmoid, Activation::kSech, Activation::kProduct});
  EXPECT_EQ(layer.output_width(), 12);
  EXPECT_EQ(layer.pre_width(), 14);
  EXPECT_EQ(layer.activations[6], Activation::kIdentity);
  EXPECT_EQ(layer.activations[11], Activation::kProduct);
}

TEST(Forward, IdentityChain) {
  const NetworkSpec spec = single_unit(Activation::kIdentity);
  NetworkParams p = zeros_like(spec);
  p.hidden[0].W << 1.0;
  p.output.W << 1.0;
  VectorXd t(1);
  t << 0.3;
  EXPECT_DOUBLE_EQ(forward(p, spec, t).values(0, 0), 0.3);
}

TEST(Forward, SigmoidAndSechAtZero) {
  VectorXd t(1);
  t << 0.7;
  for (auto [a, expected] : {std::pair{Activation::kSigmoid, 0.5}, std::pair{Activation::kSech, 1.0}}) {
    const NetworkSpec spec = single_unit(a);
    NetworkParams p = zeros_like(spec);
    p.output.W << 1.0;
    EXPECT_DOUBLE_EQ(forward(p, spec, t).values(0, 0), expected);
  }
}

TEST(Forward, ProductOfTwoSlots) {
  auto [spec, p] = product_unit();
  VectorXd t(2);
  t << 0.0, 0.5;
  const MatrixXd v = forward(p, spec, t).values;
  EXPECT_NEAR(v(0, 0), -0.485, 1e-15);
  EXPECT_NEAR(v(0, 1), (-6.56 * 0.5 + 0.5) * (1.85 * 0.5 - 0.97), 1e-15);
}

TEST(Forward, TimeSeparableBitwise) {
  Gen gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const NetworkSpec spec = testing::random_spec(gen, 3, 6, gen.integer(1, 4));
    const NetworkParams p = init_uniform(spec, {InitRange{{-2, 2}, {-1, 1}}}, 100 + trial);
    const VectorXd t = gen.vector(17, 0.0, 1.0);
    const BasisEvaluations all = forward(p, spec, t);
    ASSERT_EQ(all.values.rows(), spec.basis_count);
    ASSERT_EQ(all.values.cols(), 17);
    for (Index n = 0; n < t.size(); ++n) {
      const MatrixXd one = forward(p, spec, t.segment(n, 1)).values;
      for (Index i = 0; i < one.rows(); ++i) EXPECT_EQ(one(i, 0), all.values(i, n));
    }
    EXPECT_EQ(forward(p, spec, t).values, all.values);
  }
}

TEST(Forward, ShapeErrorsNameTheLayer) {
  NetworkSpec spec;
  spec.hidden = {LayerSpec{{Activation::kSine, Activation::kProduct}}, LayerSpec{{Activation::kCosine}}};
  spec.basis_count = 2;
  NetworkParams p = zeros_like(spec);
  EXPECT_EQ(p.hidden[0].W.rows(), 3);
  EXPECT_EQ(p.hidden[1].W.cols(), 2);
  EXPECT_NO_THROW(validate(p, spec));

  NetworkParams bad = p;
  bad.hidden[1].W = MatrixXd::Zero(1, 3);
  try {
    forward(bad, spec, VectorXd::Zero(2));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("hidden layer 1"), std::string::npos);
  }
  bad = p;
  bad.output.b = VectorXd::Zero(3);
  EXPECT_EQ(kind_of([&] { validate(bad, spec); }), ErrorKind::kConfig);
  bad = p;
  bad.hidden[0].b(0) = std::nan("");
  EXPECT_EQ(kind_of([&] { validate(bad, spec); }), ErrorKind::kConfig);
  bad = p;
  bad.hidden.pop_back();
  EXPECT_EQ(kind_of([&] { validate(bad, spec); }), ErrorKind::kConfig);
}

TEST(Params, FlattenAssignRoundTrip) {
  Gen gen(5);
  const NetworkSpec spec = testing::random_spec(gen, 3, 5, 3);
  const NetworkParams p = init_uniform(spec, {InitRange{}}, 9);
  const VectorXd flat = p.flatten();
  EXPECT_EQ(flat.size(), p.parameter_count());
  NetworkParams q = zeros_like(spec);
  q.assign(flat);
  EXPECT_TRUE(q == p);
  EXPECT_EQ(kind_of([&] { q.assign(VectorXd::Zero(flat.size() + 1)); }), ErrorKind::kConfig);
}

TEST(Init, DegenerateRangeGivesZeros) {
  Gen gen(3);
  const NetworkSpec spec = testing::random_spec(gen, 2, 4, 2);
  const NetworkParams p = init_uniform(spec, {InitRange{{0, 0}, {0, 0}}}, 1);
  EXPECT_TRUE(p == zeros_like(spec));
}

TEST(Init, DeterministicForSeed) {
  Gen gen(4);
  const NetworkSpec spec = testing::random_spec(gen, 3, 6, 4);
  EXPECT_TRUE(init_uniform(spec, {InitRange{}}, 42) == init_uniform(spec, {InitRange{}}, 42));
  EXPECT_FALSE(init_uniform(spec, {InitRange{}}, 42) == init_uniform(spec, {InitRange{}}, 43));
}

TEST(Init, EntriesWithinPerLayerRanges) {
  NetworkSpec spec;
  spec.hidden = {repeat_layer(40, {Activation::kSine, Activation::kProduct}),
                 repeat_layer(100, {Activation::kCosine})};
  spec.basis_count = 50;
  const std::vector<InitRange> ranges{{{-5, 5}, {-1, 1}}, {{-2, 2}, {0, 0.5}}, {{-3, -1}, {1, 2}}};
  const NetworkParams p = init_uniform(spec, ranges, 7);
  ASSERT_GE(p.parameter_count(), 10000);
  auto check = [](const DenseLayer& layer, const InitRange& r) {
    EXPECT_GE(layer.W.minCoeff(), r.weight.lo);
    EXPECT_LE(layer.W.maxCoeff(), r.weight.hi);
    EXPECT_GE(layer.b.minCoeff(), r.bias.lo);
    EXPECT_LE(layer.b.maxCoeff(), r.bias.hi);
  };
  check(p.hidden[0], ranges[0]);
  check(p.hidden[1], ranges[1]);
  check(p.output, ranges[2]);
  // 8000 second-layer weights cover the range.
  EXPECT_LT(p.hidden[1].W.minCoeff(), -1.9);
  EXPECT_GT(p.hidden[1].W.maxCoeff(), 1.9);
}

TEST(Init, RangeErrors) {
  const NetworkSpec spec = single_unit(Activation::kSine);
  EXPECT_EQ(kind_of([&] { init_uniform(spec, {InitRange{{1, 0}, {0, 0}}}, 0); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([&] { init_uniform(spec, {}, 0); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([&] { init_uniform(spec, {InitRange{}, InitRange{}, InitRange{}}, 0); }), ErrorKind::kConfig);
}

TEST(Pullback, IdentityChainSumsTimes) {
  const NetworkSpec spec = single_unit(Activation::kIdentity);
  NetworkParams p = zeros_like(spec);
  p.hidden[0].W << 1.0;
  p.output.W << 1.0;
  VectorXd t(3);
  t << 0.1, 0.4, 0.9;
  auto [basis, pullback] = forward_with_gradients(p, spec, t);
  const NetworkParams g = pullback(MatrixXd::Ones(1, 3));
  EXPECT_NEAR(g.hidden[0].W(0, 0), 1.4, 1e-15);
  EXPECT_NEAR(g.hidden[0].b(0), 3.0, 1e-15);
  EXPECT_NEAR(g.output.W(0, 0), 1.4, 1e-15);
  EXPECT_NEAR(g.output.b(0), 3.0, 1e-15);
}

TEST(Pullback, ZeroCotangentGivesZeroGradient) {
  Gen gen(8);
  const NetworkSpec spec = testing::random_spec(gen, 3, 5, 3);
  const NetworkParams p = init_uniform(spec, {InitRange{}}, 1);
  auto [basis, pullback] = forward_with_gradients(p, spec, gen.vector(6, 0, 1));
  EXPECT_EQ(pullback(MatrixXd::Zero(3, 6)).flatten().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(kind_of([&] { pullback(MatrixXd::Zero(2, 6)); }), ErrorKind::kConfig);
}

TEST(Pullback, ProductRoutesToBothFactors) {
  auto [spec, p] = product_unit();
  VectorXd t(1);
  t << 0.5;
  auto [basis, pullback] = forward_with_gradients(p, spec, t);
  const NetworkParams g = pullback(MatrixXd::Ones(1, 1));
  const double z0 = -6.56 * 0.5 + 0.5, z1 = 1.85 * 0.5 - 0.97;
  EXPECT_NEAR(g.hidden[0].b(0), z1, 1e-15);
  EXPECT_NEAR(g.hidden[0].b(1), z0, 1e-15);
  EXPECT_NEAR(g.hidden[0].W(0, 0), z1 * 0.5, 1e-15);
  EXPECT_NEAR(g.hidden[0].W(1, 0), z0 * 0.5, 1e-15);
}

// <C, forward(theta)> is the scalar whose gradient the pullback returns.
TEST(Pullback, MatchesCentralDifferences) {
  Gen gen(2024);
  int checked = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const Index basis_count = gen.integer(1, 4);
    const NetworkSpec spec = testing::random_spec(gen, 3, 4, basis_count);
    const NetworkParams p = init_uniform(spec, {InitRange{{-1.5, 1.5}, {-1, 1}}}, 500 + trial);
    const VectorXd t = gen.vector(gen.integer(1, 6), 0.0, 1.0);
    const MatrixXd c = gen.matrix(basis_count, t.size());
    auto [basis, pullback] = forward_with_gradients(p, spec, t);
    const VectorXd g = pullback(c).flatten();
    const VectorXd theta = p.flatten();
    const double h = 1e-6;
    NetworkParams probe = p;
    for (Index i = 0; i < theta.size(); ++i) {
      VectorXd tp = theta, tm = theta;
      tp(i) += h;
      tm(i) -= h;
      probe.assign(tp);
      const double fp = (c.array() * forward(probe, spec, t).values.array()).sum();
      probe.assign(tm);
      const double fm = (c.array() * forward(probe, spec, t).values.array()).sum();
      const double fd = (fp - fm) / (2 * h);
      const double diff = std::abs(fd - g(i));
      if (diff > 1e-8) EXPECT_LE(diff / std::max(std::abs(fd), std::abs(g(i))), 1e-5) << trial << " " << i;
    }
    ++checked;
  }
  EXPECT_GE(checked, 20);
}

}  // namespace
}  // namespace ceqln
