#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ceqln/symbolic.hpp"
#include "ceqln/synthetic.hpp"
#include "ceqln/training.hpp"
#include "support.hpp"

namespace ceqln {
namespace {

using testing::Gen;
using testing::kind_of;

bool has_line(const std::vector<std::string>& lines, const std::string& line) {
  return std::find(lines.begin(), lines.end(), line) != lines.end();
}

TEST(FormatCoefficient, TrimsZeros) {
  EXPECT_EQ(format_coefficient(2.5, 3), "2.5");
  EXPECT_EQ(format_coefficient(-0.7624, 3), "-0.762");
  EXPECT_EQ(format_coefficient(3.0, 3), "3");
  EXPECT_EQ(format_coefficient(-0.0001, 3), "0");
  EXPECT_EQ(format_coefficient(158.07, 2), "158.07");
}

TEST(Export, IdentityUnit) {
  NetworkSpec spec;
  spec.hidden.push_back(LayerSpec{{Activation::kIdentity}});
  spec.basis_count = 1;
  NetworkParams p = zeros_like(spec);
  p.hidden[0].W << 2.0;
  p.hidden[0].b << -1.0;
  p.output.W << 1.0;
  const std::vector<std::string> lines = export_expressions(p, spec, 3);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "f0 = (2 t - 1)");
  EXPECT_EQ(lines[1], "phi1 = f0");
}

TEST(Export, LetterFixtureExpressions) {
  const AppendixFixture fx = appendix_fixture();
  const std::vector<std::string> lines = export_expressions(fx.params, fx.spec, 3);
  EXPECT_TRUE(has_line(lines, "f2 = sin(-2.426 t + 1.163)"));
  EXPECT_TRUE(has_line(lines, "f0 = (-6.56 t + 0.5)\xC3\x97(1.85 t - 0.97)"));
  EXPECT_EQ(std::count_if(lines.begin(), lines.end(), [](const std::string& l) { return l.rfind("phi", 0) == 0; }), 6);
}

TEST(Parse, GrammarBasics) {
  const ExpressionProgram prog = ExpressionProgram::parse({
      "a = 2 t - 1",
      "b = sin(t) * cos(t) + sigma(0) + sech(0)",
      "c = (a)\xC3\x97(b) - -1e-1",
      "phi1 = 2 a + 3",
      "phi2 = c",
  });
  const auto v = prog.evaluate(0.25);
  EXPECT_DOUBLE_EQ(v.at("a"), -0.5);
  EXPECT_DOUBLE_EQ(v.at("b"), std::sin(0.25) * std::cos(0.25) + 1.5);
  EXPECT_DOUBLE_EQ(v.at("c"), -0.5 * v.at("b") + 0.1);
  const VectorXd basis = prog.basis(0.25);
  ASSERT_EQ(basis.size(), 2);
  EXPECT_DOUBLE_EQ(basis(0), 2.0);
}

TEST(Parse, RejectsMalformedInput) {
  for (const std::string& bad : {"x = ", "x = sin(t", "x = y + 1", "= t", "x = 1 +* 2", "x = tan(t)"}) {
    EXPECT_EQ(kind_of([&] { ExpressionProgram::parse({bad}); }), ErrorKind::kInput) << bad;
  }
}

TEST(RoundTrip, ExportedProgramMatchesForward) {
  Gen gen(99);
  for (int trial = 0; trial < 20; ++trial) {
    const NetworkSpec spec = testing::random_spec(gen, 2, 5, gen.integer(1, 4));
    const NetworkParams p = init_uniform(spec, {InitRange{{-2, 2}, {-1, 1}}}, 300 + trial);
    for (int digits : {4, 6, 8}) {
      const ExpressionProgram prog = ExpressionProgram::parse(export_expressions(p, spec, digits));
      const VectorXd t = gen.vector(100, 0.0, 1.0);
      const MatrixXd ref = forward(p, spec, t).values;
      const double tol = std::pow(10.0, -digits + 2);
      for (Index n = 0; n < t.size(); ++n) {
        const VectorXd got = prog.basis(t(n));
        ASSERT_EQ(got.size(), ref.rows());
        EXPECT_LE((got - ref.col(n)).cwiseAbs().maxCoeff(), tol) << trial << " digits " << digits;
      }
    }
  }
}

TEST(Verify, LetterFixtureResidualsWithinRoundingTolerance) {
  const AppendixFixture fx = appendix_fixture();
  const ConstraintReport report = verify_constraints(fx.params, fx.spec, fx.w, fx.constraints, fx.dims, 1.0);
  ASSERT_EQ(report.rows.size(), 4u);
  EXPECT_TRUE(report.pass);
  for (const RowResidual& row : report.rows) EXPECT_LE(row.residual, 1.0);
}

TEST(Verify, LetterFixtureBasisAtZeroMatchesExpressions) {
  const AppendixFixture fx = appendix_fixture();
  const ExpressionProgram prog = ExpressionProgram::parse(export_expressions(fx.params, fx.spec, 17));
  EXPECT_NEAR(prog.evaluate(0.0).at("f0"), -0.485, 1e-12);
  const MatrixXd phi = network_design_rows(fx.params, fx.spec)(VectorXd::Zero(1));
  ASSERT_EQ(phi.cols(), 7);
  EXPECT_EQ(phi(0, 0), 1.0);
  EXPECT_LE((phi.row(0).tail(6).transpose() - prog.basis(0.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Verify, TrainedModelSelfConsistent) {
  const SyntheticTask toy = generate_synthetic(Task::kToy1d, 0.0, 2);
  TrainingConfig c = toy.config;
  c.epochs = 10;
  const FitResult fit = train(c, toy.data, toy.training);
  const ConstraintReport report =
      verify_constraints(fit.params, c.network, fit.fits[0].solution.w, toy.training[0], 1, 1e-6);
  EXPECT_TRUE(report.pass) << report.max_residual;
}

TEST(Fixture, RejectsMalformedDocuments) {
  EXPECT_EQ(kind_of([] { load_appendix_fixture("{"); }), ErrorKind::kInput);
  EXPECT_EQ(kind_of([] { load_appendix_fixture("{}"); }), ErrorKind::kConfig);
}

}  // namespace
}  // namespace ceqln
